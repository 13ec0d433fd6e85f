#pragma once

#include <filesystem>

#include "bp/graph.hpp"

namespace bp {

// Named-tensor container, bit-exact layout:
//   magic "BPRM" | version u16 | tensor count u32 |
//   per tensor: name length u32, UTF-8 name, rank u32, dims u32 each,
//               payload as little-endian 32-bit reals |
//   trailing u64 FNV-1a checksum over all preceding bytes.
// Values are quantized to 32 bits on save; load reproduces shapes exactly
// and values to that precision. The checksum is verified on load.
inline constexpr std::uint16_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const TensorMap& tensors);
TensorMap load_checkpoint(const std::filesystem::path& path);

// A u64 spread over four u16 lanes so it survives the f32 payload exactly.
Tensor pack_u64(std::uint64_t value);
std::uint64_t unpack_u64(const Tensor& t);

}  // namespace bp
