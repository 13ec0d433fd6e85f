#pragma once

#include <cstdint>
#include <cstring>
#include <string_view>

namespace bp {

// Incremental FNV-1a (64-bit). Used for content hashes of weight sets and
// for deriving independent RNG streams.
class Fnv1a {
 public:
  void update(const void* bytes, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < n; ++i) {
      state_ ^= p[i];
      state_ *= 1099511628211ULL;
    }
  }
  void update(std::string_view s) { update(s.data(), s.size()); }
  void update_u32(std::uint32_t v) { update(&v, sizeof v); }
  void update_u64(std::uint64_t v) { update(&v, sizeof v); }
  void update_f32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    update_u32(bits);
  }
  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = 14695981039346656037ULL;
};

inline std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t stream) {
  Fnv1a h;
  h.update_u64(seed);
  h.update_u64(stream);
  return h.digest();
}

}  // namespace bp
