#include "bp/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "bp/hash.hpp"

namespace bp {

namespace {

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::vector<unsigned char>& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

struct Reader {
  const std::vector<unsigned char>& buf;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw std::runtime_error("checkpoint: truncated file");
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(buf[pos] | (buf[pos + 1] << 8));
    pos += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[pos + i]) << (8 * i);
    pos += 8;
    return v;
  }
  float f32() {
    std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(buf.data() + pos), n);
    pos += n;
    return s;
  }
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const TensorMap& tensors) {
  std::vector<unsigned char> out;
  out.insert(out.end(), {'B', 'P', 'R', 'M'});
  put_u16(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (int d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
    for (std::size_t i = 0; i < t.size(); ++i) put_f32(out, static_cast<float>(t[i]));
  }
  Fnv1a h;
  h.update(out.data(), out.size());
  put_u64(out, h.digest());

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("checkpoint: cannot open '" + path.string() + "' for writing");
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("checkpoint: write failed for '" + path.string() + "'");
}

TensorMap load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open '" + path.string() + "'");
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(f)),
                                 std::istreambuf_iterator<char>());
  if (buf.size() < 4 + 2 + 4 + 8) throw std::runtime_error("checkpoint: file too small");

  Fnv1a h;
  h.update(buf.data(), buf.size() - 8);
  Reader tail{buf, buf.size() - 8};
  if (tail.u64() != h.digest())
    throw std::runtime_error("checkpoint: checksum mismatch in '" + path.string() + "'");

  Reader r{buf};
  if (r.str(4) != "BPRM") throw std::runtime_error("checkpoint: bad magic in '" + path.string() + "'");
  const std::uint16_t version = r.u16();
  if (version != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  const std::uint32_t count = r.u32();
  TensorMap tensors;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = r.u32();
    std::string name = r.str(name_len);
    const std::uint32_t rank = r.u32();
    std::vector<int> shape;
    std::size_t n = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      shape.push_back(static_cast<int>(r.u32()));
      n *= static_cast<std::size_t>(shape.back());
    }
    std::vector<double> data(n);
    for (std::size_t j = 0; j < n; ++j) data[j] = static_cast<double>(r.f32());
    if (!tensors.emplace(std::move(name), Tensor(std::move(shape), std::move(data))).second)
      throw std::runtime_error("checkpoint: duplicate tensor name");
  }
  if (r.pos != buf.size() - 8) throw std::runtime_error("checkpoint: trailing bytes");
  return tensors;
}

Tensor pack_u64(std::uint64_t value) {
  Tensor t({4});
  for (int i = 0; i < 4; ++i) t[static_cast<std::size_t>(i)] = static_cast<double>((value >> (16 * i)) & 0xffff);
  return t;
}

std::uint64_t unpack_u64(const Tensor& t) {
  if (t.size() != 4) throw std::invalid_argument("unpack_u64: expected 4 lanes");
  std::uint64_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint64_t>(static_cast<std::uint16_t>(t[static_cast<std::size_t>(i)]))
         << (16 * i);
  return v;
}

}  // namespace bp
