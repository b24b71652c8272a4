#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>

#include "capnet/errors.hpp"
#include "capnet/tensor.hpp"

namespace capnet {

// Checkpoint container: an ordered map so files are byte-deterministic.
using TensorMap = std::map<std::string, Tensor>;

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(buf), 4);
}

inline std::uint32_t get_u32(std::istream& is) {
  unsigned char buf[4];
  is.read(reinterpret_cast<char*>(buf), 4);
  if (!is) throw IoError("checkpoint: truncated u32");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
  return v;
}

inline void put_f64(std::ostream& os, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(buf), 8);
}

inline double get_f64(std::istream& is) {
  unsigned char buf[8];
  is.read(reinterpret_cast<char*>(buf), 8);
  if (!is) throw IoError("checkpoint: truncated value");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  double d;
  std::memcpy(&d, &bits, 8);
  return d;
}

}  // namespace detail

inline constexpr char kCheckpointMagic[4] = {'C', 'A', 'P', 'C'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

// Format: magic "CAPC", version u32, count u32, then per tensor
// (name_len u32, name bytes, rank u32, dims u32..., values f64 LE...).
inline void save_checkpoint(const TensorMap& tensors, std::ostream& os) {
  os.write(kCheckpointMagic, 4);
  detail::put_u32(os, kCheckpointVersion);
  detail::put_u32(os, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, tensor] : tensors) {
    detail::put_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::put_u32(os, static_cast<std::uint32_t>(tensor.rank()));
    for (std::size_t d : tensor.shape()) detail::put_u32(os, static_cast<std::uint32_t>(d));
    for (std::size_t i = 0; i < tensor.size(); ++i) detail::put_f64(os, tensor[i]);
  }
  if (!os) throw IoError("checkpoint: write failed");
}

inline TensorMap load_checkpoint(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kCheckpointMagic, 4) != 0)
    throw IoError("checkpoint: bad magic");
  const std::uint32_t version = detail::get_u32(is);
  if (version != kCheckpointVersion)
    throw IoError("checkpoint: unsupported version " + std::to_string(version));
  const std::uint32_t count = detail::get_u32(is);
  TensorMap tensors;
  for (std::uint32_t t = 0; t < count; ++t) {
    const std::uint32_t name_len = detail::get_u32(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    if (!is) throw IoError("checkpoint: truncated name");
    const std::uint32_t rank = detail::get_u32(is);
    std::vector<std::size_t> shape(rank);
    std::size_t n = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      shape[i] = detail::get_u32(is);
      n *= shape[i];
    }
    std::vector<double> values(rank == 0 ? 0 : n);
    for (double& v : values) v = detail::get_f64(is);
    tensors.emplace(std::move(name), Tensor(std::move(shape), std::move(values)));
  }
  return tensors;
}

inline void save_checkpoint_file(const TensorMap& tensors, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for write: " + path);
  save_checkpoint(tensors, os);
}

inline TensorMap load_checkpoint_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path);
  return load_checkpoint(is);
}

inline const Tensor& checkpoint_tensor(const TensorMap& map, const std::string& name) {
  const auto it = map.find(name);
  if (it == map.end()) throw LookupError("checkpoint tensor missing: " + name);
  return it->second;
}

}  // namespace capnet
