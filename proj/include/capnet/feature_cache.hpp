#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "capnet/checkpoint.hpp"
#include "capnet/dataset.hpp"
#include "capnet/errors.hpp"
#include "capnet/tensor.hpp"

namespace capnet {

inline constexpr char kFeatureCacheMagic[4] = {'C', 'A', 'P', 'F'};
inline constexpr std::uint32_t kFeatureCacheVersion = 1;

// Frozen per-frame feature vectors, stored as 32-bit floats.
//
// Binary file: magic "CAPF", version u32, dim u32, count u32, then `count`
// records of (frame_key u32, dim little-endian f32). frame_key is the running
// index into the sidecar manifest, a text file with one "video_id,frame_index"
// line per record.
class FeatureCache {
 public:
  FeatureCache() = default;
  explicit FeatureCache(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return records_.size(); }

  void put(const std::string& video_id, std::int64_t frame_index, const Tensor& features) {
    if (features.size() != dim_)
      throw ShapeError("feature cache dim " + std::to_string(dim_) + " vs vector " +
                       features.shape_str());
    const Key key{video_id, frame_index};
    const auto it = index_.find(key);
    std::vector<float> values(dim_);
    for (std::size_t i = 0; i < dim_; ++i) values[i] = static_cast<float>(features[i]);
    if (it != index_.end()) {
      records_[it->second].second = std::move(values);
    } else {
      index_.emplace(key, records_.size());
      records_.emplace_back(key, std::move(values));
    }
  }

  bool contains(const std::string& video_id, std::int64_t frame_index) const {
    return index_.count(Key{video_id, frame_index}) != 0;
  }

  Tensor get(const std::string& video_id, std::int64_t frame_index) const {
    const auto it = index_.find(Key{video_id, frame_index});
    if (it == index_.end())
      throw LookupError("feature cache: no entry for (" + video_id + ", " +
                        std::to_string(frame_index) + ")");
    const std::vector<float>& v = records_[it->second].second;
    Tensor out({dim_});
    for (std::size_t i = 0; i < dim_; ++i) out[i] = static_cast<double>(v[i]);
    return out;
  }

  void save(const std::string& binary_path, const std::string& manifest_path) const {
    std::ofstream os(binary_path, std::ios::binary);
    if (!os) throw IoError("cannot open for write: " + binary_path);
    os.write(kFeatureCacheMagic, 4);
    detail::put_u32(os, kFeatureCacheVersion);
    detail::put_u32(os, static_cast<std::uint32_t>(dim_));
    detail::put_u32(os, static_cast<std::uint32_t>(records_.size()));
    std::ofstream manifest(manifest_path);
    if (!manifest) throw IoError("cannot open for write: " + manifest_path);
    for (std::size_t i = 0; i < records_.size(); ++i) {
      detail::put_u32(os, static_cast<std::uint32_t>(i));
      for (const float f : records_[i].second) {
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        detail::put_u32(os, bits);
      }
      manifest << records_[i].first.video_id << ',' << records_[i].first.frame_index << '\n';
    }
    if (!os || !manifest) throw IoError("feature cache write failed");
  }

  static FeatureCache load(const std::string& binary_path, const std::string& manifest_path) {
    std::ifstream is(binary_path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + binary_path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kFeatureCacheMagic, 4) != 0)
      throw IoError("feature cache: bad magic in " + binary_path);
    const std::uint32_t version = detail::get_u32(is);
    if (version != kFeatureCacheVersion)
      throw IoError("feature cache: unsupported version " + std::to_string(version));
    const std::uint32_t dim = detail::get_u32(is);
    const std::uint32_t count = detail::get_u32(is);

    std::ifstream manifest(manifest_path);
    if (!manifest) throw IoError("cannot open: " + manifest_path);
    std::vector<Key> keys;
    keys.reserve(count);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(manifest, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto comma = line.rfind(',');
      if (comma == std::string::npos) throw ParseError("manifest: missing comma", line_no);
      keys.push_back(Key{line.substr(0, comma), std::stoll(line.substr(comma + 1))});
    }
    if (keys.size() != count)
      throw IoError("feature cache: manifest has " + std::to_string(keys.size()) +
                    " entries, file expects " + std::to_string(count));

    FeatureCache cache(dim);
    for (std::uint32_t r = 0; r < count; ++r) {
      const std::uint32_t key_index = detail::get_u32(is);
      if (key_index >= count) throw IoError("feature cache: frame_key out of range");
      std::vector<float> values(dim);
      for (std::uint32_t i = 0; i < dim; ++i) {
        const std::uint32_t bits = detail::get_u32(is);
        std::memcpy(&values[i], &bits, 4);
      }
      const Key& key = keys[key_index];
      cache.index_.emplace(key, cache.records_.size());
      cache.records_.emplace_back(key, std::move(values));
    }
    return cache;
  }

  // header + count * (4 + dim*4)
  static std::size_t expected_file_size(std::size_t dim, std::size_t count) {
    return 16 + count * (4 + dim * 4);
  }

 private:
  struct Key {
    std::string video_id;
    std::int64_t frame_index;
    bool operator<(const Key& o) const {
      if (video_id != o.video_id) return video_id < o.video_id;
      return frame_index < o.frame_index;
    }
  };

  std::size_t dim_ = 0;
  std::vector<std::pair<Key, std::vector<float>>> records_;  // insertion order
  std::map<Key, std::size_t> index_;
};

}  // namespace capnet
