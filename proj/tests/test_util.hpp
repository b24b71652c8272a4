#pragma once

// Shared helpers for the unit and acceptance suites: temp directories,
// in-memory/on-disk video builders, and an independent brute-force reference
// for the causal window sampler.

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "capnet/dataset.hpp"
#include "capnet/ppm.hpp"
#include "capnet/rng.hpp"
#include "capnet/sampler.hpp"

namespace testutil {

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    base_ = std::filesystem::temp_directory_path() /
            ("capnet_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter_++));
    std::filesystem::create_directories(base_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(base_, ec);
  }
  const std::filesystem::path& path() const { return base_; }
  std::string str() const { return base_.string(); }

 private:
  static inline int counter_ = 0;
  std::filesystem::path base_;
};

// In-memory video: frames present for every index not in `missing`, labels
// valid everywhere unless listed in `invalid`.
inline capnet::LabeledVideo make_video(const std::string& id, std::int64_t frames,
                                       const std::vector<std::int64_t>& missing = {},
                                       const std::vector<std::int64_t>& invalid = {},
                                       int frame_rate = 30) {
  capnet::LabeledVideo video;
  video.video_id = id;
  video.frame_rate = frame_rate;
  for (std::int64_t t = 1; t <= frames; ++t) {
    if (std::find(missing.begin(), missing.end(), t) == missing.end())
      video.frames.emplace(t, capnet::FrameRef{id, t, ""});
    capnet::LabelEntry label;
    const double v = std::sin(static_cast<double>(t) * 0.37);
    label.value = {v, -v * 0.5};
    label.valid = std::find(invalid.begin(), invalid.end(), t) == invalid.end();
    if (!label.valid) label.value = {-5.0, -5.0};
    video.labels.emplace(t, label);
  }
  return video;
}

// Random sparse video: each frame dropped independently with `drop_rate`,
// labels all valid with random values in [-1, 1].
inline capnet::LabeledVideo make_sparse_video(const std::string& id, std::int64_t frames,
                                              double drop_rate, capnet::Rng& rng,
                                              int frame_rate = 30) {
  capnet::LabeledVideo video;
  video.video_id = id;
  video.frame_rate = frame_rate;
  for (std::int64_t t = 1; t <= frames; ++t) {
    if (rng.uniform() >= drop_rate)
      video.frames.emplace(t, capnet::FrameRef{id, t, ""});
    capnet::LabelEntry label;
    label.value = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    label.valid = true;
    video.labels.emplace(t, label);
  }
  return video;
}

// Writes a video's frames as gray ppm files plus an annotation file in the
// dataset layout, and refreshes the frame paths.
inline void write_video_files(capnet::LabeledVideo& video, const std::filesystem::path& root,
                              int side, capnet::Rng& rng) {
  namespace fs = std::filesystem;
  const fs::path dir = root / video.video_id;
  fs::create_directories(dir);
  capnet::PpmImage img;
  img.width = static_cast<std::size_t>(side);
  img.height = static_cast<std::size_t>(side);
  img.rgb.resize(img.width * img.height * 3);
  std::int64_t max_frame = 0;
  for (auto& [index, ref] : video.frames) {
    const auto gray = static_cast<std::uint8_t>(rng.index(256));
    std::fill(img.rgb.begin(), img.rgb.end(), gray);
    const fs::path p = dir / capnet::frame_file_name(index);
    capnet::write_ppm_file(img, p.string());
    ref.path = p.string();
    max_frame = std::max(max_frame, index);
  }
  std::vector<std::array<double, 2>> rows;
  for (std::int64_t t = 1; t <= max_frame; ++t) {
    const auto it = video.labels.find(t);
    if (it == video.labels.end())
      rows.push_back({-5.0, -5.0});
    else
      rows.push_back({it->second.value.valence, it->second.value.arousal});
  }
  std::ofstream ann(root / (video.video_id + ".csv"));
  ann << capnet::serialize_annotation_rows(rows);
}

// ---------------------------------------------------------------------------
// Independent sampler reference: for every (target, slot) it enumerates the
// full fallback candidate range and picks the largest existing index, with no
// shared code with the production sampler.

inline std::optional<std::vector<std::int64_t>> reference_slots(
    const capnet::LabeledVideo& video, std::int64_t target, const capnet::SamplerConfig& c) {
  const std::int64_t lead = c.d.num * c.f / c.d.den;
  const std::int64_t span = c.w.num * c.f / c.w.den - lead;
  std::vector<std::int64_t> slots;
  for (std::int64_t n = span; n >= 0; n -= c.s) {
    const std::int64_t nominal = target - lead - n;
    std::int64_t chosen = -1;
    if (n == span) {
      if (nominal >= 1 && video.frames.count(nominal)) chosen = nominal;
    } else {
      for (std::int64_t candidate = nominal - (c.s - 1); candidate <= nominal; ++candidate)
        if (candidate >= 1 && video.frames.count(candidate)) chosen = candidate;
    }
    if (chosen < 0) return std::nullopt;
    slots.push_back(chosen);
  }
  return slots;
}

inline std::vector<std::pair<std::int64_t, std::vector<std::int64_t>>> reference_windows(
    const capnet::LabeledVideo& video, const capnet::SamplerConfig& c) {
  std::vector<std::pair<std::int64_t, std::vector<std::int64_t>>> out;
  for (const auto& [target, label] : video.labels) {
    if (!label.valid) continue;
    if (auto slots = reference_slots(video, target, c))
      out.emplace_back(target, std::move(*slots));
  }
  return out;
}

}  // namespace testutil
