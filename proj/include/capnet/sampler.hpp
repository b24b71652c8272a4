#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "capnet/dataset.hpp"
#include "capnet/errors.hpp"
#include "capnet/rational.hpp"

namespace capnet {

// The four symbols that govern window construction:
//   d  prediction lead in seconds (newest usable frame is d seconds old)
//   f  frame rate in frames per second
//   w  window size in seconds
//   s  stride between slots, in frames
struct SamplerConfig {
  Rational d{1, 3};
  int f = 30;
  Rational w{3, 1};
  int s = 10;

  void validate() const {
    if (f <= 0) throw ConfigError("sampler: frame rate f must be positive, got " +
                                  std::to_string(f));
    if (s <= 0) throw ConfigError("sampler: stride s must be positive, got " +
                                  std::to_string(s));
    if (d.num < 0) throw ConfigError("sampler: lead d must be >= 0, got " + d.str());
    if (!(d <= w)) throw ConfigError("sampler: requires d <= w, got d=" + d.str() +
                                     " w=" + w.str());
    if (!d.times_is_integer(f))
      throw ConfigError("sampler: f*d must be an integer, got f=" + std::to_string(f) +
                        " d=" + d.str());
    if (!w.times_is_integer(f))
      throw ConfigError("sampler: f*w must be an integer, got f=" + std::to_string(f) +
                        " w=" + w.str());
    const std::int64_t span = w.times(f) - d.times(f);
    if (span % s != 0)
      throw ConfigError("sampler: f*(w-d) must be divisible by s, got f*(w-d)=" +
                        std::to_string(span) + " s=" + std::to_string(s));
  }

  std::int64_t lead_frames() const { return d.times(f); }      // f*d
  std::int64_t window_frames() const { return w.times(f); }    // f*w
  std::int64_t span_frames() const { return window_frames() - lead_frames(); }
  std::int64_t window_length() const { return span_frames() / s + 1; }
};

// Slot offsets relative to the target frame T, oldest first. Slot n (for n =
// f(w-d), ..., 2s, s, 0) sits at offset -(f*d + n); the newest slot is
// exactly -f*d away.
inline std::vector<std::int64_t> build_offsets(const SamplerConfig& config) {
  config.validate();
  std::vector<std::int64_t> offsets;
  const std::int64_t lead = config.lead_frames();
  for (std::int64_t n = config.span_frames(); n >= 0; n -= config.s)
    offsets.push_back(-(lead + n));
  return offsets;
}

struct SampleWindow {
  std::string video_id;
  std::int64_t target_frame = 0;
  std::vector<FrameRef> slots;  // chronological, oldest first
  AffectState label;
};

// One causal window for target frame T, or nothing when it cannot be built.
//
// Missing-frame fallback: a slot whose nominal frame T+offset is absent takes
// the nearest earlier existing frame down to T+offset-(s-1) inclusive. The
// oldest slot has no fallback; if its nominal frame is missing the whole
// window is insufficient.
inline std::optional<SampleWindow> sample_window(const LabeledVideo& video, std::int64_t target,
                                                 const SamplerConfig& config) {
  if (video.frame_rate != config.f)
    throw ConfigError("sampler: video " + video.video_id + " has frame rate " +
                      std::to_string(video.frame_rate) + ", config expects " +
                      std::to_string(config.f));
  const auto label_it = video.labels.find(target);
  if (label_it == video.labels.end() || !label_it->second.valid) return std::nullopt;

  const std::vector<std::int64_t> offsets = build_offsets(config);
  SampleWindow window;
  window.video_id = video.video_id;
  window.target_frame = target;
  window.label = label_it->second.value;
  window.slots.reserve(offsets.size());
  for (std::size_t slot = 0; slot < offsets.size(); ++slot) {
    const std::int64_t nominal = target + offsets[slot];
    const std::int64_t lowest = slot == 0 ? nominal : nominal - (config.s - 1);
    const FrameRef* found = nullptr;
    for (std::int64_t candidate = nominal; candidate >= lowest && candidate >= 1;
         --candidate) {
      const auto it = video.frames.find(candidate);
      if (it != video.frames.end()) {
        found = &it->second;
        break;
      }
    }
    if (!found) return std::nullopt;
    window.slots.push_back(*found);
  }
  return window;
}

// All buildable windows of a video, in ascending target order.
inline std::vector<SampleWindow> enumerate_windows(const LabeledVideo& video,
                                                   const SamplerConfig& config) {
  std::vector<SampleWindow> windows;
  for (const auto& [target, label] : video.labels) {
    if (!label.valid) continue;
    if (auto window = sample_window(video, target, config))
      windows.push_back(std::move(*window));
  }
  return windows;
}

// The degenerate d = n = 0 pairing: every frame that both exists and has a
// valid label, as (frame, label).
struct SinglePair {
  FrameRef frame;
  AffectState label;
};

inline std::vector<SinglePair> enumerate_single_pairs(const LabeledVideo& video) {
  std::vector<SinglePair> pairs;
  for (const auto& [index, frame] : video.frames) {
    const auto it = video.labels.find(index);
    if (it != video.labels.end() && it->second.valid)
      pairs.push_back({frame, it->second.value});
  }
  return pairs;
}

}  // namespace capnet
