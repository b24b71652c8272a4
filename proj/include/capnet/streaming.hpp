#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <ostream>
#include <thread>
#include <vector>

#include "capnet/dataset.hpp"
#include "capnet/models.hpp"
#include "capnet/ppm.hpp"
#include "capnet/sampler.hpp"
#include "capnet/tensor.hpp"

namespace capnet {

using ImageEncoder = std::function<Tensor(const Tensor& image)>;

struct StreamPrediction {
  std::int64_t target_frame = 0;
  std::optional<AffectState> state;          // empty = Insufficient
  std::vector<std::int64_t> frames_used;     // all <= target - f*d
};

// Real-time causal inference engine. Frames arrive with monotonically
// increasing indices; features are extracted once at push time and kept in a
// bounded ring of f*w + s entries, which covers the oldest slot plus one
// stride of fallback margin. predict_at(T) applies the exact sampler
// semantics over the buffered indices, so it can never read a frame newer
// than T - f*d.
class StreamEngine {
 public:
  StreamEngine(const SamplerConfig& config, CausalityExtractorParams params,
               ImageEncoder encoder)
      : config_(config),
        params_(std::move(params)),
        encoder_(std::move(encoder)),
        offsets_(build_offsets(config)),
        capacity_(static_cast<std::size_t>(config.window_frames() + config.s)) {
    if (!encoder_) throw ConfigError("stream engine: null image encoder");
  }

  std::size_t capacity() const { return capacity_; }

  std::size_t buffered() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return ring_.size();
  }

  std::int64_t newest_index() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return newest_;
  }

  void push_frame(std::int64_t frame_index, const Tensor& image) {
    if (frame_index < 1) throw StreamError("stream: frame index must be >= 1");
    // Extraction happens outside the lock; there is one producer.
    Tensor features = encoder_(image);
    std::lock_guard<std::mutex> lock(mutex_);
    if (frame_index <= newest_)
      throw StreamError("stream: non-monotone frame index " + std::to_string(frame_index) +
                        " after " + std::to_string(newest_) + " (caller must reorder)");
    newest_ = frame_index;
    if (ring_.size() < capacity_) {
      ring_.push_back({frame_index, std::move(features)});
    } else {
      ring_[head_] = {frame_index, std::move(features)};
      head_ = (head_ + 1) % capacity_;
    }
  }

  StreamPrediction predict_at(std::int64_t target) const {
    std::lock_guard<std::mutex> lock(mutex_);
    StreamPrediction prediction;
    prediction.target_frame = target;
    std::vector<const Entry*> slots;
    slots.reserve(offsets_.size());
    for (std::size_t slot = 0; slot < offsets_.size(); ++slot) {
      const std::int64_t nominal = target + offsets_[slot];
      const std::int64_t lowest = slot == 0 ? nominal : nominal - (config_.s - 1);
      const Entry* found = nullptr;
      for (std::int64_t candidate = nominal; candidate >= lowest && candidate >= 1;
           --candidate) {
        if (const Entry* e = find(candidate)) {
          found = e;
          break;
        }
      }
      if (!found) return prediction;  // Insufficient
      slots.push_back(found);
    }
    std::vector<Tensor> seq;
    seq.reserve(slots.size());
    for (const Entry* e : slots) {
      prediction.frames_used.push_back(e->index);
      seq.push_back(Tensor({1, e->features.size()}, e->features.values()));
    }
    const Tensor out = capnet_forward_batch(seq, params_, Mode::Eval);
    prediction.state = AffectState{out[0], out[1]};
    return prediction;
  }

 private:
  struct Entry {
    std::int64_t index = 0;
    Tensor features;
  };

  // The ring holds at most ~f*w+s entries; a linear scan is fine.
  const Entry* find(std::int64_t index) const {
    for (const Entry& e : ring_)
      if (e.index == index) return &e;
    return nullptr;
  }

  SamplerConfig config_;
  CausalityExtractorParams params_;
  ImageEncoder encoder_;
  std::vector<std::int64_t> offsets_;
  std::size_t capacity_;

  mutable std::mutex mutex_;
  std::vector<Entry> ring_;
  std::size_t head_ = 0;  // next eviction slot once full
  std::int64_t newest_ = 0;
};

// ---------------------------------------------------------------------------
// Replay of a recorded video through the engine, one prediction per existing
// frame, with per-prediction latency.

struct StreamTraceRow {
  std::int64_t frame = 0;
  std::optional<AffectState> state;
  double micros = 0.0;
};

inline void write_stream_trace_csv(const std::vector<StreamTraceRow>& rows, std::ostream& os) {
  os << "frame,valence,arousal,insufficient_flag,micros_per_prediction\n";
  char buf[160];
  for (const StreamTraceRow& r : rows) {
    if (r.state) {
      std::snprintf(buf, sizeof buf, "%lld,%.9f,%.9f,0,%.1f\n",
                    static_cast<long long>(r.frame), r.state->valence, r.state->arousal,
                    r.micros);
    } else {
      std::snprintf(buf, sizeof buf, "%lld,,,1,%.1f\n", static_cast<long long>(r.frame),
                    r.micros);
    }
    os << buf;
  }
}

// `load_image` maps a frame file path to the tensor the engine's encoder
// expects. With realtime=true, frames are paced at the video frame rate;
// otherwise the replay runs as fast as possible.
inline std::vector<StreamTraceRow> run_stream_sim(
    const LabeledVideo& video, StreamEngine& engine,
    const std::function<Tensor(const std::string& path)>& load_image, bool realtime = false) {
  std::vector<StreamTraceRow> rows;
  rows.reserve(video.frames.size());
  const auto start = std::chrono::steady_clock::now();
  const double frame_seconds = 1.0 / static_cast<double>(video.frame_rate);
  std::size_t arrival = 0;
  for (const auto& [index, ref] : video.frames) {
    if (realtime) {
      const auto due =
          start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                      std::chrono::duration<double>(arrival * frame_seconds));
      std::this_thread::sleep_until(due);
    }
    ++arrival;
    engine.push_frame(index, load_image(ref.path));
    const auto t0 = std::chrono::steady_clock::now();
    StreamPrediction prediction = engine.predict_at(index);
    const auto t1 = std::chrono::steady_clock::now();
    StreamTraceRow row;
    row.frame = index;
    row.state = prediction.state;
    row.micros = std::chrono::duration<double, std::micro>(t1 - t0).count();
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace capnet
