#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "capnet/dataset.hpp"
#include "capnet/errors.hpp"
#include "capnet/ppm.hpp"
#include "capnet/rng.hpp"
#include "capnet/sampler.hpp"

namespace capnet {

enum class StimulusLaw { WindowMean, LaggedStep };

inline const char* stimulus_law_name(StimulusLaw law) {
  return law == StimulusLaw::WindowMean ? "window_mean" : "lagged_step";
}

inline StimulusLaw parse_stimulus_law(const std::string& name) {
  if (name == "window_mean") return StimulusLaw::WindowMean;
  if (name == "lagged_step") return StimulusLaw::LaggedStep;
  throw ConfigError("unknown stimulus law '" + name + "'");
}

// Synthetic causal dataset. Each frame carries one scalar stimulus u drawn
// i.i.d. uniform on [-1,1], rendered as a constant gray image; labels are a
// function of strictly-past stimuli only, so a current-frame model has
// nothing to exploit.
struct SyntheticSpec {
  int num_videos = 20;
  int frames_per_video = 400;
  int frame_rate = 30;
  std::uint64_t seed = 0;
  StimulusLaw law = StimulusLaw::WindowMean;
  int image_width = 32;
  int image_height = 32;

  void validate(const SamplerConfig& sampler) const {
    if (num_videos <= 0) throw ConfigError("synthetic: num_videos must be positive");
    if (frame_rate != sampler.f)
      throw ConfigError("synthetic: frame_rate " + std::to_string(frame_rate) +
                        " differs from sampler f " + std::to_string(sampler.f));
    const std::int64_t needed = sampler.window_frames() + 1;
    if (frames_per_video < needed)
      throw ConfigError("synthetic: frames_per_video must be >= f*w + 1 = " +
                        std::to_string(needed) + ", got " +
                        std::to_string(frames_per_video));
    if (image_width <= 0 || image_height <= 0)
      throw ConfigError("synthetic: image size must be positive");
  }
};

namespace detail {

inline std::uint8_t stimulus_gray(double u) {
  const double level = (u + 1.0) / 2.0 * 255.0;
  const long rounded = std::lround(level);
  return static_cast<std::uint8_t>(std::clamp(rounded, 0L, 255L));
}

// Labels per law, defined only when every offset slot lies inside the video.
//   WindowMean: valence = mean of u over the full offset set,
//               arousal = mean over the older half (oldest ceil(L/2) slots).
//   LaggedStep: valence = u at the oldest slot,
//               arousal = +0.8 / -0.8 step on that value's sign.
inline AffectState synthetic_label(const std::vector<double>& u, std::int64_t target,
                                   const std::vector<std::int64_t>& offsets,
                                   StimulusLaw law) {
  const auto at = [&](std::int64_t offset) {
    return u[static_cast<std::size_t>(target + offset - 1)];
  };
  AffectState label;
  if (law == StimulusLaw::WindowMean) {
    double full = 0.0;
    for (const std::int64_t off : offsets) full += at(off);
    const std::size_t older = (offsets.size() + 1) / 2;
    double old_sum = 0.0;
    for (std::size_t i = 0; i < older; ++i) old_sum += at(offsets[i]);
    label.valence = full / static_cast<double>(offsets.size());
    label.arousal = old_sum / static_cast<double>(older);
  } else {
    const double oldest = at(offsets.front());
    label.valence = oldest;
    label.arousal = oldest > 0.0 ? 0.8 : -0.8;
  }
  label.valence = std::clamp(label.valence, -1.0, 1.0);
  label.arousal = std::clamp(label.arousal, -1.0, 1.0);
  return label;
}

}  // namespace detail

inline std::string synthetic_video_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "v%03d", index);
  return buf;
}

// Writes the dataset tree under `root` and returns the in-memory videos.
// Output is bit-deterministic for a given (spec, sampler) pair.
inline std::vector<LabeledVideo> generate_synthetic(const SyntheticSpec& spec,
                                                    const SamplerConfig& sampler,
                                                    const std::string& root) {
  namespace fs = std::filesystem;
  sampler.validate();
  spec.validate(sampler);
  const std::vector<std::int64_t> offsets = build_offsets(sampler);
  const std::int64_t oldest_reach = -offsets.front();  // = f*w

  fs::create_directories(root);
  Rng master(spec.seed);
  std::vector<LabeledVideo> videos;
  for (int v = 0; v < spec.num_videos; ++v) {
    const std::string id = synthetic_video_id(v);
    const fs::path dir = fs::path(root) / id;
    fs::create_directories(dir);
    Rng rng = master.fork(static_cast<std::uint64_t>(v));

    std::vector<double> u(static_cast<std::size_t>(spec.frames_per_video));
    for (double& x : u) x = rng.uniform(-1.0, 1.0);

    LabeledVideo video;
    video.video_id = id;
    video.frame_rate = spec.frame_rate;

    PpmImage img;
    img.width = static_cast<std::size_t>(spec.image_width);
    img.height = static_cast<std::size_t>(spec.image_height);
    img.rgb.resize(img.width * img.height * 3);

    std::string stimulus_csv = "frame,u\n";
    std::vector<std::array<double, 2>> rows;
    rows.reserve(u.size());
    for (std::int64_t t = 1; t <= spec.frames_per_video; ++t) {
      const double ut = u[static_cast<std::size_t>(t - 1)];
      std::fill(img.rgb.begin(), img.rgb.end(), detail::stimulus_gray(ut));
      const fs::path frame_path = dir / frame_file_name(t);
      write_ppm_file(img, frame_path.string());
      video.frames.emplace(t, FrameRef{id, t, frame_path.string()});

      stimulus_csv += std::to_string(t);
      stimulus_csv += ',';
      stimulus_csv += detail::format_double(ut);
      stimulus_csv += '\n';

      if (t - oldest_reach >= 1) {
        rows.push_back([&] {
          const AffectState label = detail::synthetic_label(u, t, offsets, spec.law);
          return std::array<double, 2>{label.valence, label.arousal};
        }());
      } else {
        rows.push_back({-5.0, -5.0});  // incomplete past: the invalid sentinel
      }
    }
    video.labels = labels_from_rows(rows);

    std::ofstream ann(fs::path(root) / (id + ".csv"));
    if (!ann) throw IoError("cannot write annotation for " + id);
    ann << serialize_annotation_rows(rows);

    std::ofstream stim(dir / "stimulus.csv");
    if (!stim) throw IoError("cannot write stimulus log for " + id);
    stim << stimulus_csv;

    videos.push_back(std::move(video));
  }
  return videos;
}

}  // namespace capnet
