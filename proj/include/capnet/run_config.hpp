#pragma once

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>

#include "capnet/errors.hpp"
#include "capnet/models.hpp"
#include "capnet/rational.hpp"
#include "capnet/sampler.hpp"
#include "capnet/synthetic.hpp"
#include "capnet/training.hpp"

namespace capnet {

// One flat key=value configuration covering every run. All randomness flows
// from the single `seed`; the per-module seed fields are filled from it when
// the run starts. Unknown keys are rejected.
struct RunConfig {
  std::uint64_t seed = 0;
  int threads = 1;
  std::string data_root;
  SamplerConfig sampler;
  ModelConfig model;
  TrainConfig train;
  SyntheticSpec synth;

  void validate() const {
    sampler.validate();
    model.validate();
    train.validate();
    if (threads < 1) throw ConfigError("threads must be >= 1");
    SyntheticSpec s = synth;
    s.frame_rate = sampler.f;
    s.validate(sampler);
  }

  std::string resolved_data_root() const {
    if (!data_root.empty()) return data_root;
    if (const char* env = std::getenv("CAPNET_DATA_ROOT"); env && *env) return env;
    return ".";
  }

  void set(const std::string& key, const std::string& value) {
    const auto to_int = [&](const std::string& v) {
      int out = 0;
      const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
      if (ec != std::errc() || p != v.data() + v.size())
        throw ConfigError("config: bad integer '" + v + "' for " + key);
      return out;
    };
    const auto to_u64 = [&](const std::string& v) {
      std::uint64_t out = 0;
      const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
      if (ec != std::errc() || p != v.data() + v.size())
        throw ConfigError("config: bad unsigned '" + v + "' for " + key);
      return out;
    };
    const auto to_double = [&](const std::string& v) {
      double out = 0;
      const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
      if (ec != std::errc() || p != v.data() + v.size())
        throw ConfigError("config: bad number '" + v + "' for " + key);
      return out;
    };
    const auto to_bool = [&](const std::string& v) {
      if (v == "true" || v == "1") return true;
      if (v == "false" || v == "0") return false;
      throw ConfigError("config: bad bool '" + v + "' for " + key);
    };

    if (key == "seed") seed = to_u64(value);
    else if (key == "threads") threads = to_int(value);
    else if (key == "data_root") data_root = value;
    else if (key == "sampler.d") sampler.d = parse_rational(value);
    else if (key == "sampler.f") sampler.f = to_int(value);
    else if (key == "sampler.w") sampler.w = parse_rational(value);
    else if (key == "sampler.s") sampler.s = to_int(value);
    else if (key == "model.image_size") model.image_size = to_int(value);
    else if (key == "model.feature_dim") model.feature_dim = to_int(value);
    else if (key == "model.lstm_hidden") model.lstm_hidden = to_int(value);
    else if (key == "model.fc_hidden") model.fc_hidden = to_int(value);
    else if (key == "model.dropout") model.dropout = to_double(value);
    else if (key == "train.batch_size") train.batch_size = static_cast<std::size_t>(to_int(value));
    else if (key == "train.lr") train.lr = to_double(value);
    else if (key == "train.patience") train.patience = to_int(value);
    else if (key == "train.max_epochs") train.max_epochs = to_int(value);
    else if (key == "train.freeze_extractor") train.freeze_extractor = to_bool(value);
    else if (key == "synth.num_videos") synth.num_videos = to_int(value);
    else if (key == "synth.frames_per_video") synth.frames_per_video = to_int(value);
    else if (key == "synth.law") synth.law = parse_stimulus_law(value);
    else if (key == "synth.image_width") synth.image_width = to_int(value);
    else if (key == "synth.image_height") synth.image_height = to_int(value);
    else throw ConfigError("config: unknown key '" + key + "'");
  }

  // Canonical text form. Parsing this text reproduces the config exactly.
  std::string serialize() const {
    std::string out;
    const auto emit = [&out](const std::string& key, const std::string& value) {
      out += key;
      out += '=';
      out += value;
      out += '\n';
    };
    char num[48];
    const auto fmt_double = [&num](double v) {
      const auto [p, ec] = std::to_chars(num, num + sizeof num, v);
      return std::string(num, p);
    };
    emit("data_root", data_root);
    emit("model.dropout", fmt_double(model.dropout));
    emit("model.fc_hidden", std::to_string(model.fc_hidden));
    emit("model.feature_dim", std::to_string(model.feature_dim));
    emit("model.image_size", std::to_string(model.image_size));
    emit("model.lstm_hidden", std::to_string(model.lstm_hidden));
    emit("sampler.d", sampler.d.str());
    emit("sampler.f", std::to_string(sampler.f));
    emit("sampler.s", std::to_string(sampler.s));
    emit("sampler.w", sampler.w.str());
    emit("seed", std::to_string(seed));
    emit("synth.frames_per_video", std::to_string(synth.frames_per_video));
    emit("synth.image_height", std::to_string(synth.image_height));
    emit("synth.image_width", std::to_string(synth.image_width));
    emit("synth.law", stimulus_law_name(synth.law));
    emit("synth.num_videos", std::to_string(synth.num_videos));
    emit("threads", std::to_string(threads));
    emit("train.batch_size", std::to_string(train.batch_size));
    emit("train.freeze_extractor", train.freeze_extractor ? "true" : "false");
    emit("train.lr", fmt_double(train.lr));
    emit("train.max_epochs", std::to_string(train.max_epochs));
    emit("train.patience", std::to_string(train.patience));
    return out;
  }

  static RunConfig parse(std::istream& is) {
    RunConfig config;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
      config.set(line.substr(0, eq), line.substr(eq + 1));
    }
    return config;
  }

  static RunConfig parse_text(const std::string& text) {
    std::istringstream is(text);
    return parse(is);
  }

  static RunConfig parse_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    return parse(is);
  }

  friend bool operator==(const RunConfig& a, const RunConfig& b) {
    return a.serialize() == b.serialize();
  }
};

}  // namespace capnet
