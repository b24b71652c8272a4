// capnet: command-line front end for the causal affect prediction pipeline.
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration/validation
// failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "capnet/capnet.hpp"
#include "capnet/gradcheck_suite.hpp"

namespace {

using namespace capnet;

struct ConfigCli {
  std::string config_file;
  std::vector<std::pair<std::string, std::string>> overrides;  // key, value (flag order)
};

// Defaults, then the config file, then explicit flags (flags win).
RunConfig resolve_config(const ConfigCli& cc) {
  RunConfig rc;
  if (!cc.config_file.empty()) rc = RunConfig::parse_file(cc.config_file);
  for (const auto& [key, value] : cc.overrides) rc.set(key, value);
  return rc;
}

void echo_config(const RunConfig& rc) {
  std::cout << "# resolved config\n" << rc.serialize() << "# end config\n";
}

void add_config_options(CLI::App* cmd, ConfigCli& cc) {
  cmd->add_option("--config", cc.config_file, "key=value config file");
  const auto opt = [cmd, &cc](const std::string& flag, const std::string& key,
                              const std::string& desc) {
    cmd->add_option_function<std::string>(
        flag, [&cc, key](const std::string& v) { cc.overrides.emplace_back(key, v); }, desc);
  };
  opt("--seed", "seed", "master seed; all randomness derives from it");
  opt("--threads", "threads", "worker threads for feature precomputation");
  opt("--data-root", "data_root", "dataset root (default $CAPNET_DATA_ROOT or .)");
  opt("--lead,-d", "sampler.d", "prediction lead in seconds, e.g. 1/3");
  opt("--frame-rate,-f", "sampler.f", "frame rate (fps)");
  opt("--window,-w", "sampler.w", "window size in seconds, e.g. 3");
  opt("--stride,-s", "sampler.s", "stride between slots, in frames");
  opt("--image-size", "model.image_size", "model input side length");
  opt("--feature-dim", "model.feature_dim", "feature vector length D");
  opt("--lstm-hidden", "model.lstm_hidden", "LSTM hidden size H");
  opt("--fc-hidden", "model.fc_hidden", "first FC width M");
  opt("--dropout", "model.dropout", "dropout rate for LSTM/FC1 inputs");
  opt("--batch-size", "train.batch_size", "mini-batch size");
  opt("--lr", "train.lr", "Adam learning rate");
  opt("--patience", "train.patience", "early-stopping patience (epochs)");
  opt("--max-epochs", "train.max_epochs", "epoch cap");
  opt("--freeze-extractor", "train.freeze_extractor", "true/false");
  opt("--num-videos", "synth.num_videos", "synthetic: video count");
  opt("--frames-per-video", "synth.frames_per_video", "synthetic: frames per video");
  opt("--law", "synth.law", "synthetic: window_mean or lagged_step");
  opt("--synth-image-width", "synth.image_width", "synthetic: frame width");
  opt("--synth-image-height", "synth.image_height", "synthetic: frame height");
}

// Deterministic split: videos are sorted by id, the last ceil(fraction*n)
// become the validation set. A single video serves as both sides.
std::pair<std::vector<LabeledVideo>, std::vector<LabeledVideo>> split_videos(
    std::vector<LabeledVideo> videos, double val_fraction) {
  if (videos.empty()) throw Error("dataset: no videos found");
  if (val_fraction < 0.0 || val_fraction >= 1.0)
    throw ConfigError("val fraction must be in [0,1)");
  if (videos.size() == 1) {
    std::vector<LabeledVideo> val = videos;
    return {std::move(videos), std::move(val)};
  }
  std::size_t val_count = static_cast<std::size_t>(
      std::lround(val_fraction * static_cast<double>(videos.size())));
  val_count = std::max<std::size_t>(1, std::min(val_count, videos.size() - 1));
  std::vector<LabeledVideo> val(videos.end() - static_cast<std::ptrdiff_t>(val_count),
                                videos.end());
  videos.resize(videos.size() - val_count);
  return {std::move(videos), std::move(val)};
}

std::vector<SinglePair> gather_pairs(const std::vector<LabeledVideo>& videos) {
  std::vector<SinglePair> pairs;
  for (const LabeledVideo& v : videos)
    for (SinglePair& p : enumerate_single_pairs(v)) pairs.push_back(std::move(p));
  return pairs;
}

std::vector<SampleWindow> gather_windows(const std::vector<LabeledVideo>& videos,
                                         const SamplerConfig& sampler) {
  std::vector<SampleWindow> windows;
  for (const LabeledVideo& v : videos)
    for (SampleWindow& w : enumerate_windows(v, sampler)) windows.push_back(std::move(w));
  return windows;
}

TinyCnnExtractor extractor_from_checkpoint(const TensorMap& map) {
  const Tensor& cfg = checkpoint_tensor(map, "fer/config");
  TinyCnnExtractor extractor(static_cast<int>(cfg[0]), static_cast<std::size_t>(cfg[1]));
  extractor.load_from(map, "fer");
  return extractor;
}

void require_sampler_match(const SamplerConfig& a, const SamplerConfig& b) {
  if (a.d == b.d && a.f == b.f && a.w == b.w && a.s == b.s) return;
  throw ConfigError("sampler config (d=" + a.d.str() + " f=" + std::to_string(a.f) +
                    " w=" + a.w.str() + " s=" + std::to_string(a.s) +
                    ") does not match checkpoint (d=" + b.d.str() +
                    " f=" + std::to_string(b.f) + " w=" + b.w.str() +
                    " s=" + std::to_string(b.s) + ")");
}

// ---------------------------------------------------------------------------

int cmd_synth_gen(const RunConfig& rc, const std::string& out) {
  rc.validate();
  echo_config(rc);
  SyntheticSpec spec = rc.synth;
  spec.seed = rc.seed;
  spec.frame_rate = rc.sampler.f;
  const std::string root = out.empty() ? rc.resolved_data_root() : out;
  const auto videos = generate_synthetic(spec, rc.sampler, root);
  std::size_t labeled = 0;
  for (const auto& v : videos)
    for (const auto& [t, label] : v.labels) labeled += label.valid ? 1 : 0;
  std::cout << "generated " << videos.size() << " videos x " << spec.frames_per_video
            << " frames under " << root << " (" << labeled << " valid labels, law "
            << stimulus_law_name(spec.law) << ")\n";
  return 0;
}

int cmd_prepare_pairs(const RunConfig& rc, const std::string& out, bool single) {
  rc.sampler.validate();
  echo_config(rc);
  const auto scan = scan_video_dir(rc.resolved_data_root(), rc.sampler.f);
  std::ofstream os(out);
  if (!os) throw IoError("cannot open for write: " + out);
  std::size_t lines = 0;
  for (const LabeledVideo& video : scan.videos) {
    if (single) {
      for (const SinglePair& p : enumerate_single_pairs(video)) {
        os << video.video_id << ',' << p.frame.frame_index << ',' << p.frame.frame_index
           << ',' << detail::format_double(p.label.valence) << ','
           << detail::format_double(p.label.arousal) << '\n';
        ++lines;
      }
    } else {
      for (const SampleWindow& w : enumerate_windows(video, rc.sampler)) {
        os << w.video_id << ',' << w.target_frame;
        for (const FrameRef& slot : w.slots) os << ',' << slot.frame_index;
        os << ',' << detail::format_double(w.label.valence) << ','
           << detail::format_double(w.label.arousal) << '\n';
        ++lines;
      }
    }
  }
  std::cout << "wrote " << lines << " " << (single ? "pair" : "window") << " lines to " << out
            << "\n";
  return 0;
}

int cmd_train_fer(const RunConfig& rc, const std::string& out, double val_fraction,
                  const std::string& resume) {
  rc.validate();
  echo_config(rc);
  auto scan = scan_video_dir(rc.resolved_data_root(), rc.sampler.f);
  auto [train_videos, val_videos] = split_videos(std::move(scan.videos), val_fraction);
  const auto train_pairs = gather_pairs(train_videos);
  const auto val_pairs = gather_pairs(val_videos);

  ModelConfig mc = rc.model;
  mc.seed = rc.seed;
  FerModel model(mc);
  Rng init_rng = Rng(rc.seed).fork(0xFE12);
  model.init(init_rng);
  if (!resume.empty()) model.load_from(load_checkpoint_file(resume));
  TrainConfig tc = rc.train;
  tc.seed = rc.seed;

  std::cout << "training FER on " << train_pairs.size() << " pairs, validating on "
            << val_pairs.size() << "\n";
  const TrainResult result = train_fer(model, train_pairs, val_pairs, tc);
  save_checkpoint_file(result.best_checkpoint, out + ".ckpt");
  std::ofstream log(out + ".log.csv");
  write_epoch_log_csv(result.log, log);
  std::cout << "best epoch " << result.best_epoch << ", val CCC "
            << result.log[static_cast<std::size_t>(result.best_epoch - 1)].val.row_string()
            << "\ncheckpoint: " << out << ".ckpt\n";
  return 0;
}

int cmd_train_capnet(const RunConfig& rc, const std::string& fer_checkpoint,
                     const std::string& out, double val_fraction,
                     const std::string& cache_path, const std::string& resume) {
  rc.validate();
  echo_config(rc);
  auto scan = scan_video_dir(rc.resolved_data_root(), rc.sampler.f);
  const std::vector<LabeledVideo> all_videos = scan.videos;
  auto [train_videos, val_videos] = split_videos(std::move(scan.videos), val_fraction);
  const auto train_windows = gather_windows(train_videos, rc.sampler);
  const auto val_windows = gather_windows(val_videos, rc.sampler);

  const TensorMap fer_map = load_checkpoint_file(fer_checkpoint);
  TinyCnnExtractor cnn(rc.model.image_size, static_cast<std::size_t>(rc.model.feature_dim));
  cnn.load_from(fer_map, "fer");

  TrainConfig tc = rc.train;
  tc.seed = rc.seed;

  std::unique_ptr<PrecomputedExtractor> precomputed;
  const FeatureExtractor* extractor = &cnn;
  if (tc.freeze_extractor) {
    FeatureCache cache(cnn.output_dim());
    if (!cache_path.empty() && std::filesystem::exists(cache_path)) {
      cache = FeatureCache::load(cache_path, cache_path + ".manifest");
      std::cout << "loaded feature cache " << cache_path << " (" << cache.size()
                << " frames)\n";
    } else {
      cache = precompute_features(cnn, all_videos, rc.threads);
      if (!cache_path.empty()) {
        cache.save(cache_path, cache_path + ".manifest");
        std::cout << "saved feature cache " << cache_path << " (" << cache.size()
                  << " frames)\n";
      }
    }
    precomputed = std::make_unique<PrecomputedExtractor>(std::move(cache));
    extractor = precomputed.get();
  }

  CausalityExtractorParams params(static_cast<std::size_t>(rc.model.feature_dim),
                                  static_cast<std::size_t>(rc.model.lstm_hidden),
                                  static_cast<std::size_t>(rc.model.fc_hidden),
                                  rc.model.dropout);
  Rng init_rng = Rng(rc.seed).fork(0xCA9);
  params.init(init_rng);
  if (!resume.empty()) params.load_from(load_checkpoint_file(resume));

  std::cout << "training CAPNet on " << train_windows.size() << " windows, validating on "
            << val_windows.size() << "\n";
  const TrainResult result =
      train_capnet(params, *extractor, train_windows, val_windows, tc, rc.sampler);

  TensorMap checkpoint = result.best_checkpoint;
  for (const auto& [name, tensor] : fer_map) checkpoint.insert({name, tensor});
  save_checkpoint_file(checkpoint, out + ".ckpt");
  std::ofstream log(out + ".log.csv");
  write_epoch_log_csv(result.log, log);
  std::cout << "best epoch " << result.best_epoch << ", val CCC "
            << result.log[static_cast<std::size_t>(result.best_epoch - 1)].val.row_string()
            << "\ncheckpoint: " << out << ".ckpt\n";
  return 0;
}

int cmd_evaluate(const RunConfig& rc, const std::string& checkpoint,
                 const std::string& predictor, const std::string& split, double val_fraction,
                 const std::string& csv_out, bool show_pcc) {
  rc.sampler.validate();
  echo_config(rc);
  auto scan = scan_video_dir(rc.resolved_data_root(), rc.sampler.f);
  std::vector<LabeledVideo> selected;
  if (split == "all") {
    selected = std::move(scan.videos);
  } else {
    auto [train_videos, val_videos] = split_videos(std::move(scan.videos), val_fraction);
    selected = split == "train" ? std::move(train_videos) : std::move(val_videos);
  }

  ReportRow row;
  if (predictor == "fer") {
    const TensorMap map = load_checkpoint_file(checkpoint);
    TinyCnnExtractor cnn = extractor_from_checkpoint(map);
    ModelConfig mc = rc.model;
    mc.image_size = cnn.image_size();
    mc.feature_dim = static_cast<int>(cnn.output_dim());
    FerModel model(mc);
    model.load_from(map);
    const auto pairs = gather_pairs(selected);
    row = {"FER-Tuned", "-", evaluate_pairs(make_fer_predictor(model), pairs,
                                            rc.train.batch_size)};
  } else if (predictor == "capnet") {
    const TensorMap map = load_checkpoint_file(checkpoint);
    const CapnetCheckpointInfo info = load_capnet_config(map);
    require_sampler_match(rc.sampler, info.sampler);
    TinyCnnExtractor cnn = extractor_from_checkpoint(map);
    CausalityExtractorParams params(info.feature_dim, info.lstm_hidden, info.fc_hidden,
                                    rc.model.dropout);
    params.load_from(map);
    const auto windows = gather_windows(selected, rc.sampler);
    row = {"CAPNet", rc.sampler.w.str(),
           evaluate(make_capnet_predictor(cnn, params), windows, rc.train.batch_size)};
  } else if (predictor == "identity" || predictor == "zero") {
    const bool identity = predictor == "identity";
    const auto windows = gather_windows(selected, rc.sampler);
    const BatchPredictor<SampleWindow> fn = [identity](const std::vector<SampleWindow>& batch) {
      Tensor out({batch.size(), 2});
      if (identity)
        for (std::size_t i = 0; i < batch.size(); ++i) {
          out(i, 0) = batch[i].label.valence;
          out(i, 1) = batch[i].label.arousal;
        }
      return out;
    };
    row = {predictor, rc.sampler.w.str(), evaluate(fn, windows, rc.train.batch_size)};
  } else {
    throw ConfigError("unknown predictor '" + predictor + "'");
  }

  std::cout << render_report_table({row});
  std::cout << "ccc: " << row.report.row_string() << "\n";
  if (show_pcc) {
    const auto pcc = [](const CCCStats& s) {
      const double den = std::sqrt(s.var_pred * s.var_label);
      return den < 1e-300 ? 0.0 : s.covar / den;
    };
    std::printf("pcc: %.3f / %.3f (valence / arousal, debug)\n", pcc(row.report.valence),
                pcc(row.report.arousal));
  }
  if (!csv_out.empty()) {
    std::ofstream os(csv_out);
    if (!os) throw IoError("cannot open for write: " + csv_out);
    os << render_report_csv({row});
  }
  return 0;
}

int cmd_gradcheck(const RunConfig& rc, std::vector<std::string> layers, int seeds,
                  bool inject_error) {
  echo_config(rc);
  if (layers.empty()) layers = default_grad_suites();
  for (const std::string& name : layers)
    if (std::find(default_grad_suites().begin(), default_grad_suites().end(), name) ==
        default_grad_suites().end())
      throw ConfigError("gradcheck: unknown suite '" + name + "'");
  bool all_pass = true;
  for (const std::string& name : layers) {
    const GradSuiteResult r = run_grad_suite(name, seeds, inject_error);
    std::printf("%-7s max_rel_err=%.3e threshold=%.0e skipped_kinks=%zu time=%.2fs %s\n",
                r.name.c_str(), r.max_rel_err, r.threshold, r.skipped_kinks, r.seconds,
                r.pass() ? "PASS" : "FAIL");
    if (!r.pass()) {
      all_pass = false;
      std::printf("  worst: %s\n", r.worst.c_str());
    }
  }
  if (!all_pass) throw Error("gradient check failed");
  return 0;
}

int cmd_stream_sim(const RunConfig& rc, const std::string& checkpoint,
                   const std::string& video_id, const std::string& out, bool realtime) {
  echo_config(rc);
  const TensorMap map = load_checkpoint_file(checkpoint);
  const CapnetCheckpointInfo info = load_capnet_config(map);
  auto scan = scan_video_dir(rc.resolved_data_root(), info.sampler.f);
  const LabeledVideo* video = nullptr;
  for (const LabeledVideo& v : scan.videos)
    if (video_id.empty() || v.video_id == video_id) {
      video = &v;
      break;
    }
  if (!video) throw Error("video not found: " + video_id);

  TinyCnnExtractor cnn = extractor_from_checkpoint(map);
  CausalityExtractorParams params(info.feature_dim, info.lstm_hidden, info.fc_hidden,
                                  rc.model.dropout);
  params.load_from(map);
  const auto side = static_cast<std::size_t>(cnn.image_size());

  StreamEngine engine(info.sampler, params,
                      [&cnn](const Tensor& image) { return cnn.extract(image); });
  const auto rows = run_stream_sim(
      *video, engine, [side](const std::string& path) { return load_image_tensor(path, side, side); },
      realtime);

  std::size_t predicted = 0;
  double micros = 0.0;
  for (const auto& r : rows) {
    predicted += r.state ? 1 : 0;
    micros += r.micros;
  }
  if (out.empty()) {
    write_stream_trace_csv(rows, std::cout);
  } else {
    std::ofstream os(out);
    if (!os) throw IoError("cannot open for write: " + out);
    write_stream_trace_csv(rows, os);
  }
  std::cerr << "replayed " << rows.size() << " frames of " << video->video_id << ": "
            << predicted << " predictions, " << rows.size() - predicted
            << " insufficient, mean " << (rows.empty() ? 0.0 : micros / rows.size())
            << " us/prediction\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"causal affect prediction from past facial frames"};
  app.require_subcommand(1);

  ConfigCli cc;
  std::function<int()> action;

  // synth-gen
  auto* synth = app.add_subcommand("synth-gen", "generate a synthetic causal dataset");
  add_config_options(synth, cc);
  auto synth_out = std::make_shared<std::string>();
  synth->add_option("--out", *synth_out, "output root (default: data root)");
  synth->callback([&, synth_out] {
    action = [&, synth_out] { return cmd_synth_gen(resolve_config(cc), *synth_out); };
  });

  // prepare-pairs
  auto* pairs = app.add_subcommand("prepare-pairs", "emit a window or pair manifest");
  add_config_options(pairs, cc);
  auto pairs_out = std::make_shared<std::string>();
  auto pairs_single = std::make_shared<bool>(false);
  pairs->add_option("--out", *pairs_out, "manifest output file")->required();
  pairs->add_flag("--single", *pairs_single, "emit single-image pairs (d = n = 0)");
  pairs->callback([&, pairs_out, pairs_single] {
    action = [&, pairs_out, pairs_single] {
      return cmd_prepare_pairs(resolve_config(cc), *pairs_out, *pairs_single);
    };
  });

  // train-fer
  auto* tfer = app.add_subcommand("train-fer", "fine-tune the single-image FER model");
  add_config_options(tfer, cc);
  auto tfer_out = std::make_shared<std::string>();
  auto tfer_val = std::make_shared<double>(0.2);
  auto tfer_resume = std::make_shared<std::string>();
  tfer->add_option("--out", *tfer_out, "output prefix (<out>.ckpt, <out>.log.csv)")
      ->required();
  tfer->add_option("--val-fraction", *tfer_val, "fraction of videos held out");
  tfer->add_option("--resume", *tfer_resume, "start from an existing checkpoint");
  tfer->callback([&, tfer_out, tfer_val, tfer_resume] {
    action = [&, tfer_out, tfer_val, tfer_resume] {
      return cmd_train_fer(resolve_config(cc), *tfer_out, *tfer_val, *tfer_resume);
    };
  });

  // train-capnet
  auto* tcap = app.add_subcommand("train-capnet", "train the causality extractor");
  add_config_options(tcap, cc);
  auto tcap_fer = std::make_shared<std::string>();
  auto tcap_out = std::make_shared<std::string>();
  auto tcap_val = std::make_shared<double>(0.2);
  auto tcap_cache = std::make_shared<std::string>();
  auto tcap_resume = std::make_shared<std::string>();
  tcap->add_option("--fer-checkpoint", *tcap_fer, "FER checkpoint providing the extractor")
      ->required();
  tcap->add_option("--out", *tcap_out, "output prefix")->required();
  tcap->add_option("--val-fraction", *tcap_val, "fraction of videos held out");
  tcap->add_option("--feature-cache", *tcap_cache,
                   "feature cache file to reuse or create (frozen extractor only)");
  tcap->add_option("--resume", *tcap_resume, "start from an existing checkpoint");
  tcap->callback([&, tcap_fer, tcap_out, tcap_val, tcap_cache, tcap_resume] {
    action = [&, tcap_fer, tcap_out, tcap_val, tcap_cache, tcap_resume] {
      return cmd_train_capnet(resolve_config(cc), *tcap_fer, *tcap_out, *tcap_val,
                              *tcap_cache, *tcap_resume);
    };
  });

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "evaluate a predictor, report CCC");
  add_config_options(eval, cc);
  auto eval_ckpt = std::make_shared<std::string>();
  auto eval_pred = std::make_shared<std::string>("capnet");
  auto eval_split = std::make_shared<std::string>("all");
  auto eval_val = std::make_shared<double>(0.2);
  auto eval_csv = std::make_shared<std::string>();
  auto eval_pcc = std::make_shared<bool>(false);
  eval->add_option("--checkpoint", *eval_ckpt, "model checkpoint (capnet/fer predictors)");
  eval->add_option("--predictor", *eval_pred, "capnet | fer | identity | zero");
  eval->add_option("--split", *eval_split, "all | train | val")
      ->check(CLI::IsMember({"all", "train", "val"}));
  eval->add_option("--val-fraction", *eval_val, "fraction of videos held out");
  eval->add_option("--csv-out", *eval_csv, "also write the report as CSV");
  eval->add_flag("--pcc", *eval_pcc, "print Pearson correlation as a debug line");
  eval->callback([&, eval_ckpt, eval_pred, eval_split, eval_val, eval_csv, eval_pcc] {
    action = [&, eval_ckpt, eval_pred, eval_split, eval_val, eval_csv, eval_pcc] {
      return cmd_evaluate(resolve_config(cc), *eval_ckpt, *eval_pred, *eval_split, *eval_val,
                          *eval_csv, *eval_pcc);
    };
  });

  // gradcheck
  auto* grad = app.add_subcommand("gradcheck", "finite-difference gradient verification");
  add_config_options(grad, cc);
  auto grad_layers = std::make_shared<std::vector<std::string>>();
  auto grad_seeds = std::make_shared<int>(20);
  auto grad_inject = std::make_shared<bool>(false);
  grad->add_option("--layers", *grad_layers, "suites to run (fc lstm ccc capnet cnn)")
      ->delimiter(',');
  grad->add_option("--seeds", *grad_seeds, "random seeds per suite");
  grad->add_flag("--inject-error", *grad_inject,
                 "corrupt one analytic gradient (negative control)");
  grad->callback([&, grad_layers, grad_seeds, grad_inject] {
    action = [&, grad_layers, grad_seeds, grad_inject] {
      return cmd_gradcheck(resolve_config(cc), *grad_layers, *grad_seeds, *grad_inject);
    };
  });

  // stream-sim
  auto* sim = app.add_subcommand("stream-sim", "replay a video through the streaming engine");
  add_config_options(sim, cc);
  auto sim_ckpt = std::make_shared<std::string>();
  auto sim_video = std::make_shared<std::string>();
  auto sim_out = std::make_shared<std::string>();
  auto sim_rt = std::make_shared<bool>(false);
  sim->add_option("--checkpoint", *sim_ckpt, "CAPNet checkpoint (with embedded extractor)")
      ->required();
  sim->add_option("--video", *sim_video, "video id (default: first in data root)");
  sim->add_option("--out", *sim_out, "trace CSV output (default: stdout)");
  sim->add_flag("--realtime", *sim_rt, "pace the replay at the video frame rate");
  sim->callback([&, sim_ckpt, sim_video, sim_out, sim_rt] {
    action = [&, sim_ckpt, sim_video, sim_out, sim_rt] {
      return cmd_stream_sim(resolve_config(cc), *sim_ckpt, *sim_video, *sim_out, *sim_rt);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    return action ? action() : 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
