#pragma once

#include <chrono>
#include <cstdint>
#include <limits>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "capnet/adam.hpp"
#include "capnet/ccc.hpp"
#include "capnet/checkpoint.hpp"
#include "capnet/evaluate.hpp"
#include "capnet/feature_cache.hpp"
#include "capnet/models.hpp"
#include "capnet/rng.hpp"
#include "capnet/sampler.hpp"

namespace capnet {

struct TrainConfig {
  std::size_t batch_size = 128;
  double lr = 1e-5;
  int patience = 4;
  int max_epochs = 200;
  std::uint64_t seed = 0;
  bool freeze_extractor = true;  // CAPNet default; train_fer always fine-tunes

  void validate() const {
    if (batch_size < 2)
      throw ConfigError("train: batch_size must be >= 2 (CCC needs n >= 2), got " +
                        std::to_string(batch_size));
    if (patience < 1) throw ConfigError("train: patience must be >= 1");
    if (max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");
    if (!(lr > 0.0)) throw ConfigError("train: lr must be positive");
  }
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  CCCReport val;
  double seconds = 0.0;
};

// "epoch,train_loss,val_valence,val_arousal,val_mean,seconds"
inline void write_epoch_log_csv(const std::vector<EpochRecord>& log, std::ostream& os) {
  os << "epoch,train_loss,val_valence,val_arousal,val_mean,seconds\n";
  char buf[160];
  for (const EpochRecord& r : log) {
    std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%.6f,%.6f,%.3f\n", r.epoch, r.train_loss,
                  r.val.valence.ccc, r.val.arousal.ccc, r.val.mean_ccc, r.seconds);
    os << buf;
  }
}

// Strict-improvement early stopping: stop once the metric has failed to
// exceed the best seen for `patience` consecutive epochs.
class EarlyStopper {
 public:
  explicit EarlyStopper(int patience) : patience_(patience) {
    if (patience < 1) throw ConfigError("patience must be >= 1");
  }

  // Returns true when this epoch strictly improved the best metric.
  bool observe(int epoch, double metric) {
    if (metric > best_) {
      best_ = metric;
      best_epoch_ = epoch;
      streak_ = 0;
      return true;
    }
    ++streak_;
    return false;
  }

  bool should_stop() const { return streak_ >= patience_; }
  double best() const { return best_; }
  int best_epoch() const { return best_epoch_; }

 private:
  int patience_;
  double best_ = -std::numeric_limits<double>::infinity();
  int best_epoch_ = 0;
  int streak_ = 0;
};

struct TrainResult {
  TensorMap best_checkpoint;
  std::vector<EpochRecord> log;
  int best_epoch = 0;
  double best_metric = 0.0;
};

namespace traindet {

inline std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng = Rng(seed).fork(0x50'41'47'45ull, static_cast<std::uint64_t>(epoch));
  rng.shuffle(order);
  return order;
}

inline double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace traindet

// ---------------------------------------------------------------------------
// FER fine-tuning on single (current image, label) pairs. The extractor and
// head train end to end.

inline TrainResult train_fer(FerModel& model, const std::vector<SinglePair>& train_pairs,
                             const std::vector<SinglePair>& val_pairs,
                             const TrainConfig& config) {
  config.validate();
  if (train_pairs.empty() || val_pairs.empty()) throw Error("train_fer: empty stream");
  if (train_pairs.size() < config.batch_size)
    throw ConfigError("train_fer: " + std::to_string(train_pairs.size()) +
                      " pairs cannot fill one batch of " + std::to_string(config.batch_size));
  const auto side = static_cast<std::size_t>(model.extractor.image_size());
  const std::size_t feature_dim = model.extractor.output_dim();

  AdamState adam;
  adam.lr = config.lr;
  EarlyStopper stopper(config.patience);
  TrainResult result;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<std::size_t> order =
        traindet::epoch_order(train_pairs.size(), config.seed, epoch);
    const std::size_t num_batches = train_pairs.size() / config.batch_size;  // drop last
    double loss_sum = 0.0;

    std::vector<TinyCnnContext> cnn_ctx(config.batch_size);
    for (std::size_t b = 0; b < num_batches; ++b) {
      Tensor features({config.batch_size, feature_dim});
      Tensor labels({config.batch_size, 2});
      for (std::size_t i = 0; i < config.batch_size; ++i) {
        const SinglePair& pair = train_pairs[order[b * config.batch_size + i]];
        const Tensor image = load_image_tensor(pair.frame.path, side, side);
        const Tensor feat = model.extractor.forward(image, &cnn_ctx[i]);
        for (std::size_t j = 0; j < feature_dim; ++j) features(i, j) = feat[j];
        labels(i, 0) = pair.label.valence;
        labels(i, 1) = pair.label.arousal;
      }
      FcContext head_ctx;
      const Tensor preds = fc_forward(features, model.head, &head_ctx);
      const CccLossResult loss = ccc_loss_and_grad(preds, labels);
      loss_sum += loss.loss;

      FcParams head_grads(model.head.in_dim(), model.head.out_dim(), model.head.act);
      const Tensor dfeatures = fc_backward(loss.grad, model.head, head_ctx, head_grads);
      TinyCnnParams cnn_grads = TinyCnnParams::zeros_like(model.extractor.params());
      Tensor dfeat({feature_dim});
      for (std::size_t i = 0; i < config.batch_size; ++i) {
        for (std::size_t j = 0; j < feature_dim; ++j) dfeat[j] = dfeatures(i, j);
        model.extractor.backward(cnn_ctx[i], dfeat, cnn_grads);
      }

      std::vector<NamedParam> params =
          model.extractor.params().named("fer", &cnn_grads);
      params.push_back({"fer/head/w", &model.head.w, &head_grads.w});
      params.push_back({"fer/head/b", &model.head.b, &head_grads.b});
      adam_step(params, adam);
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = num_batches ? loss_sum / static_cast<double>(num_batches) : 0.0;
    record.val = evaluate_pairs(make_fer_predictor(model), val_pairs, config.batch_size);
    record.seconds = traindet::seconds_since(t0);
    result.log.push_back(record);

    if (stopper.observe(epoch, record.val.mean_ccc)) {
      result.best_checkpoint.clear();
      model.save_to(result.best_checkpoint);
    }
    if (stopper.should_stop()) break;
  }
  result.best_epoch = stopper.best_epoch();
  result.best_metric = stopper.best();
  model.load_from(result.best_checkpoint);
  return result;
}

// ---------------------------------------------------------------------------
// CAPNet training over causal windows. With freeze_extractor (the default),
// only the causality extractor receives updates and per-slot features are
// resolved once up front.

inline TrainResult train_capnet(CausalityExtractorParams& params,
                                const FeatureExtractor& extractor,
                                const std::vector<SampleWindow>& train_windows,
                                const std::vector<SampleWindow>& val_windows,
                                const TrainConfig& config, const SamplerConfig& sampler) {
  config.validate();
  sampler.validate();
  if (train_windows.empty() || val_windows.empty()) throw Error("train_capnet: empty stream");
  if (train_windows.size() < config.batch_size)
    throw ConfigError("train_capnet: " + std::to_string(train_windows.size()) +
                      " windows cannot fill one batch of " + std::to_string(config.batch_size));
  const std::size_t window_len = static_cast<std::size_t>(sampler.window_length());
  for (const auto* windows : {&train_windows, &val_windows})
    for (const SampleWindow& w : *windows)
      if (w.slots.size() != window_len)
        throw ConfigError("train_capnet: window at " + w.video_id + ":" +
                          std::to_string(w.target_frame) + " has " +
                          std::to_string(w.slots.size()) + " slots, config expects " +
                          std::to_string(window_len));
  const std::size_t feature_dim = extractor.output_dim();
  if (feature_dim != params.lstm.input_dim)
    throw ConfigError("train_capnet: extractor D=" + std::to_string(feature_dim) +
                      " does not match causality extractor input " +
                      std::to_string(params.lstm.input_dim));

  const TinyCnnExtractor* cnn = dynamic_cast<const TinyCnnExtractor*>(&extractor);
  if (!config.freeze_extractor && !cnn)
    throw ConfigError("train_capnet: unfreezing requires a trainable TinyCnn extractor");
  TinyCnnExtractor* trainable_cnn =
      config.freeze_extractor ? nullptr : const_cast<TinyCnnExtractor*>(cnn);

  // Frozen features never change; resolve them once.
  const auto resolve = [&](const std::vector<SampleWindow>& windows) {
    std::vector<std::vector<Tensor>> features(windows.size());
    for (std::size_t i = 0; i < windows.size(); ++i) {
      features[i].reserve(window_len);
      for (const FrameRef& slot : windows[i].slots)
        features[i].push_back(extractor.features_for(slot));
    }
    return features;
  };
  std::vector<std::vector<Tensor>> train_features, val_features;
  if (!trainable_cnn) {
    train_features = resolve(train_windows);
    val_features = resolve(val_windows);
  }

  const auto predict_val = [&](const std::vector<std::size_t>& indices) {
    Tensor preds({indices.size(), 2});
    Tensor labels({indices.size(), 2});
    std::vector<Tensor> step({Tensor()});
    for (std::size_t i = 0; i < indices.size(); ++i) {
      const SampleWindow& w = val_windows[indices[i]];
      std::vector<Tensor> seq;
      seq.reserve(window_len);
      for (std::size_t t = 0; t < window_len; ++t) {
        const Tensor f = trainable_cnn ? extractor.features_for(w.slots[t])
                                       : val_features[indices[i]][t];
        seq.push_back(Tensor({1, feature_dim}, f.values()));
      }
      const Tensor out = capnet_forward_batch(seq, params, Mode::Eval);
      preds(i, 0) = out[0];
      preds(i, 1) = out[1];
      labels(i, 0) = w.label.valence;
      labels(i, 1) = w.label.arousal;
    }
    return std::make_pair(preds, labels);
  };

  AdamState adam;
  adam.lr = config.lr;
  EarlyStopper stopper(config.patience);
  TrainResult result;
  const auto side = trainable_cnn ? static_cast<std::size_t>(trainable_cnn->image_size()) : 0;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<std::size_t> order =
        traindet::epoch_order(train_windows.size(), config.seed, epoch);
    Rng dropout_rng = Rng(config.seed).fork(0x44'52'4f'50ull, static_cast<std::uint64_t>(epoch));
    const std::size_t num_batches = train_windows.size() / config.batch_size;  // drop last
    double loss_sum = 0.0;

    for (std::size_t b = 0; b < num_batches; ++b) {
      std::vector<Tensor> seq(window_len, Tensor({config.batch_size, feature_dim}));
      Tensor labels({config.batch_size, 2});
      // Contexts for the unfrozen path, per window slot.
      std::vector<std::vector<TinyCnnContext>> cnn_ctx;
      if (trainable_cnn)
        cnn_ctx.assign(config.batch_size, std::vector<TinyCnnContext>(window_len));
      for (std::size_t i = 0; i < config.batch_size; ++i) {
        const std::size_t wi = order[b * config.batch_size + i];
        const SampleWindow& w = train_windows[wi];
        for (std::size_t t = 0; t < window_len; ++t) {
          Tensor f;
          if (trainable_cnn) {
            const Tensor image = load_image_tensor(w.slots[t].path, side, side);
            f = trainable_cnn->forward(image, &cnn_ctx[i][t]);
          } else {
            f = train_features[wi][t];
          }
          for (std::size_t j = 0; j < feature_dim; ++j) seq[t](i, j) = f[j];
        }
        labels(i, 0) = w.label.valence;
        labels(i, 1) = w.label.arousal;
      }

      CapnetContext ctx;
      const Tensor preds =
          capnet_forward_batch(seq, params, Mode::Train, &dropout_rng, &ctx);
      const CccLossResult loss = ccc_loss_and_grad(preds, labels);
      loss_sum += loss.loss;

      CausalityExtractorParams grads = CausalityExtractorParams::zeros_like(params);
      const std::vector<Tensor> dseq = capnet_backward_batch(loss.grad, params, ctx, grads);

      std::vector<NamedParam> named = params.named(&grads);
      TinyCnnParams cnn_grads;
      if (trainable_cnn) {
        cnn_grads = TinyCnnParams::zeros_like(trainable_cnn->params());
        Tensor dfeat({feature_dim});
        for (std::size_t i = 0; i < config.batch_size; ++i)
          for (std::size_t t = 0; t < window_len; ++t) {
            for (std::size_t j = 0; j < feature_dim; ++j) dfeat[j] = dseq[t](i, j);
            trainable_cnn->backward(cnn_ctx[i][t], dfeat, cnn_grads);
          }
        for (const NamedParam& np : trainable_cnn->params().named("fer", &cnn_grads))
          named.push_back(np);
      }
      adam_step(named, adam);
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = num_batches ? loss_sum / static_cast<double>(num_batches) : 0.0;
    {
      std::vector<std::size_t> all(val_windows.size());
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
      const auto [preds, labels] = predict_val(all);
      CCCAccumulator valence, arousal;
      for (std::size_t i = 0; i < all.size(); ++i) {
        valence.add(preds(i, 0), labels(i, 0));
        arousal.add(preds(i, 1), labels(i, 1));
      }
      record.val = make_report(valence, arousal);
    }
    record.seconds = traindet::seconds_since(t0);
    result.log.push_back(record);

    if (stopper.observe(epoch, record.val.mean_ccc)) {
      result.best_checkpoint.clear();
      params.save_to(result.best_checkpoint);
      CapnetCheckpointInfo info;
      info.feature_dim = feature_dim;
      info.lstm_hidden = params.lstm.hidden_dim;
      info.fc_hidden = params.fc1.out_dim();
      info.sampler = sampler;
      save_capnet_config(result.best_checkpoint, info);
      if (cnn) cnn->save_to(result.best_checkpoint, "fer");
    }
    if (stopper.should_stop()) break;
  }
  result.best_epoch = stopper.best_epoch();
  result.best_metric = stopper.best();
  params.load_from(result.best_checkpoint);
  return result;
}

// ---------------------------------------------------------------------------
// Frozen-feature precomputation. Frames are processed in a fixed order and
// written by slot, so the result is identical for any thread count.

inline FeatureCache precompute_features(const TinyCnnExtractor& extractor,
                                        const std::vector<LabeledVideo>& videos,
                                        int threads = 1) {
  if (threads < 1) throw ConfigError("precompute: threads must be >= 1");
  struct Job {
    const FrameRef* ref;
  };
  std::vector<Job> jobs;
  for (const LabeledVideo& video : videos)
    for (const auto& [index, ref] : video.frames) jobs.push_back({&ref});

  std::vector<Tensor> features(jobs.size());
  const auto worker = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i)
      features[i] = extractor.features_for(*jobs[i].ref);
  };
  if (threads == 1 || jobs.size() < 2) {
    worker(0, jobs.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (jobs.size() + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const std::size_t begin = std::min(jobs.size(), t * chunk);
      const std::size_t end = std::min(jobs.size(), begin + chunk);
      if (begin < end) pool.emplace_back(worker, begin, end);
    }
    for (std::thread& th : pool) th.join();
  }

  FeatureCache cache(extractor.output_dim());
  for (std::size_t i = 0; i < jobs.size(); ++i)
    cache.put(jobs[i].ref->video_id, jobs[i].ref->frame_index, features[i]);
  return cache;
}

}  // namespace capnet
