#pragma once

#include <functional>
#include <vector>

#include "capnet/ccc.hpp"
#include "capnet/models.hpp"
#include "capnet/sampler.hpp"

namespace capnet {

// Batched predictor: maps a batch of items to an [N x 2] prediction tensor.
template <typename Item>
using BatchPredictor = std::function<Tensor(const std::vector<Item>&)>;

// Accumulates predictions over the whole stream and computes CCC once,
// globally; per-batch CCC is a training concern, not an evaluation one.
template <typename Item, typename LabelOf>
CCCReport evaluate_items(const BatchPredictor<Item>& predict, const std::vector<Item>& items,
                         std::size_t batch_size, LabelOf&& label_of,
                         bool sample_variance = false) {
  if (items.empty()) throw Error("evaluate: empty stream");
  if (batch_size == 0) throw ConfigError("evaluate: batch size must be positive");
  CCCAccumulator valence, arousal;
  for (std::size_t start = 0; start < items.size(); start += batch_size) {
    const std::size_t end = std::min(items.size(), start + batch_size);
    const std::vector<Item> batch(items.begin() + static_cast<std::ptrdiff_t>(start),
                                  items.begin() + static_cast<std::ptrdiff_t>(end));
    const Tensor preds = predict(batch);
    if (preds.rank() != 2 || preds.dim(0) != batch.size() || preds.dim(1) != 2)
      throw ShapeError("evaluate: predictor returned " + preds.shape_str() + " for batch of " +
                       std::to_string(batch.size()));
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const AffectState label = label_of(batch[i]);
      valence.add(preds(i, 0), label.valence);
      arousal.add(preds(i, 1), label.arousal);
    }
  }
  return make_report(valence, arousal, sample_variance);
}

inline CCCReport evaluate(const BatchPredictor<SampleWindow>& predict,
                          const std::vector<SampleWindow>& windows, std::size_t batch_size) {
  return evaluate_items<SampleWindow>(predict, windows, batch_size,
                                      [](const SampleWindow& w) { return w.label; });
}

inline CCCReport evaluate_pairs(const BatchPredictor<SinglePair>& predict,
                                const std::vector<SinglePair>& pairs, std::size_t batch_size) {
  return evaluate_items<SinglePair>(predict, pairs, batch_size,
                                    [](const SinglePair& p) { return p.label; });
}

inline BatchPredictor<SampleWindow> make_capnet_predictor(
    const FeatureExtractor& extractor, const CausalityExtractorParams& params) {
  return [&extractor, &params](const std::vector<SampleWindow>& batch) {
    Tensor out({batch.size(), 2});
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const AffectState p = capnet_forward(batch[i], extractor, params);
      out(i, 0) = p.valence;
      out(i, 1) = p.arousal;
    }
    return out;
  };
}

inline BatchPredictor<SinglePair> make_fer_predictor(const FerModel& model) {
  return [&model](const std::vector<SinglePair>& batch) {
    Tensor out({batch.size(), 2});
    const auto side = static_cast<std::size_t>(model.extractor.image_size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const AffectState p =
          fer_forward(load_image_tensor(batch[i].frame.path, side, side), model);
      out(i, 0) = p.valence;
      out(i, 1) = p.arousal;
    }
    return out;
  };
}

}  // namespace capnet
