#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "capnet/adam.hpp"
#include "capnet/checkpoint.hpp"
#include "capnet/dataset.hpp"
#include "capnet/feature_cache.hpp"
#include "capnet/nn.hpp"
#include "capnet/ppm.hpp"
#include "capnet/rational.hpp"
#include "capnet/rng.hpp"
#include "capnet/sampler.hpp"
#include "capnet/tensor.hpp"

namespace capnet {

struct ModelConfig {
  int image_size = 224;  // square input, 3 channels
  int feature_dim = 32;
  int lstm_hidden = 64;
  int fc_hidden = 64;
  double dropout = 0.2;
  std::uint64_t seed = 0;

  void validate() const {
    if (image_size <= 0 || feature_dim <= 0 || lstm_hidden <= 0 || fc_hidden <= 0)
      throw ConfigError("model: all dimensions must be positive");
    if (image_size % 8 != 0)
      throw ConfigError("model: image_size must be divisible by 8 (three 2x2 pools), got " +
                        std::to_string(image_size));
    if (dropout < 0.0 || dropout >= 1.0)
      throw ConfigError("model: dropout must be in [0,1), got " + std::to_string(dropout));
  }
};

enum class ExtractorKind { TinyCnn, Precomputed };

// Image-to-vector backbone behind a minimal interface. The causality
// extractor only ever sees length-D feature vectors, so backbones are
// swappable without touching its parameters.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual std::size_t output_dim() const = 0;
  virtual ExtractorKind kind() const = 0;
  virtual Tensor features_for(const FrameRef& ref) const = 0;
};

// ---------------------------------------------------------------------------
// Convolution pieces for the stand-in CNN. 3x3, stride 1, zero padding 1.

namespace convdet {

inline Tensor conv3x3_forward(const Tensor& in, const Tensor& w, const Tensor& b) {
  const std::size_t cin = in.dim(0), h = in.dim(1), wd = in.dim(2);
  const std::size_t cout = w.dim(0);
  if (w.dim(1) != cin) throw ShapeError("conv: weights " + w.shape_str() + " vs input " +
                                        in.shape_str());
  Tensor out({cout, h, wd});
  for (std::size_t co = 0; co < cout; ++co) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < wd; ++x) {
        double acc = b[co];
        for (std::size_t ci = 0; ci < cin; ++ci) {
          for (std::size_t ky = 0; ky < 3; ++ky) {
            const std::size_t iy = y + ky;
            if (iy < 1 || iy > h) continue;  // zero padding
            for (std::size_t kx = 0; kx < 3; ++kx) {
              const std::size_t ix = x + kx;
              if (ix < 1 || ix > wd) continue;
              acc += w(co, ci, ky, kx) * in(ci, iy - 1, ix - 1);
            }
          }
        }
        out(co, y, x) = acc;
      }
    }
  }
  return out;
}

inline void conv3x3_backward(const Tensor& in, const Tensor& w, const Tensor& dout,
                             Tensor& din, Tensor& dw, Tensor& db) {
  const std::size_t cin = in.dim(0), h = in.dim(1), wd = in.dim(2);
  const std::size_t cout = w.dim(0);
  for (std::size_t co = 0; co < cout; ++co) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < wd; ++x) {
        const double g = dout(co, y, x);
        if (g == 0.0) continue;
        db[co] += g;
        for (std::size_t ci = 0; ci < cin; ++ci) {
          for (std::size_t ky = 0; ky < 3; ++ky) {
            const std::size_t iy = y + ky;
            if (iy < 1 || iy > h) continue;
            for (std::size_t kx = 0; kx < 3; ++kx) {
              const std::size_t ix = x + kx;
              if (ix < 1 || ix > wd) continue;
              dw(co, ci, ky, kx) += g * in(ci, iy - 1, ix - 1);
              din(ci, iy - 1, ix - 1) += g * w(co, ci, ky, kx);
            }
          }
        }
      }
    }
  }
}

inline Tensor avgpool2_forward(const Tensor& in) {
  const std::size_t c = in.dim(0), h = in.dim(1), w = in.dim(2);
  if (h % 2 != 0 || w % 2 != 0) throw ShapeError("avgpool2: odd spatial size " + in.shape_str());
  Tensor out({c, h / 2, w / 2});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < h / 2; ++y)
      for (std::size_t x = 0; x < w / 2; ++x)
        out(ch, y, x) = 0.25 * (in(ch, 2 * y, 2 * x) + in(ch, 2 * y, 2 * x + 1) +
                                in(ch, 2 * y + 1, 2 * x) + in(ch, 2 * y + 1, 2 * x + 1));
  return out;
}

inline Tensor avgpool2_backward(const Tensor& dout, const std::vector<std::size_t>& in_shape) {
  Tensor din(in_shape);
  const std::size_t c = dout.dim(0), h = dout.dim(1), w = dout.dim(2);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        const double g = 0.25 * dout(ch, y, x);
        din(ch, 2 * y, 2 * x) += g;
        din(ch, 2 * y, 2 * x + 1) += g;
        din(ch, 2 * y + 1, 2 * x) += g;
        din(ch, 2 * y + 1, 2 * x + 1) += g;
      }
  return din;
}

inline void relu_inplace(Tensor& t) {
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i] < 0.0) t[i] = 0.0;
}

}  // namespace convdet

// ---------------------------------------------------------------------------
// TinyCnn: the fixed desk-scale stand-in backbone. Three blocks of
// (3x3 conv, ReLU, 2x2 average pool) with widths 8/16/32, global average
// pool, then a linear projection to the feature dimension.

struct TinyCnnParams {
  Tensor conv1_w, conv1_b;
  Tensor conv2_w, conv2_b;
  Tensor conv3_w, conv3_b;
  Tensor proj_w, proj_b;  // [32 x D], [D]

  TinyCnnParams() = default;
  explicit TinyCnnParams(std::size_t feature_dim)
      : conv1_w({8, 3, 3, 3}), conv1_b({8}),
        conv2_w({16, 8, 3, 3}), conv2_b({16}),
        conv3_w({32, 16, 3, 3}), conv3_b({32}),
        proj_w({32, feature_dim}), proj_b({feature_dim}) {}

  static TinyCnnParams zeros_like(const TinyCnnParams& p) {
    return TinyCnnParams(p.proj_w.dim(1));
  }

  template <typename Self, typename Fn>
  static void for_each_tensor_impl(Self& self, Fn&& fn) {
    fn("conv1/w", self.conv1_w);
    fn("conv1/b", self.conv1_b);
    fn("conv2/w", self.conv2_w);
    fn("conv2/b", self.conv2_b);
    fn("conv3/w", self.conv3_w);
    fn("conv3/b", self.conv3_b);
    fn("proj/w", self.proj_w);
    fn("proj/b", self.proj_b);
  }
  template <typename Fn> void for_each_tensor(Fn&& fn) { for_each_tensor_impl(*this, fn); }
  template <typename Fn> void for_each_tensor(Fn&& fn) const { for_each_tensor_impl(*this, fn); }

  std::vector<NamedParam> named(const std::string& prefix, TinyCnnParams* grads) {
    std::vector<NamedParam> out;
    for_each_tensor([&](const char* name, Tensor& t) {
      out.push_back({prefix + "/" + name, &t, nullptr});
    });
    if (grads) {
      std::size_t i = 0;
      grads->for_each_tensor([&](const char*, Tensor& t) { out[i++].grad = &t; });
    }
    return out;
  }
};

struct TinyCnnContext {
  Tensor image;          // [3 x S x S]
  Tensor a1, p1;         // block activations (post-ReLU) and pooled maps
  Tensor a2, p2;
  Tensor a3, p3;
  Tensor gap;            // [1 x 32]
};

class TinyCnnExtractor final : public FeatureExtractor {
 public:
  TinyCnnExtractor(int image_size, std::size_t feature_dim)
      : image_size_(image_size), feature_dim_(feature_dim), params_(feature_dim) {
    if (image_size <= 0 || image_size % 8 != 0)
      throw ConfigError("tiny cnn: image_size must be a positive multiple of 8");
  }

  std::size_t output_dim() const override { return feature_dim_; }
  ExtractorKind kind() const override { return ExtractorKind::TinyCnn; }
  int image_size() const { return image_size_; }

  TinyCnnParams& params() { return params_; }
  const TinyCnnParams& params() const { return params_; }

  void init(Rng& rng) {
    const auto fill = [&rng](Tensor& t, std::size_t fan_in) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
    };
    fill(params_.conv1_w, 3 * 9);
    fill(params_.conv2_w, 8 * 9);
    fill(params_.conv3_w, 16 * 9);
    fill(params_.proj_w, 32);
    params_.conv1_b.fill(0.0);
    params_.conv2_b.fill(0.0);
    params_.conv3_b.fill(0.0);
    params_.proj_b.fill(0.0);
  }

  Tensor forward(const Tensor& image, TinyCnnContext* ctx = nullptr) const {
    check_image(image);
    TinyCnnContext local;
    TinyCnnContext& c = ctx ? *ctx : local;
    c.image = image;
    c.a1 = convdet::conv3x3_forward(image, params_.conv1_w, params_.conv1_b);
    convdet::relu_inplace(c.a1);
    c.p1 = convdet::avgpool2_forward(c.a1);
    c.a2 = convdet::conv3x3_forward(c.p1, params_.conv2_w, params_.conv2_b);
    convdet::relu_inplace(c.a2);
    c.p2 = convdet::avgpool2_forward(c.a2);
    c.a3 = convdet::conv3x3_forward(c.p2, params_.conv3_w, params_.conv3_b);
    convdet::relu_inplace(c.a3);
    c.p3 = convdet::avgpool2_forward(c.a3);
    // global average pool
    const std::size_t hw = c.p3.dim(1) * c.p3.dim(2);
    c.gap = Tensor({1, 32});
    for (std::size_t ch = 0; ch < 32; ++ch) {
      double acc = 0.0;
      for (std::size_t i = 0; i < hw; ++i) acc += c.p3.data()[ch * hw + i];
      c.gap(0, ch) = acc / static_cast<double>(hw);
    }
    Tensor feat({1, feature_dim_});
    matmul_acc(c.gap, params_.proj_w, feat);
    for (std::size_t i = 0; i < feature_dim_; ++i) feat[i] += params_.proj_b[i];
    return Tensor({feature_dim_}, feat.values());
  }

  Tensor extract(const Tensor& image) const { return forward(image, nullptr); }

  // Accumulates parameter gradients; the image gradient is not needed.
  void backward(const TinyCnnContext& ctx, const Tensor& dfeat, TinyCnnParams& grads) const {
    if (dfeat.size() != feature_dim_)
      throw ShapeError("tiny cnn backward: dfeat " + dfeat.shape_str());
    // projection
    Tensor dgap({1, 32});
    for (std::size_t ch = 0; ch < 32; ++ch) {
      double acc = 0.0;
      for (std::size_t j = 0; j < feature_dim_; ++j) {
        acc += dfeat[j] * params_.proj_w(ch, j);
        grads.proj_w(ch, j) += ctx.gap(0, ch) * dfeat[j];
      }
      dgap(0, ch) = acc;
    }
    for (std::size_t j = 0; j < feature_dim_; ++j) grads.proj_b[j] += dfeat[j];
    // global average pool
    const std::size_t hw = ctx.p3.dim(1) * ctx.p3.dim(2);
    Tensor dp3(ctx.p3.shape());
    for (std::size_t ch = 0; ch < 32; ++ch) {
      const double g = dgap(0, ch) / static_cast<double>(hw);
      for (std::size_t i = 0; i < hw; ++i) dp3.data()[ch * hw + i] = g;
    }
    // block 3
    Tensor da3 = convdet::avgpool2_backward(dp3, ctx.a3.shape());
    mask_relu(da3, ctx.a3);
    Tensor dp2(ctx.p2.shape());
    convdet::conv3x3_backward(ctx.p2, params_.conv3_w, da3, dp2, grads.conv3_w,
                              grads.conv3_b);
    // block 2
    Tensor da2 = convdet::avgpool2_backward(dp2, ctx.a2.shape());
    mask_relu(da2, ctx.a2);
    Tensor dp1(ctx.p1.shape());
    convdet::conv3x3_backward(ctx.p1, params_.conv2_w, da2, dp1, grads.conv2_w,
                              grads.conv2_b);
    // block 1
    Tensor da1 = convdet::avgpool2_backward(dp1, ctx.a1.shape());
    mask_relu(da1, ctx.a1);
    Tensor dimage(ctx.image.shape());
    convdet::conv3x3_backward(ctx.image, params_.conv1_w, da1, dimage, grads.conv1_w,
                              grads.conv1_b);
  }

  Tensor features_for(const FrameRef& ref) const override {
    return extract(load_image_tensor(ref.path, static_cast<std::size_t>(image_size_),
                                     static_cast<std::size_t>(image_size_)));
  }

  void save_to(TensorMap& map, const std::string& prefix = "fer") const {
    params_.for_each_tensor(
        [&](const char* name, const Tensor& t) { map[prefix + "/" + name] = t; });
    map[prefix + "/config"] = Tensor({2}, {static_cast<double>(image_size_),
                                           static_cast<double>(feature_dim_)});
  }

  void load_from(const TensorMap& map, const std::string& prefix = "fer") {
    const Tensor& cfg = checkpoint_tensor(map, prefix + "/config");
    const int size = static_cast<int>(cfg[0]);
    const auto dim = static_cast<std::size_t>(cfg[1]);
    if (size != image_size_ || dim != feature_dim_)
      throw ConfigError("tiny cnn: checkpoint is (size=" + std::to_string(size) +
                        ", D=" + std::to_string(dim) + "), model expects (size=" +
                        std::to_string(image_size_) + ", D=" + std::to_string(feature_dim_) +
                        ")");
    params_.for_each_tensor([&](const char* name, Tensor& t) {
      const Tensor& stored = checkpoint_tensor(map, prefix + "/" + name);
      require_same_shape(t, stored, name);
      t = stored;
    });
  }

 private:
  void check_image(const Tensor& image) const {
    const auto s = static_cast<std::size_t>(image_size_);
    if (image.rank() != 3 || image.dim(0) != 3 || image.dim(1) != s || image.dim(2) != s)
      throw ShapeError("tiny cnn: want image [3 " + std::to_string(s) + " " +
                       std::to_string(s) + "], got " + image.shape_str());
  }

  static void mask_relu(Tensor& grad, const Tensor& activated) {
    for (std::size_t i = 0; i < grad.size(); ++i)
      if (activated[i] <= 0.0) grad[i] = 0.0;
  }

  int image_size_;
  std::size_t feature_dim_;
  TinyCnnParams params_;
};

// Frozen-feature workflow: features come from a prebuilt cache, bit-exactly
// as stored.
class PrecomputedExtractor final : public FeatureExtractor {
 public:
  explicit PrecomputedExtractor(FeatureCache cache) : cache_(std::move(cache)) {}

  std::size_t output_dim() const override { return cache_.dim(); }
  ExtractorKind kind() const override { return ExtractorKind::Precomputed; }

  Tensor features_for(const FrameRef& ref) const override {
    return cache_.get(ref.video_id, ref.frame_index);
  }

  const FeatureCache& cache() const { return cache_; }

 private:
  FeatureCache cache_;
};

// ---------------------------------------------------------------------------
// FER model: extractor + one FC head with tanh, predicting from a single
// current image.

struct FerModel {
  TinyCnnExtractor extractor;
  FcParams head;  // [D x 2], tanh

  explicit FerModel(const ModelConfig& cfg)
      : extractor(cfg.image_size, static_cast<std::size_t>(cfg.feature_dim)),
        head(static_cast<std::size_t>(cfg.feature_dim), 2, Activation::Tanh) {
    cfg.validate();
  }

  void init(Rng& rng) {
    Rng cnn_rng = rng.fork(0x7e2);
    Rng head_rng = rng.fork(0x7e3);
    extractor.init(cnn_rng);
    init_fc(head, head_rng);
  }

  void save_to(TensorMap& map) const {
    extractor.save_to(map, "fer");
    map["fer/head/w"] = head.w;
    map["fer/head/b"] = head.b;
  }

  void load_from(const TensorMap& map) {
    extractor.load_from(map, "fer");
    head.w = checkpoint_tensor(map, "fer/head/w");
    head.b = checkpoint_tensor(map, "fer/head/b");
  }
};

inline AffectState fer_forward(const Tensor& image, const FerModel& model) {
  const Tensor feat = model.extractor.extract(image);
  const Tensor out = fc_forward(Tensor({1, feat.size()}, feat.values()), model.head);
  return AffectState{out[0], out[1]};
}

// ---------------------------------------------------------------------------
// Causality extractor: LSTM + 2 FC layers; the last FC has two tanh units so
// outputs live in [-1, 1].

struct CausalityExtractorParams {
  LstmParams lstm;
  FcParams fc1;  // [H x M], ReLU
  FcParams fc2;  // [M x 2], tanh
  double dropout_rate = 0.2;

  CausalityExtractorParams() = default;
  CausalityExtractorParams(std::size_t feature_dim, std::size_t hidden, std::size_t fc_hidden,
                           double dropout)
      : lstm(feature_dim, hidden),
        fc1(hidden, fc_hidden, Activation::Relu),
        fc2(fc_hidden, 2, Activation::Tanh),
        dropout_rate(dropout) {
    if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must be in [0,1)");
  }

  static CausalityExtractorParams zeros_like(const CausalityExtractorParams& p) {
    CausalityExtractorParams z;
    z.lstm = LstmParams::zeros_like(p.lstm);
    z.fc1 = FcParams(p.fc1.in_dim(), p.fc1.out_dim(), p.fc1.act);
    z.fc2 = FcParams(p.fc2.in_dim(), p.fc2.out_dim(), p.fc2.act);
    z.dropout_rate = p.dropout_rate;
    return z;
  }

  void init(Rng& rng) {
    Rng lstm_rng = rng.fork(0xa1);
    Rng fc1_rng = rng.fork(0xa2);
    Rng fc2_rng = rng.fork(0xa3);
    init_lstm(lstm, lstm_rng);
    init_fc(fc1, fc1_rng);
    init_fc(fc2, fc2_rng);
  }

  template <typename Self, typename Fn>
  static void for_each_tensor_impl(Self& self, Fn&& fn) {
    fn("capnet/lstm/w_i", self.lstm.w_i);
    fn("capnet/lstm/w_f", self.lstm.w_f);
    fn("capnet/lstm/w_o", self.lstm.w_o);
    fn("capnet/lstm/w_g", self.lstm.w_g);
    fn("capnet/lstm/u_i", self.lstm.u_i);
    fn("capnet/lstm/u_f", self.lstm.u_f);
    fn("capnet/lstm/u_o", self.lstm.u_o);
    fn("capnet/lstm/u_g", self.lstm.u_g);
    fn("capnet/lstm/b_i", self.lstm.b_i);
    fn("capnet/lstm/b_f", self.lstm.b_f);
    fn("capnet/lstm/b_o", self.lstm.b_o);
    fn("capnet/lstm/b_g", self.lstm.b_g);
    fn("capnet/fc1/w", self.fc1.w);
    fn("capnet/fc1/b", self.fc1.b);
    fn("capnet/fc2/w", self.fc2.w);
    fn("capnet/fc2/b", self.fc2.b);
  }
  template <typename Fn> void for_each_tensor(Fn&& fn) { for_each_tensor_impl(*this, fn); }
  template <typename Fn> void for_each_tensor(Fn&& fn) const { for_each_tensor_impl(*this, fn); }

  std::vector<NamedParam> named(CausalityExtractorParams* grads) {
    std::vector<NamedParam> out;
    for_each_tensor([&](const char* name, Tensor& t) { out.push_back({name, &t, nullptr}); });
    if (grads) {
      std::size_t i = 0;
      grads->for_each_tensor([&](const char*, Tensor& t) { out[i++].grad = &t; });
    }
    return out;
  }

  void save_to(TensorMap& map) const {
    for_each_tensor([&](const char* name, const Tensor& t) { map[name] = t; });
  }

  // Reads only "capnet/*" tensors, so a checkpoint loads identically no
  // matter which extractor kind produced the features.
  void load_from(const TensorMap& map) {
    for_each_tensor([&](const char* name, Tensor& t) {
      const Tensor& stored = checkpoint_tensor(map, name);
      require_same_shape(t, stored, name);
      t = stored;
    });
  }
};

struct CapnetContext {
  std::vector<DropoutMask> input_masks;  // one per step
  std::vector<Tensor> dropped_inputs;    // LSTM inputs after dropout
  LstmContext lstm;
  DropoutMask hidden_mask;
  FcContext fc1, fc2;
};

// features: L tensors of [B x D], chronological. Returns [B x 2].
inline Tensor capnet_forward_batch(const std::vector<Tensor>& features,
                                   const CausalityExtractorParams& params, Mode mode,
                                   Rng* rng = nullptr, CapnetContext* ctx = nullptr) {
  if (features.empty()) throw ShapeError("capnet: empty feature sequence");
  if (mode == Mode::Train && params.dropout_rate > 0.0 && !rng)
    throw ConfigError("capnet: train mode needs an rng for dropout");
  Rng dummy(0);
  Rng& r = rng ? *rng : dummy;

  CapnetContext local;
  CapnetContext& c = ctx ? *ctx : local;
  c.input_masks.resize(features.size());
  c.dropped_inputs.clear();
  c.dropped_inputs.reserve(features.size());
  for (std::size_t t = 0; t < features.size(); ++t)
    c.dropped_inputs.push_back(
        dropout(features[t], params.dropout_rate, mode, r, &c.input_masks[t]));

  const Tensor h = lstm_forward(c.dropped_inputs, params.lstm, ctx ? &c.lstm : nullptr);
  const Tensor h_dropped = dropout(h, params.dropout_rate, mode, r, &c.hidden_mask);
  const Tensor m = fc_forward(h_dropped, params.fc1, ctx ? &c.fc1 : nullptr);
  return fc_forward(m, params.fc2, ctx ? &c.fc2 : nullptr);
}

// Backward from dL/dout [B x 2]; accumulates into `grads` and returns
// dL/dfeatures per step (zeros when dropout removed the path).
inline std::vector<Tensor> capnet_backward_batch(const Tensor& dout,
                                                 const CausalityExtractorParams& params,
                                                 const CapnetContext& ctx,
                                                 CausalityExtractorParams& grads) {
  const Tensor dm = fc_backward(dout, params.fc2, ctx.fc2, grads.fc2);
  const Tensor dh_dropped = fc_backward(dm, params.fc1, ctx.fc1, grads.fc1);
  const Tensor dh = dropout_backward(dh_dropped, ctx.hidden_mask);
  std::vector<Tensor> dx = lstm_backward(dh, params.lstm, ctx.lstm, grads.lstm);
  for (std::size_t t = 0; t < dx.size(); ++t)
    dx[t] = dropout_backward(dx[t], ctx.input_masks[t]);
  return dx;
}

inline std::vector<Tensor> window_features(const SampleWindow& window,
                                           const FeatureExtractor& extractor) {
  std::vector<Tensor> features;
  features.reserve(window.slots.size());
  for (const FrameRef& slot : window.slots) {
    Tensor f = extractor.features_for(slot);
    features.push_back(Tensor({1, f.size()}, f.values()));
  }
  return features;
}

// Eval-mode prediction for one window.
inline AffectState capnet_forward(const SampleWindow& window, const FeatureExtractor& extractor,
                                  const CausalityExtractorParams& params,
                                  std::int64_t expected_length = 0) {
  if (expected_length > 0 &&
      window.slots.size() != static_cast<std::size_t>(expected_length))
    throw ShapeError("capnet: window has " + std::to_string(window.slots.size()) +
                     " slots, model expects " + std::to_string(expected_length));
  const Tensor out = capnet_forward_batch(window_features(window, extractor), params,
                                          Mode::Eval);
  return AffectState{out[0], out[1]};
}

// ---------------------------------------------------------------------------
// Checkpoint header describing the trained CAPNet configuration:
// (D, H, M, w_num, w_den, s, d_num, d_den, f).

struct CapnetCheckpointInfo {
  std::size_t feature_dim = 0, lstm_hidden = 0, fc_hidden = 0;
  SamplerConfig sampler;
};

inline void save_capnet_config(TensorMap& map, const CapnetCheckpointInfo& info) {
  map["capnet/config"] = Tensor(
      {9}, {static_cast<double>(info.feature_dim), static_cast<double>(info.lstm_hidden),
            static_cast<double>(info.fc_hidden), static_cast<double>(info.sampler.w.num),
            static_cast<double>(info.sampler.w.den), static_cast<double>(info.sampler.s),
            static_cast<double>(info.sampler.d.num), static_cast<double>(info.sampler.d.den),
            static_cast<double>(info.sampler.f)});
}

inline CapnetCheckpointInfo load_capnet_config(const TensorMap& map) {
  const Tensor& t = checkpoint_tensor(map, "capnet/config");
  if (t.size() != 9) throw IoError("capnet/config: expected 9 values");
  CapnetCheckpointInfo info;
  info.feature_dim = static_cast<std::size_t>(t[0]);
  info.lstm_hidden = static_cast<std::size_t>(t[1]);
  info.fc_hidden = static_cast<std::size_t>(t[2]);
  info.sampler.w = Rational(static_cast<std::int64_t>(t[3]), static_cast<std::int64_t>(t[4]));
  info.sampler.s = static_cast<int>(t[5]);
  info.sampler.d = Rational(static_cast<std::int64_t>(t[6]), static_cast<std::int64_t>(t[7]));
  info.sampler.f = static_cast<int>(t[8]);
  return info;
}

}  // namespace capnet
