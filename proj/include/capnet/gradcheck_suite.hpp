#pragma once

#include <chrono>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "capnet/ccc.hpp"
#include "capnet/grad_check.hpp"
#include "capnet/models.hpp"
#include "capnet/nn.hpp"
#include "capnet/rng.hpp"

namespace capnet {

struct GradSuiteResult {
  std::string name;
  double max_rel_err = 0.0;
  double threshold = 0.0;
  std::string worst;
  std::size_t skipped_kinks = 0;
  double seconds = 0.0;
  bool pass() const { return max_rel_err < threshold; }
};

namespace gradsuite {

inline void fill_uniform(Tensor& t, Rng& rng, double lo = -1.0, double hi = 1.0) {
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
}

inline double weighted_sum(const Tensor& t, const Tensor& weights) {
  double acc = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) acc += t[i] * weights[i];
  return acc;
}

inline std::size_t pick_dim(Rng& rng) {
  constexpr std::size_t dims[] = {1, 3, 8};
  return dims[rng.index(3)];
}

inline void hash_active(std::uint64_t& sig, const Tensor& post_relu) {
  for (std::size_t i = 0; i < post_relu.size(); ++i)
    sig = sig * 1099511628211ULL ^ static_cast<std::uint64_t>(post_relu[i] > 0.0);
}

inline GradCheckResult check_fc_once(std::uint64_t seed, bool inject_error) {
  Rng rng(seed);
  const std::size_t n = 2 + rng.index(4);
  const std::size_t in = pick_dim(rng);
  const std::size_t out = pick_dim(rng);
  const Activation acts[] = {Activation::None, Activation::Tanh, Activation::Relu};
  FcParams p(in, out, acts[seed % 3]);
  fill_uniform(p.w, rng);
  fill_uniform(p.b, rng);
  Tensor x({n, in});
  fill_uniform(x, rng);
  Tensor direction({n, out});
  fill_uniform(direction, rng);

  FcContext ctx;
  fc_forward(x, p, &ctx);
  FcParams grads(in, out, p.act);
  const Tensor dx = fc_backward(direction, p, ctx, grads);
  if (inject_error) grads.w[0] += 1e-2;

  std::uint64_t sig = 0;
  const auto eval = [&] {
    FcContext c;
    const double loss = weighted_sum(fc_forward(x, p, &c), direction);
    sig = 0;
    if (p.act == Activation::Relu) hash_active(sig, c.out);
    return loss;
  };
  return grad_check(eval,
                    {{"x", &x, &dx}, {"w", &p.w, &grads.w}, {"b", &p.b, &grads.b}}, 1e-5, 0,
                    nullptr, [&] { return sig; });
}

inline GradCheckResult check_lstm_once(std::uint64_t seed, bool inject_error) {
  Rng rng(seed);
  constexpr std::size_t lengths[] = {1, 2, 9};
  const std::size_t length = lengths[seed % 3];
  const std::size_t batch = 1 + rng.index(2);
  const std::size_t in = pick_dim(rng);
  const std::size_t hidden = pick_dim(rng);
  LstmParams p(in, hidden);
  Rng init_rng = rng.fork(1);
  init_lstm(p, init_rng);
  std::vector<Tensor> seq(length, Tensor({batch, in}));
  for (Tensor& x : seq) fill_uniform(x, rng);
  Tensor direction({batch, hidden});
  fill_uniform(direction, rng);

  LstmContext ctx;
  lstm_forward(seq, p, &ctx);
  LstmParams grads = LstmParams::zeros_like(p);
  const std::vector<Tensor> dx = lstm_backward(direction, p, ctx, grads);
  if (inject_error) grads.w_g[0] += 1e-2;

  const auto eval = [&] { return weighted_sum(lstm_forward(seq, p), direction); };
  std::vector<GradCheckTarget> targets = {
      {"w_i", &p.w_i, &grads.w_i}, {"w_f", &p.w_f, &grads.w_f},
      {"w_o", &p.w_o, &grads.w_o}, {"w_g", &p.w_g, &grads.w_g},
      {"u_i", &p.u_i, &grads.u_i}, {"u_f", &p.u_f, &grads.u_f},
      {"u_o", &p.u_o, &grads.u_o}, {"u_g", &p.u_g, &grads.u_g},
      {"b_i", &p.b_i, &grads.b_i}, {"b_f", &p.b_f, &grads.b_f},
      {"b_o", &p.b_o, &grads.b_o}, {"b_g", &p.b_g, &grads.b_g},
  };
  for (std::size_t t = 0; t < length; ++t)
    targets.push_back({"x" + std::to_string(t), &seq[t], &dx[t]});
  return grad_check(eval, targets, 1e-5);
}

inline GradCheckResult check_ccc_once(std::uint64_t seed, bool inject_error) {
  Rng rng(seed);
  const std::size_t n = 2 + rng.index(15);
  Tensor preds({n, 2}), labels({n, 2});
  fill_uniform(preds, rng);
  fill_uniform(labels, rng);
  CccLossResult analytic = ccc_loss_and_grad(preds, labels);
  if (inject_error) analytic.grad[0] += 1e-2;
  const auto eval = [&] { return ccc_loss_and_grad(preds, labels).loss; };
  return grad_check(eval, {{"preds", &preds, &analytic.grad}}, 1e-6);
}

// Feature-level CAPNet stack (LSTM -> FC -> FC -> 1-CCC) in eval mode, i.e.
// with dropout bypassed.
inline GradCheckResult check_capnet_once(std::uint64_t seed, bool inject_error) {
  Rng rng(seed);
  const std::size_t batch = 4;
  const std::size_t length = 3;
  const std::size_t in = pick_dim(rng);
  const std::size_t hidden = pick_dim(rng);
  const std::size_t fc_hidden = pick_dim(rng);
  CausalityExtractorParams p(in, hidden, fc_hidden, 0.2);
  Rng init_rng = rng.fork(1);
  p.init(init_rng);
  std::vector<Tensor> features(length, Tensor({batch, in}));
  for (Tensor& x : features) fill_uniform(x, rng);
  Tensor labels({batch, 2});
  fill_uniform(labels, rng);

  CapnetContext ctx;
  const Tensor out = capnet_forward_batch(features, p, Mode::Eval, nullptr, &ctx);
  const CccLossResult loss = ccc_loss_and_grad(out, labels);
  CausalityExtractorParams grads = CausalityExtractorParams::zeros_like(p);
  const std::vector<Tensor> dfeatures = capnet_backward_batch(loss.grad, p, ctx, grads);
  if (inject_error) grads.fc1.w[0] += 1e-2;

  std::uint64_t sig = 0;
  const auto eval = [&] {
    CapnetContext c;
    const double l =
        ccc_loss_and_grad(capnet_forward_batch(features, p, Mode::Eval, nullptr, &c), labels)
            .loss;
    sig = 0;
    hash_active(sig, c.fc1.out);
    return l;
  };
  std::vector<GradCheckTarget> targets;
  std::vector<NamedParam> named = p.named(&grads);
  for (const NamedParam& np : named)
    targets.push_back({np.name, np.value, np.grad});
  for (std::size_t t = 0; t < length; ++t)
    targets.push_back({"feat" + std::to_string(t), &features[t], &dfeatures[t]});
  return grad_check(eval, targets, 1e-4, 0, nullptr, [&] { return sig; });
}

// End-to-end TinyCnn -> CAPNet -> 1-CCC on a small image size; parameter
// coordinates are subsampled to keep the finite differencing affordable.
inline GradCheckResult check_cnn_capnet_once(std::uint64_t seed, bool inject_error) {
  Rng rng(seed);
  const int side = 16;
  const std::size_t feature_dim = 4;
  const std::size_t batch = 4;
  const std::size_t length = 2;
  TinyCnnExtractor cnn(side, feature_dim);
  Rng cnn_rng = rng.fork(1);
  cnn.init(cnn_rng);
  CausalityExtractorParams p(feature_dim, 3, 3, 0.2);
  Rng cap_rng = rng.fork(2);
  p.init(cap_rng);

  std::vector<Tensor> images(batch * length, Tensor({3, 16, 16}));
  for (Tensor& img : images) fill_uniform(img, rng, 0.0, 1.0);
  Tensor labels({batch, 2});
  fill_uniform(labels, rng);

  std::uint64_t sig = 0;
  const auto forward = [&](std::vector<std::vector<TinyCnnContext>>* ctxs,
                           CapnetContext* cap_ctx) {
    sig = 0;
    CapnetContext local_cap;
    CapnetContext& cc = cap_ctx ? *cap_ctx : local_cap;
    std::vector<Tensor> features(length, Tensor({batch, feature_dim}));
    for (std::size_t i = 0; i < batch; ++i)
      for (std::size_t t = 0; t < length; ++t) {
        TinyCnnContext local;
        TinyCnnContext& ctx = ctxs ? (*ctxs)[i][t] : local;
        const Tensor f = cnn.forward(images[i * length + t], &ctx);
        hash_active(sig, ctx.a1);
        hash_active(sig, ctx.a2);
        hash_active(sig, ctx.a3);
        for (std::size_t j = 0; j < feature_dim; ++j) features[t](i, j) = f[j];
      }
    const Tensor out = capnet_forward_batch(features, p, Mode::Eval, nullptr, &cc);
    hash_active(sig, cc.fc1.out);
    return out;
  };

  std::vector<std::vector<TinyCnnContext>> ctxs(batch,
                                                std::vector<TinyCnnContext>(length));
  CapnetContext cap_ctx;
  const Tensor out = forward(&ctxs, &cap_ctx);
  const CccLossResult loss = ccc_loss_and_grad(out, labels);
  CausalityExtractorParams cap_grads = CausalityExtractorParams::zeros_like(p);
  const std::vector<Tensor> dfeatures =
      capnet_backward_batch(loss.grad, p, cap_ctx, cap_grads);
  TinyCnnParams cnn_grads = TinyCnnParams::zeros_like(cnn.params());
  Tensor dfeat({feature_dim});
  for (std::size_t i = 0; i < batch; ++i)
    for (std::size_t t = 0; t < length; ++t) {
      for (std::size_t j = 0; j < feature_dim; ++j) dfeat[j] = dfeatures[t](i, j);
      cnn.backward(ctxs[i][t], dfeat, cnn_grads);
    }
  if (inject_error) cnn_grads.conv2_w[0] += 1e-2;

  const auto eval = [&] { return ccc_loss_and_grad(forward(nullptr, nullptr), labels).loss; };
  std::vector<GradCheckTarget> targets;
  for (const NamedParam& np : cnn.params().named("cnn", &cnn_grads))
    targets.push_back({np.name, np.value, np.grad});
  for (const NamedParam& np : p.named(&cap_grads))
    targets.push_back({np.name, np.value, np.grad});
  Rng coord_rng = rng.fork(3);
  return grad_check(eval, targets, 1e-3, 12, &coord_rng, [&] { return sig; });
}

}  // namespace gradsuite

inline GradSuiteResult run_grad_suite(const std::string& name, int seeds, bool inject_error) {
  GradSuiteResult result;
  result.name = name;
  const auto t0 = std::chrono::steady_clock::now();
  for (int s = 0; s < seeds; ++s) {
    GradCheckResult r;
    if (name == "fc") {
      result.threshold = 1e-4;
      r = gradsuite::check_fc_once(static_cast<std::uint64_t>(s), inject_error);
    } else if (name == "lstm") {
      result.threshold = 1e-4;
      r = gradsuite::check_lstm_once(static_cast<std::uint64_t>(s), inject_error);
    } else if (name == "ccc") {
      result.threshold = 1e-6;
      r = gradsuite::check_ccc_once(static_cast<std::uint64_t>(s), inject_error);
    } else if (name == "capnet") {
      result.threshold = 1e-4;
      r = gradsuite::check_capnet_once(static_cast<std::uint64_t>(s), inject_error);
    } else if (name == "cnn") {
      result.threshold = 1e-4;
      r = gradsuite::check_cnn_capnet_once(static_cast<std::uint64_t>(s), inject_error);
    } else {
      throw ConfigError("gradcheck: unknown suite '" + name + "'");
    }
    result.skipped_kinks += r.skipped_kinks;
    if (r.max_rel_err > result.max_rel_err) {
      result.max_rel_err = r.max_rel_err;
      result.worst = "seed " + std::to_string(s) + ": " + r.worst;
    }
  }
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

inline const std::vector<std::string>& default_grad_suites() {
  static const std::vector<std::string> suites = {"fc", "lstm", "ccc", "capnet", "cnn"};
  return suites;
}

}  // namespace capnet
