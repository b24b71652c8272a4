#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "capnet/errors.hpp"
#include "capnet/tensor.hpp"

namespace capnet {

inline constexpr double kCccEps = 1e-8;

struct CCCStats {
  double mean_pred = 0.0;
  double mean_label = 0.0;
  double var_pred = 0.0;   // population variance unless sample_variance was set
  double var_label = 0.0;
  double covar = 0.0;
  double ccc = 0.0;
  std::size_t n = 0;
};

// Streaming moment accumulator. Two partial accumulators merge exactly, so
// evaluation can be sharded and joined.
struct CCCAccumulator {
  std::size_t n = 0;
  double sum_pred = 0.0, sum_label = 0.0;
  double sum_pred_sq = 0.0, sum_label_sq = 0.0, sum_cross = 0.0;

  void add(double pred, double label) {
    if (!std::isfinite(pred) || !std::isfinite(label))
      throw Error("ccc: non-finite input at sample " + std::to_string(n));
    ++n;
    sum_pred += pred;
    sum_label += label;
    sum_pred_sq += pred * pred;
    sum_label_sq += label * label;
    sum_cross += pred * label;
  }

  void merge(const CCCAccumulator& o) {
    n += o.n;
    sum_pred += o.sum_pred;
    sum_label += o.sum_label;
    sum_pred_sq += o.sum_pred_sq;
    sum_label_sq += o.sum_label_sq;
    sum_cross += o.sum_cross;
  }

  CCCStats stats(bool sample_variance = false) const {
    if (n < 2) throw Error("ccc: needs at least 2 samples, got " + std::to_string(n));
    CCCStats s;
    s.n = n;
    const double dn = static_cast<double>(n);
    s.mean_pred = sum_pred / dn;
    s.mean_label = sum_label / dn;
    // Population moments by default; the Bessel-corrected variant is kept as
    // a switch for comparison.
    const double norm = sample_variance ? dn - 1.0 : dn;
    s.var_pred = std::max(0.0, (sum_pred_sq - dn * s.mean_pred * s.mean_pred) / norm);
    s.var_label = std::max(0.0, (sum_label_sq - dn * s.mean_label * s.mean_label) / norm);
    s.covar = (sum_cross - dn * s.mean_pred * s.mean_label) / norm;
    const double mean_diff = s.mean_pred - s.mean_label;
    const double den = s.var_pred + s.var_label + mean_diff * mean_diff;
    // Guarded denominator: the guard only engages for near-degenerate input
    // (both sides nearly constant), where it pins ccc to ~0 instead of NaN.
    s.ccc = 2.0 * s.covar / std::max(den, kCccEps);
    return s;
  }
};

inline CCCStats ccc(std::span<const double> pred, std::span<const double> label,
                    bool sample_variance = false) {
  if (pred.size() != label.size())
    throw Error("ccc: length mismatch " + std::to_string(pred.size()) + " vs " +
                std::to_string(label.size()));
  CCCAccumulator acc;
  for (std::size_t i = 0; i < pred.size(); ++i) acc.add(pred[i], label[i]);
  return acc.stats(sample_variance);
}

inline CCCStats ccc(const std::vector<double>& pred, const std::vector<double>& label,
                    bool sample_variance = false) {
  return ccc(std::span<const double>(pred), std::span<const double>(label), sample_variance);
}

// Pearson correlation, kept only as a debug companion to the CCC report.
inline double pearson(std::span<const double> pred, std::span<const double> label) {
  const CCCStats s = ccc(pred, label);
  const double denom = std::sqrt(s.var_pred * s.var_label);
  return denom < 1e-300 ? 0.0 : s.covar / denom;
}

// ---------------------------------------------------------------------------
// Training loss: 1 - mean(CCC_valence, CCC_arousal) over a mini-batch, with
// its analytic gradient w.r.t. the predictions.

struct CccLossResult {
  double loss = 0.0;
  Tensor grad;  // [N x 2]
};

inline CccLossResult ccc_loss_and_grad(const Tensor& preds, const Tensor& labels) {
  if (preds.rank() != 2 || preds.dim(1) != 2)
    throw ShapeError("ccc_loss: preds must be [N x 2], got " + preds.shape_str());
  require_same_shape(preds, labels, "ccc_loss");
  const std::size_t n = preds.dim(0);
  if (n < 2) throw Error("ccc_loss: a batch of " + std::to_string(n) + " cannot define CCC");

  CccLossResult result;
  result.grad = Tensor({n, 2});
  const double dn = static_cast<double>(n);
  double ccc_sum = 0.0;
  for (std::size_t col = 0; col < 2; ++col) {
    double mean_p = 0.0, mean_l = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      mean_p += preds(i, col);
      mean_l += labels(i, col);
    }
    mean_p /= dn;
    mean_l /= dn;
    double var_p = 0.0, var_l = 0.0, covar = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dp = preds(i, col) - mean_p;
      const double dl = labels(i, col) - mean_l;
      var_p += dp * dp;
      var_l += dl * dl;
      covar += dp * dl;
    }
    var_p /= dn;
    var_l /= dn;
    covar /= dn;
    const double mean_diff = mean_p - mean_l;
    const double den_raw = var_p + var_l + mean_diff * mean_diff;
    const bool guarded = den_raw < kCccEps;
    const double den = guarded ? kCccEps : den_raw;
    const double num = 2.0 * covar;
    ccc_sum += num / den;
    for (std::size_t i = 0; i < n; ++i) {
      const double dnum = 2.0 * (labels(i, col) - mean_l) / dn;
      // When the guard is active the denominator is constant.
      const double dden =
          guarded ? 0.0 : 2.0 * (preds(i, col) - mean_p) / dn + 2.0 * mean_diff / dn;
      const double dccc = (dnum * den - num * dden) / (den * den);
      result.grad(i, col) = -0.5 * dccc;  // d(1 - (ccc_v+ccc_a)/2) / dpred
    }
  }
  result.loss = 1.0 - 0.5 * ccc_sum;
  return result;
}

// ---------------------------------------------------------------------------
// Evaluation report in the shape of the paper-style results table.

struct CCCReport {
  CCCStats valence;
  CCCStats arousal;
  double mean_ccc = 0.0;

  // "0.510 / 0.483 / 0.497"
  std::string row_string() const {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f / %.3f / %.3f", valence.ccc, arousal.ccc, mean_ccc);
    return buf;
  }
};

inline CCCReport make_report(const CCCAccumulator& valence, const CCCAccumulator& arousal,
                             bool sample_variance = false) {
  CCCReport r;
  r.valence = valence.stats(sample_variance);
  r.arousal = arousal.stats(sample_variance);
  r.mean_ccc = 0.5 * (r.valence.ccc + r.arousal.ccc);
  return r;
}

struct ReportRow {
  std::string model;
  std::string window;  // window size in seconds, "-" for single-image models
  CCCReport report;
};

inline std::string render_report_table(const std::vector<ReportRow>& rows) {
  std::size_t model_w = 5, window_w = 6;
  for (const ReportRow& r : rows) {
    model_w = std::max(model_w, r.model.size());
    window_w = std::max(window_w, r.window.size());
  }
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s  %-*s  %7s  %7s  %7s\n", static_cast<int>(model_w),
                "model", static_cast<int>(window_w), "window", "valence", "arousal", "mean");
  out += buf;
  for (const ReportRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%-*s  %-*s  %7.3f  %7.3f  %7.3f\n",
                  static_cast<int>(model_w), r.model.c_str(), static_cast<int>(window_w),
                  r.window.c_str(), r.report.valence.ccc, r.report.arousal.ccc,
                  r.report.mean_ccc);
    out += buf;
  }
  return out;
}

inline std::string render_report_csv(const std::vector<ReportRow>& rows) {
  std::string out = "model,window,valence_ccc,arousal_ccc,mean_ccc\n";
  char buf[256];
  for (const ReportRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%s,%.6f,%.6f,%.6f\n", r.model.c_str(),
                  r.window.c_str(), r.report.valence.ccc, r.report.arousal.ccc,
                  r.report.mean_ccc);
    out += buf;
  }
  return out;
}

}  // namespace capnet
