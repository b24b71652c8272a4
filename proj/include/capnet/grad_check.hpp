#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "capnet/rng.hpp"
#include "capnet/tensor.hpp"

namespace capnet {

// One tensor the scalar function depends on, paired with the analytic
// gradient under test. The tensor is perturbed in place during the check.
struct GradCheckTarget {
  std::string name;
  Tensor* point = nullptr;
  const Tensor* analytic = nullptr;
};

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::string worst;            // "tensor[index]" of the worst coordinate
  std::size_t skipped_kinks = 0;  // coordinates straddling a ReLU kink
};

// Central finite differences: (f(x+h) - f(x-h)) / 2h per coordinate, with
// rel = |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
//
// With max_coords_per_tensor > 0, a random coordinate subset is checked,
// which keeps large parameter tensors affordable.
//
// `branch_signature`, when provided, reports which piecewise-linear branch
// (ReLU activation pattern) the last eval() ran on. A coordinate whose +h and
// -h evaluations land on different branches straddles a kink, where the
// central difference is meaningless; such coordinates are skipped and
// counted. A wrong gradient still fails on the smooth coordinates.
inline GradCheckResult grad_check(const std::function<double()>& eval,
                                  const std::vector<GradCheckTarget>& targets, double h,
                                  std::size_t max_coords_per_tensor = 0, Rng* rng = nullptr,
                                  const std::function<std::uint64_t()>& branch_signature = {}) {
  GradCheckResult result;
  for (const GradCheckTarget& target : targets) {
    Tensor& x = *target.point;
    require_same_shape(x, *target.analytic, target.name.c_str());
    std::vector<std::size_t> coords;
    if (max_coords_per_tensor == 0 || x.size() <= max_coords_per_tensor) {
      coords.resize(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) coords[i] = i;
    } else {
      for (std::size_t i = 0; i < max_coords_per_tensor; ++i)
        coords.push_back(rng ? rng->index(x.size()) : i);
    }
    for (std::size_t i : coords) {
      const double saved = x[i];
      x[i] = saved + h;
      const double up = eval();
      const std::uint64_t sig_up = branch_signature ? branch_signature() : 0;
      x[i] = saved - h;
      const double down = eval();
      const std::uint64_t sig_down = branch_signature ? branch_signature() : 0;
      x[i] = saved;
      if (sig_up != sig_down) {
        ++result.skipped_kinks;
        continue;
      }
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = (*target.analytic)[i];
      const double rel = std::abs(analytic - numeric) /
                         std::max(1e-8, std::abs(analytic) + std::abs(numeric));
      if (rel > result.max_rel_err) {
        result.max_rel_err = rel;
        result.worst = target.name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return result;
}

}  // namespace capnet
