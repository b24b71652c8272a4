#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "capnet/tensor.hpp"

namespace capnet {

struct NamedParam {
  std::string name;
  Tensor* value = nullptr;
  const Tensor* grad = nullptr;
};

// Adam with bias correction. Only the learning rate comes from the paper's
// setup; the rest are the usual defaults.
struct AdamState {
  double lr = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long long step = 0;
  std::map<std::string, std::pair<Tensor, Tensor>> moments;  // name -> (m, v)
};

inline void adam_step(const std::vector<NamedParam>& params, AdamState& state) {
  ++state.step;
  const double bias1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (const NamedParam& p : params) {
    require_same_shape(*p.value, *p.grad, p.name.c_str());
    auto it = state.moments.find(p.name);
    if (it == state.moments.end()) {
      it = state.moments
               .emplace(p.name, std::make_pair(Tensor::zeros_like(*p.value),
                                               Tensor::zeros_like(*p.value)))
               .first;
    }
    Tensor& m = it->second.first;
    Tensor& v = it->second.second;
    require_same_shape(*p.value, m, p.name.c_str());
    for (std::size_t i = 0; i < p.value->size(); ++i) {
      const double g = (*p.grad)[i];
      if (!std::isfinite(g))
        throw Error("non-finite gradient in parameter '" + p.name + "'");
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      (*p.value)[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

}  // namespace capnet
