#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "capnet/rng.hpp"
#include "capnet/tensor.hpp"

namespace capnet {

enum class Mode { Train, Eval };
enum class Activation { None, Tanh, Relu };

// ---------------------------------------------------------------------------
// Matrix kernels. All 2-D, row-major, accumulate-into-C variants because the
// backward passes sum contributions.

// C[m x n] += A[m x k] * B[k x n]
inline void matmul_acc(const Tensor& a, const Tensor& b, Tensor& c) {
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k || c.dim(0) != m || c.dim(1) != n)
    throw ShapeError("matmul: " + a.shape_str() + " * " + b.shape_str() + " -> " + c.shape_str());
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = pc + i * n;
    const double* ai = pa + i * k;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double av = ai[kk];
      const double* bk = pb + kk * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bk[j];
    }
  }
}

// C[m x n] += A[m x k] * B[n x k]^T
inline void matmul_nt_acc(const Tensor& a, const Tensor& b, Tensor& c) {
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(0);
  if (b.dim(1) != k || c.dim(0) != m || c.dim(1) != n)
    throw ShapeError("matmul_nt: " + a.shape_str() + " * " + b.shape_str() + "^T -> " +
                     c.shape_str());
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = pa + i * k;
    double* ci = pc + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* bj = pb + j * k;
      double acc = 0.0;
      for (std::size_t kk = 0; kk < k; ++kk) acc += ai[kk] * bj[kk];
      ci[j] += acc;
    }
  }
}

// C[m x n] += A[k x m]^T * B[k x n]
inline void matmul_tn_acc(const Tensor& a, const Tensor& b, Tensor& c) {
  const std::size_t k = a.dim(0), m = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k || c.dim(0) != m || c.dim(1) != n)
    throw ShapeError("matmul_tn: " + a.shape_str() + "^T * " + b.shape_str() + " -> " +
                     c.shape_str());
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
  for (std::size_t kk = 0; kk < k; ++kk) {
    const double* ak = pa + kk * m;
    const double* bk = pb + kk * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = ak[i];
      double* ci = pc + i * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bk[j];
    }
  }
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  Tensor c({a.dim(0), b.dim(1)});
  matmul_acc(a, b, c);
  return c;
}

inline void add_row_vector(Tensor& m, const Tensor& v) {
  const std::size_t rows = m.dim(0), cols = m.dim(1);
  if (v.size() != cols) throw ShapeError("row vector " + v.shape_str() + " vs " + m.shape_str());
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) += v[j];
}

inline void col_sum_acc(const Tensor& m, Tensor& out) {
  const std::size_t rows = m.dim(0), cols = m.dim(1);
  if (out.size() != cols) throw ShapeError("col_sum into " + out.shape_str());
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out[j] += m(i, j);
}

inline void axpy(double alpha, const Tensor& x, Tensor& y) {
  require_same_shape(x, y, "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline void apply_activation(Tensor& t, Activation act) {
  switch (act) {
    case Activation::None:
      return;
    case Activation::Tanh:
      for (std::size_t i = 0; i < t.size(); ++i) t[i] = std::tanh(t[i]);
      return;
    case Activation::Relu:
      for (std::size_t i = 0; i < t.size(); ++i) t[i] = t[i] > 0.0 ? t[i] : 0.0;
      return;
  }
}

// d(act)/d(pre) expressed through the activated output.
inline double activation_grad_from_out(double out, Activation act) {
  switch (act) {
    case Activation::None:
      return 1.0;
    case Activation::Tanh:
      return 1.0 - out * out;
    case Activation::Relu:
      return out > 0.0 ? 1.0 : 0.0;
  }
  return 1.0;
}

// ---------------------------------------------------------------------------
// Fully connected layer. Weights are [in x out] so out = x*W + b.

struct FcParams {
  Tensor w;  // [in x out]
  Tensor b;  // [out]
  Activation act = Activation::None;

  FcParams() = default;
  FcParams(std::size_t in, std::size_t out, Activation a)
      : w({in, out}), b({out}), act(a) {}

  std::size_t in_dim() const { return w.dim(0); }
  std::size_t out_dim() const { return w.dim(1); }
};

inline void init_fc(FcParams& p, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(p.in_dim()));
  for (std::size_t i = 0; i < p.w.size(); ++i) p.w[i] = rng.uniform(-bound, bound);
  p.b.fill(0.0);
}

struct FcContext {
  Tensor x;    // [n x in]
  Tensor out;  // [n x out], post-activation
};

inline Tensor fc_forward(const Tensor& x, const FcParams& p, FcContext* ctx = nullptr) {
  if (x.rank() != 2 || x.dim(1) != p.in_dim())
    throw ShapeError("fc_forward: input " + x.shape_str() + " vs weights " + p.w.shape_str());
  Tensor out({x.dim(0), p.out_dim()});
  matmul_acc(x, p.w, out);
  add_row_vector(out, p.b);
  apply_activation(out, p.act);
  if (ctx) {
    ctx->x = x;
    ctx->out = out;
  }
  return out;
}

// Returns dL/dx and accumulates dL/dW, dL/db into `grads`.
inline Tensor fc_backward(const Tensor& dout, const FcParams& p, const FcContext& ctx,
                          FcParams& grads) {
  require_same_shape(dout, ctx.out, "fc_backward");
  Tensor dpre = dout;
  for (std::size_t i = 0; i < dpre.size(); ++i)
    dpre[i] *= activation_grad_from_out(ctx.out[i], p.act);
  matmul_tn_acc(ctx.x, dpre, grads.w);  // dW += x^T * dpre
  col_sum_acc(dpre, grads.b);
  Tensor dx({ctx.x.dim(0), p.in_dim()});
  matmul_nt_acc(dpre, p.w, dx);  // dx = dpre * W^T
  return dx;
}

// ---------------------------------------------------------------------------
// Single-layer LSTM. Gate weights are [hidden x input] (gate = W*x), recurrent
// weights [hidden x hidden], per the usual formulation.

struct LstmParams {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  Tensor w_i, w_f, w_o, w_g;  // [H x D]
  Tensor u_i, u_f, u_o, u_g;  // [H x H]
  Tensor b_i, b_f, b_o, b_g;  // [H]

  LstmParams() = default;
  LstmParams(std::size_t d, std::size_t h)
      : input_dim(d),
        hidden_dim(h),
        w_i({h, d}), w_f({h, d}), w_o({h, d}), w_g({h, d}),
        u_i({h, h}), u_f({h, h}), u_o({h, h}), u_g({h, h}),
        b_i({h}), b_f({h}), b_o({h}), b_g({h}) {}

  static LstmParams zeros_like(const LstmParams& p) {
    return LstmParams(p.input_dim, p.hidden_dim);
  }
};

// Forget-gate bias starts at 1 so long windows do not wash out early state.
inline void init_lstm(LstmParams& p, Rng& rng) {
  const auto fill_uniform = [&rng](Tensor& t, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
  };
  for (Tensor* t : {&p.w_i, &p.w_f, &p.w_o, &p.w_g}) fill_uniform(*t, p.input_dim);
  for (Tensor* t : {&p.u_i, &p.u_f, &p.u_o, &p.u_g}) fill_uniform(*t, p.hidden_dim);
  for (Tensor* t : {&p.b_i, &p.b_o, &p.b_g}) t->fill(0.0);
  p.b_f.fill(1.0);
}

struct LstmStep {
  Tensor x, h_prev, c_prev;  // [B x D], [B x H], [B x H]
  Tensor i, f, o, g, c;      // gate activations and new cell, all [B x H]
};

struct LstmContext {
  std::vector<LstmStep> steps;
  Tensor h_last;
};

// seq is L tensors of [B x D]; returns the final hidden state [B x H].
inline Tensor lstm_forward(const std::vector<Tensor>& seq, const LstmParams& p,
                           LstmContext* ctx = nullptr, const Tensor* h0 = nullptr,
                           const Tensor* c0 = nullptr) {
  if (seq.empty()) throw ShapeError("lstm_forward: empty sequence");
  const std::size_t batch = seq.front().dim(0);
  const std::size_t h_dim = p.hidden_dim;
  Tensor h = h0 ? *h0 : Tensor({batch, h_dim});
  Tensor c = c0 ? *c0 : Tensor({batch, h_dim});
  if (h.dim(0) != batch || h.dim(1) != h_dim || c.dim(0) != batch || c.dim(1) != h_dim)
    throw ShapeError("lstm_forward: bad initial state " + h.shape_str());
  if (ctx) {
    ctx->steps.clear();
    ctx->steps.reserve(seq.size());
  }
  for (const Tensor& x : seq) {
    if (x.rank() != 2 || x.dim(0) != batch || x.dim(1) != p.input_dim)
      throw ShapeError("lstm_forward: step input " + x.shape_str());
    LstmStep st;
    st.x = x;
    st.h_prev = h;
    st.c_prev = c;
    const auto gate = [&](const Tensor& w, const Tensor& u, const Tensor& b) {
      Tensor pre({batch, h_dim});
      matmul_nt_acc(x, w, pre);
      matmul_nt_acc(h, u, pre);
      add_row_vector(pre, b);
      return pre;
    };
    st.i = gate(p.w_i, p.u_i, p.b_i);
    st.f = gate(p.w_f, p.u_f, p.b_f);
    st.o = gate(p.w_o, p.u_o, p.b_o);
    st.g = gate(p.w_g, p.u_g, p.b_g);
    for (std::size_t k = 0; k < st.i.size(); ++k) {
      st.i[k] = sigmoid(st.i[k]);
      st.f[k] = sigmoid(st.f[k]);
      st.o[k] = sigmoid(st.o[k]);
      st.g[k] = std::tanh(st.g[k]);
    }
    st.c = Tensor({batch, h_dim});
    for (std::size_t k = 0; k < st.c.size(); ++k)
      st.c[k] = st.f[k] * st.c_prev[k] + st.i[k] * st.g[k];
    c = st.c;
    h = Tensor({batch, h_dim});
    for (std::size_t k = 0; k < h.size(); ++k) h[k] = st.o[k] * std::tanh(st.c[k]);
    if (ctx) ctx->steps.push_back(std::move(st));
  }
  if (ctx) ctx->h_last = h;
  return h;
}

// Convenience for the unbatched contract: seq [L x D] -> h [H].
inline Tensor lstm_forward_single(const Tensor& seq, const LstmParams& p) {
  if (seq.rank() != 2) throw ShapeError("lstm_forward_single: want [L x D]");
  std::vector<Tensor> steps;
  steps.reserve(seq.dim(0));
  for (std::size_t t = 0; t < seq.dim(0); ++t) {
    Tensor x({1, seq.dim(1)});
    for (std::size_t j = 0; j < seq.dim(1); ++j) x[j] = seq(t, j);
    steps.push_back(std::move(x));
  }
  Tensor h = lstm_forward(steps, p);
  return Tensor({p.hidden_dim}, h.values());
}

// Backpropagation through time from a gradient on the last hidden state.
// Accumulates parameter gradients into `grads`; returns dL/dx per step.
inline std::vector<Tensor> lstm_backward(const Tensor& dh_last, const LstmParams& p,
                                         const LstmContext& ctx, LstmParams& grads) {
  const std::size_t steps = ctx.steps.size();
  if (steps == 0) throw ShapeError("lstm_backward: empty context");
  const std::size_t batch = ctx.steps.front().x.dim(0);
  const std::size_t h_dim = p.hidden_dim;
  require_same_shape(dh_last, ctx.h_last, "lstm_backward");

  std::vector<Tensor> dx(steps);
  Tensor dh = dh_last;
  Tensor dc({batch, h_dim});
  for (std::size_t t = steps; t-- > 0;) {
    const LstmStep& st = ctx.steps[t];
    Tensor dpre_i({batch, h_dim}), dpre_f({batch, h_dim}), dpre_o({batch, h_dim}),
        dpre_g({batch, h_dim});
    for (std::size_t k = 0; k < dh.size(); ++k) {
      const double tc = std::tanh(st.c[k]);
      const double do_ = dh[k] * tc;
      dpre_o[k] = do_ * st.o[k] * (1.0 - st.o[k]);
      const double dck = dc[k] + dh[k] * st.o[k] * (1.0 - tc * tc);
      dpre_i[k] = dck * st.g[k] * st.i[k] * (1.0 - st.i[k]);
      dpre_f[k] = dck * st.c_prev[k] * st.f[k] * (1.0 - st.f[k]);
      dpre_g[k] = dck * st.i[k] * (1.0 - st.g[k] * st.g[k]);
      dc[k] = dck * st.f[k];  // carries to step t-1
    }
    dx[t] = Tensor({batch, p.input_dim});
    dh = Tensor({batch, h_dim});
    const auto backprop_gate = [&](const Tensor& dpre, const Tensor& w, const Tensor& u,
                                   Tensor& gw, Tensor& gu, Tensor& gb) {
      matmul_tn_acc(dpre, st.x, gw);       // dW += dpre^T * x
      matmul_tn_acc(dpre, st.h_prev, gu);  // dU += dpre^T * h_prev
      col_sum_acc(dpre, gb);
      matmul_acc(dpre, w, dx[t]);  // dx += dpre * W
      matmul_acc(dpre, u, dh);     // dh_prev += dpre * U
    };
    backprop_gate(dpre_i, p.w_i, p.u_i, grads.w_i, grads.u_i, grads.b_i);
    backprop_gate(dpre_f, p.w_f, p.u_f, grads.w_f, grads.u_f, grads.b_f);
    backprop_gate(dpre_o, p.w_o, p.u_o, grads.w_o, grads.u_o, grads.b_o);
    backprop_gate(dpre_g, p.w_g, p.u_g, grads.w_g, grads.u_g, grads.b_g);
  }
  return dx;
}

// ---------------------------------------------------------------------------
// Inverted dropout: eval mode is the identity, train mode rescales survivors.

struct DropoutMask {
  Tensor scale;  // elementwise multiplier, 0 or 1/(1-rate)
};

inline Tensor dropout(const Tensor& x, double rate, Mode mode, Rng& rng,
                      DropoutMask* mask = nullptr) {
  if (rate < 0.0 || rate >= 1.0)
    throw ConfigError("dropout rate " + std::to_string(rate) + " outside [0,1)");
  if (mode == Mode::Eval || rate == 0.0) {
    if (mask) mask->scale = Tensor::full(x.shape(), 1.0);
    return x;
  }
  const double keep_scale = 1.0 / (1.0 - rate);
  Tensor out = x;
  Tensor scale(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double s = rng.uniform() < rate ? 0.0 : keep_scale;
    scale[i] = s;
    out[i] *= s;
  }
  if (mask) mask->scale = std::move(scale);
  return out;
}

inline Tensor dropout_backward(const Tensor& dy, const DropoutMask& mask) {
  require_same_shape(dy, mask.scale, "dropout_backward");
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= mask.scale[i];
  return dx;
}

}  // namespace capnet
