#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dpcombine/errors.hpp"
#include "dpcombine/rng.hpp"
#include "dpcombine/series.hpp"

namespace dpcombine {

enum class Activation : std::uint8_t { Tanh = 0, Identity = 1, Sigmoid = 2 };

inline double apply_activation(Activation a, double x) {
  switch (a) {
    case Activation::Tanh: return std::tanh(x);
    case Activation::Identity: return x;
    case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
  }
  return x;
}

/// Derivative expressed through the activation's output value.
inline double activation_deriv_from_output(Activation a, double out) {
  switch (a) {
    case Activation::Tanh: return 1.0 - out * out;
    case Activation::Identity: return 1.0;
    case Activation::Sigmoid: return out * (1.0 - out);
  }
  return 1.0;
}

/// One recurrent layer's parameters. Gate rows are stacked in the order
/// input, forget, candidate, output: rows [g*h, (g+1)*h) of each matrix
/// belong to gate g.
struct LstmLayerParams {
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  std::vector<double> w_input;  // (4*hidden) x input, row-major
  std::vector<double> w_recur;  // (4*hidden) x hidden, row-major
  std::vector<double> bias;     // 4*hidden

  void resize(std::size_t in, std::size_t hidden) {
    input_size = in;
    hidden_size = hidden;
    w_input.assign(4 * hidden * in, 0.0);
    w_recur.assign(4 * hidden * hidden, 0.0);
    bias.assign(4 * hidden, 0.0);
  }
};

/// Full parameter bundle of the base model: two stacked LSTM layers with
/// inverted dropout between them, then a dense head with two activations.
/// Inputs are scalar per time step; output is one scalar.
struct LstmParams {
  std::size_t lag = 7;
  LstmLayerParams layer1;
  LstmLayerParams layer2;
  std::vector<double> dense_w;  // hidden2
  double dense_b = 0.0;
  double dropout_rate = 0.2;
  Activation head_act1 = Activation::Tanh;
  Activation head_act2 = Activation::Identity;

  void resize(std::size_t lag_steps, std::size_t hidden1, std::size_t hidden2) {
    lag = lag_steps;
    layer1.resize(1, hidden1);
    layer2.resize(hidden1, hidden2);
    dense_w.assign(hidden2, 0.0);
    dense_b = 0.0;
  }

  std::size_t parameter_count() const {
    return layer1.w_input.size() + layer1.w_recur.size() + layer1.bias.size() +
           layer2.w_input.size() + layer2.w_recur.size() + layer2.bias.size() +
           dense_w.size() + 1;
  }
};

/// Same shapes as `params`, all values zero. Used as a gradient holder.
inline LstmParams zeros_like(const LstmParams& params) {
  LstmParams z = params;
  auto clear = [](std::vector<double>& v) { std::fill(v.begin(), v.end(), 0.0); };
  clear(z.layer1.w_input);
  clear(z.layer1.w_recur);
  clear(z.layer1.bias);
  clear(z.layer2.w_input);
  clear(z.layer2.w_recur);
  clear(z.layer2.bias);
  clear(z.dense_w);
  z.dense_b = 0.0;
  return z;
}

/// Pointers to every scalar parameter in serialization order. Test and
/// serialization helper; the hot paths never call this.
template <typename P>
inline auto parameter_pointers(P& params) {
  using ptr_t = decltype(&params.dense_b);
  std::vector<ptr_t> ptrs;
  ptrs.reserve(params.parameter_count());
  auto push = [&](auto& vec) {
    for (auto& v : vec) ptrs.push_back(&v);
  };
  push(params.layer1.w_input);
  push(params.layer1.w_recur);
  push(params.layer1.bias);
  push(params.layer2.w_input);
  push(params.layer2.w_recur);
  push(params.layer2.bias);
  push(params.dense_w);
  ptrs.push_back(&params.dense_b);
  return ptrs;
}

/// Uniform [-0.1, 0.1] initialization from the seeded stream.
inline void init_params(LstmParams& params, RandomStream& rng) {
  for (double* p : parameter_pointers(params)) *p = -0.1 + 0.2 * rng.uniform01();
}

namespace detail {

struct LstmStepCache {
  std::vector<double> gate_i, gate_f, gate_g, gate_o;
  std::vector<double> c, tanh_c, h;
};

/// x -> (h, c) for one step; fills the cache entry.
inline void lstm_step(const LstmLayerParams& L, std::span<const double> x,
                      const std::vector<double>& h_prev, const std::vector<double>& c_prev,
                      LstmStepCache& out) {
  const std::size_t h = L.hidden_size;
  const std::size_t in = L.input_size;
  out.gate_i.resize(h);
  out.gate_f.resize(h);
  out.gate_g.resize(h);
  out.gate_o.resize(h);
  out.c.resize(h);
  out.tanh_c.resize(h);
  out.h.resize(h);
  for (std::size_t k = 0; k < h; ++k) {
    double pre[4];
    for (int g = 0; g < 4; ++g) {
      const std::size_t row = g * h + k;
      double acc = L.bias[row];
      const double* wx = &L.w_input[row * in];
      for (std::size_t j = 0; j < in; ++j) acc += wx[j] * x[j];
      const double* wh = &L.w_recur[row * h];
      for (std::size_t j = 0; j < h; ++j) acc += wh[j] * h_prev[j];
      pre[g] = acc;
    }
    const double gi = 1.0 / (1.0 + std::exp(-pre[0]));
    const double gf = 1.0 / (1.0 + std::exp(-pre[1]));
    const double gg = std::tanh(pre[2]);
    const double go = 1.0 / (1.0 + std::exp(-pre[3]));
    const double c = gf * c_prev[k] + gi * gg;
    const double tc = std::tanh(c);
    out.gate_i[k] = gi;
    out.gate_f[k] = gf;
    out.gate_g[k] = gg;
    out.gate_o[k] = go;
    out.c[k] = c;
    out.tanh_c[k] = tc;
    out.h[k] = go * tc;
  }
}

/// Backward through one step. `dh` is the total gradient on h_t, `dc` the
/// carried cell gradient (updated in place to the t-1 value). Writes the
/// gradient on the step input into `dx` and replaces `dh_prev`.
inline void lstm_step_backward(const LstmLayerParams& L, std::span<const double> x,
                               const std::vector<double>& h_prev,
                               const std::vector<double>& c_prev, const LstmStepCache& s,
                               const std::vector<double>& dh, std::vector<double>& dc,
                               LstmLayerParams& grads, std::vector<double>& dx,
                               std::vector<double>& dh_prev) {
  const std::size_t h = L.hidden_size;
  const std::size_t in = L.input_size;
  dx.assign(in, 0.0);
  dh_prev.assign(h, 0.0);
  for (std::size_t k = 0; k < h; ++k) {
    const double go = s.gate_o[k];
    const double tc = s.tanh_c[k];
    const double d_o = dh[k] * tc;
    const double d_c = dc[k] + dh[k] * go * (1.0 - tc * tc);
    const double gi = s.gate_i[k];
    const double gf = s.gate_f[k];
    const double gg = s.gate_g[k];
    const double d_i = d_c * gg;
    const double d_f = d_c * c_prev[k];
    const double d_g = d_c * gi;
    dc[k] = d_c * gf;
    const double da[4] = {
        d_i * gi * (1.0 - gi),
        d_f * gf * (1.0 - gf),
        d_g * (1.0 - gg * gg),
        d_o * go * (1.0 - go),
    };
    for (int g = 0; g < 4; ++g) {
      const std::size_t row = g * h + k;
      grads.bias[row] += da[g];
      double* gwx = &grads.w_input[row * in];
      const double* wx = &L.w_input[row * in];
      for (std::size_t j = 0; j < in; ++j) {
        gwx[j] += da[g] * x[j];
        dx[j] += wx[j] * da[g];
      }
      double* gwh = &grads.w_recur[row * h];
      const double* wh = &L.w_recur[row * h];
      for (std::size_t j = 0; j < h; ++j) {
        gwh[j] += da[g] * h_prev[j];
        dh_prev[j] += wh[j] * da[g];
      }
    }
  }
}

}  // namespace detail

/// Everything a train-mode forward records so the backward pass can produce
/// exact gradients: per-step activations of both layers plus the dropout
/// masks applied between them.
struct ForwardCache {
  std::vector<double> window;
  std::vector<detail::LstmStepCache> layer1, layer2;
  std::vector<std::vector<double>> dropout_mask;  // per step, inverted scale factors
  std::vector<std::vector<double>> dropped_h1;    // layer2 inputs
  double dense_z = 0.0;
  double head1_out = 0.0;
  double prediction = 0.0;
};

namespace detail {

inline void check_window(const LstmParams& params, std::span<const double> window) {
  if (window.size() != params.lag) {
    throw ShapeMismatch("window length " + std::to_string(window.size()) +
                        " does not match configured lag " + std::to_string(params.lag));
  }
  if (params.dense_w.size() != params.layer2.hidden_size ||
      params.layer2.input_size != params.layer1.hidden_size || params.layer1.input_size != 1) {
    throw ShapeMismatch("inconsistent parameter shapes");
  }
}

template <bool kTrain>
inline double run_forward(const LstmParams& params, std::span<const double> window,
                          RandomStream* rng, ForwardCache* cache) {
  check_window(params, window);
  const std::size_t steps = window.size();
  const std::size_t h1 = params.layer1.hidden_size;
  const std::size_t h2 = params.layer2.hidden_size;
  std::vector<double> h1_prev(h1, 0.0), c1_prev(h1, 0.0);
  std::vector<double> h2_prev(h2, 0.0), c2_prev(h2, 0.0);
  LstmStepCache s1, s2;
  if constexpr (kTrain) {
    cache->window.assign(window.begin(), window.end());
    cache->layer1.resize(steps);
    cache->layer2.resize(steps);
    cache->dropout_mask.resize(steps);
    cache->dropped_h1.resize(steps);
  }
  const double keep = 1.0 - params.dropout_rate;
  std::vector<double> dropped(h1);
  for (std::size_t t = 0; t < steps; ++t) {
    LstmStepCache& step1 = kTrain ? cache->layer1[t] : s1;
    const double x_t = window[t];
    lstm_step(params.layer1, std::span<const double>(&x_t, 1), h1_prev, c1_prev, step1);
    if constexpr (kTrain) {
      auto& mask = cache->dropout_mask[t];
      mask.resize(h1);
      for (std::size_t k = 0; k < h1; ++k) {
        mask[k] = (params.dropout_rate > 0.0 && rng->uniform01() < params.dropout_rate)
                      ? 0.0
                      : 1.0 / keep;
        dropped[k] = step1.h[k] * mask[k];
      }
      cache->dropped_h1[t] = dropped;
    } else {
      // Inverted dropout: eval mode uses activations as-is.
      dropped = step1.h;
    }
    LstmStepCache& step2 = kTrain ? cache->layer2[t] : s2;
    lstm_step(params.layer2, dropped, h2_prev, c2_prev, step2);
    h1_prev = step1.h;
    c1_prev = step1.c;
    h2_prev = step2.h;
    c2_prev = step2.c;
  }
  double z = params.dense_b;
  for (std::size_t k = 0; k < h2; ++k) z += params.dense_w[k] * h2_prev[k];
  const double a1 = apply_activation(params.head_act1, z);
  const double y = apply_activation(params.head_act2, a1);
  if constexpr (kTrain) {
    cache->dense_z = z;
    cache->head1_out = a1;
    cache->prediction = y;
  }
  return y;
}

}  // namespace detail

/// Eval-mode forward: a pure function of (params, window). Dropout is
/// disabled, so repeated calls agree bitwise.
inline double predict(const LstmParams& params, std::span<const double> window) {
  return detail::run_forward<false>(params, window, nullptr, nullptr);
}

/// Train-mode forward. Dropout masks are drawn from `rng`; the returned
/// cache carries every activation the backward pass needs.
inline ForwardCache forward_train(const LstmParams& params, std::span<const double> window,
                                  RandomStream& rng) {
  ForwardCache cache;
  detail::run_forward<true>(params, window, &rng, &cache);
  return cache;
}

/// Exact gradient of the squared error (prediction - target)^2 with respect
/// to every parameter, by backpropagation through time over the cached
/// window.
inline LstmParams backward(const ForwardCache& cache, double target, const LstmParams& params) {
  const std::size_t steps = cache.window.size();
  const std::size_t h1 = params.layer1.hidden_size;
  const std::size_t h2 = params.layer2.hidden_size;
  LstmParams grads = zeros_like(params);

  const double d_pred = 2.0 * (cache.prediction - target);
  const double d_a1 = d_pred * activation_deriv_from_output(params.head_act2, cache.prediction);
  const double d_z = d_a1 * activation_deriv_from_output(params.head_act1, cache.head1_out);

  grads.dense_b = d_z;
  std::vector<double> dh2(h2, 0.0);
  const std::vector<double>& h2_last = cache.layer2[steps - 1].h;
  for (std::size_t k = 0; k < h2; ++k) {
    grads.dense_w[k] = d_z * h2_last[k];
    dh2[k] = d_z * params.dense_w[k];
  }

  // Layer 2 BPTT; collect gradients on its inputs to feed layer 1.
  std::vector<std::vector<double>> d_dropped(steps);
  {
    const std::vector<double> zero(h2, 0.0);
    std::vector<double> dc2(h2, 0.0), dh_prev(h2), dx;
    for (std::size_t t = steps; t-- > 0;) {
      const std::vector<double>& h_prev = t == 0 ? zero : cache.layer2[t - 1].h;
      const std::vector<double>& c_prev = t == 0 ? zero : cache.layer2[t - 1].c;
      detail::lstm_step_backward(params.layer2, cache.dropped_h1[t], h_prev, c_prev,
                                 cache.layer2[t], dh2, dc2, grads.layer2, dx, dh_prev);
      d_dropped[t] = dx;
      dh2 = dh_prev;
    }
  }

  // Layer 1 BPTT; each step receives the layer-2 input gradient through the
  // dropout mask plus its own recurrent gradient.
  {
    const std::vector<double> zero(h1, 0.0);
    std::vector<double> dh1(h1, 0.0), dc1(h1, 0.0), dh_prev(h1), dx;
    for (std::size_t t = steps; t-- > 0;) {
      for (std::size_t k = 0; k < h1; ++k) dh1[k] += d_dropped[t][k] * cache.dropout_mask[t][k];
      const std::vector<double>& h_prev = t == 0 ? zero : cache.layer1[t - 1].h;
      const std::vector<double>& c_prev = t == 0 ? zero : cache.layer1[t - 1].c;
      const double x_t = cache.window[t];
      detail::lstm_step_backward(params.layer1, std::span<const double>(&x_t, 1), h_prev, c_prev,
                                 cache.layer1[t], dh1, dc1, grads.layer1, dx, dh_prev);
      dh1 = dh_prev;
    }
  }
  return grads;
}

/// Plain SGD step: w <- w - lr * g.
inline void sgd_update(LstmParams& params, const LstmParams& grads, double learning_rate) {
  auto axpy = [learning_rate](std::vector<double>& w, const std::vector<double>& g) {
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= learning_rate * g[i];
  };
  axpy(params.layer1.w_input, grads.layer1.w_input);
  axpy(params.layer1.w_recur, grads.layer1.w_recur);
  axpy(params.layer1.bias, grads.layer1.bias);
  axpy(params.layer2.w_input, grads.layer2.w_input);
  axpy(params.layer2.w_recur, grads.layer2.w_recur);
  axpy(params.layer2.bias, grads.layer2.bias);
  axpy(params.dense_w, grads.dense_w);
  params.dense_b -= learning_rate * grads.dense_b;
}

}  // namespace dpcombine
