#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>

#include "rdn/params.hpp"

namespace rdn {

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Mean absolute error plus its gradient. The subgradient at zero is taken
// as 0, so grad entries lie in [-1/N, 1/N].
template <typename T>
std::pair<double, Tensor<T>> l1_loss(const Tensor<T>& pred,
                                     const Tensor<T>& target) {
  if (!pred.same_dims(target)) {
    throw DimensionError("l1_loss: dims " + pred.dims_string() + " vs " +
                         target.dims_string());
  }
  const double inv_n = 1.0 / static_cast<double>(pred.numel());
  double loss = 0.0;
  Tensor<T> grad(pred.n, pred.c, pred.h, pred.w);
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const double d = static_cast<double>(pred.data[i]) -
                     static_cast<double>(target.data[i]);
    loss += std::abs(d);
    grad.data[i] = d > 0 ? static_cast<T>(inv_n)
                         : (d < 0 ? static_cast<T>(-inv_n) : T(0));
  }
  return {loss * inv_n, std::move(grad)};
}

// First/second moment buffers mirroring the parameter map.
template <typename T>
struct AdamState {
  std::map<std::string, ConvWeights<T>> m, v;
  long long t = 0;

  static AdamState zeros_like(const RdnParams<T>& params) {
    AdamState s;
    for (const auto& [name, w] : params.layers) {
      s.m.emplace(name, ConvWeights<T>(w.out_ch, w.in_ch, w.kh, w.kw));
      s.v.emplace(name, ConvWeights<T>(w.out_ch, w.in_ch, w.kh, w.kw));
    }
    return s;
  }
};

namespace detail {
template <typename T>
void adam_update_array(std::vector<T>& theta, const std::vector<T>& grad,
                       std::vector<T>& m, std::vector<T>& v, double lr,
                       const AdamParams& ap, double bc1, double bc2) {
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double g = static_cast<double>(grad[i]);
    const double mi = ap.beta1 * static_cast<double>(m[i]) + (1.0 - ap.beta1) * g;
    const double vi = ap.beta2 * static_cast<double>(v[i]) + (1.0 - ap.beta2) * g * g;
    m[i] = static_cast<T>(mi);
    v[i] = static_cast<T>(vi);
    const double mhat = mi / bc1;
    const double vhat = vi / bc2;
    theta[i] = static_cast<T>(static_cast<double>(theta[i]) -
                              lr * mhat / (std::sqrt(vhat) + ap.eps));
  }
}
}  // namespace detail

// One Adam step with bias correction; epsilon sits outside the square root.
// Increments state.t first, so the first call runs with t = 1.
template <typename T>
void adam_step(RdnParams<T>& params, const RdnParams<T>& grads,
               AdamState<T>& state, double lr, const AdamParams& ap = {}) {
  state.t += 1;
  const double bc1 = 1.0 - std::pow(ap.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(ap.beta2, static_cast<double>(state.t));
  for (auto& [name, w] : params.layers) {
    auto git = grads.layers.find(name);
    if (git == grads.layers.end()) {
      throw DimensionError("adam_step: no gradient for layer '" + name + "'");
    }
    const ConvWeights<T>& g = git->second;
    ConvWeights<T>& m = state.m.at(name);
    ConvWeights<T>& v = state.v.at(name);
    if (!w.same_dims(g) || !w.same_dims(m) || !w.same_dims(v)) {
      throw DimensionError("adam_step: shape mismatch at layer '" + name + "'");
    }
    detail::adam_update_array(w.kernel, g.kernel, m.kernel, v.kernel, lr, ap,
                              bc1, bc2);
    detail::adam_update_array(w.bias, g.bias, m.bias, v.bias, lr, ap, bc1,
                              bc2);
  }
}

}  // namespace rdn
