#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rdn/model.hpp"
#include "rdn/optim.hpp"
#include "rdn/rng.hpp"

namespace rdn {

struct GradCheckItem {
  std::string name;
  double max_rel_err = 0.0;
  double tol = 1e-5;
  bool pass = false;
};

struct GradCheckReport {
  std::vector<GradCheckItem> items;
  bool all_pass() const {
    for (const GradCheckItem& it : items) {
      if (!it.pass) return false;
    }
    return !items.empty();
  }
};

namespace detail {

// Relative error with a small floor so exactly-zero gradients compare
// sanely against finite-difference noise.
inline double rel_err(double a, double b) {
  const double denom = std::max({std::abs(a), std::abs(b), 1e-3});
  return std::abs(a - b) / denom;
}

inline Tensor<double> random_tensor(int n, int c, int h, int w, Rng& rng) {
  Tensor<double> t(n, c, h, w);
  for (double& v : t.data) v = rng.normal();
  return t;
}

inline double dot(const Tensor<double>& a, const Tensor<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) s += a.data[i] * b.data[i];
  return s;
}

// Central finite difference of f at one scalar slot.
template <typename F>
double fd_slot(F&& f, double& slot, double eps) {
  const double orig = slot;
  slot = orig + eps;
  const double lp = f();
  slot = orig - eps;
  const double lm = f();
  slot = orig;
  return (lp - lm) / (2.0 * eps);
}

// When rescue_eps is nonzero, a slot whose error exceeds rescue_above is
// re-measured with the smaller step. A perturbation that flips a ReLU
// makes the central difference meaningless; shrinking the step keeps it
// on one side of the kink, while a genuine gradient error persists at
// any step size.
template <typename F>
double max_err_over(F&& f, std::vector<double>& slots,
                    const std::vector<double>& analytic, double eps,
                    double rescue_eps = 0.0, double rescue_above = 1e-5) {
  double worst = 0.0;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    double fd = fd_slot(f, slots[i], eps);
    double err = rel_err(fd, analytic[i]);
    if (rescue_eps > 0.0 && err > rescue_above) {
      fd = fd_slot(f, slots[i], rescue_eps);
      err = rel_err(fd, analytic[i]);
    }
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace detail

inline constexpr double kGradCheckEps = 1e-4;

// Minimum |preactivation| required before finite-differencing a model.
// Stepping a weight by kGradCheckEps moves a preactivation by at most
// eps times the local gain, so this margin keeps every ReLU on one side
// of its kink during the sweep.
inline constexpr double kKinkMargin = 2e-3;

// Checks one conv layer's input, kernel, and bias gradients against
// central differences on the probe loss sum(R * conv(x)).
inline GradCheckItem gradcheck_conv(int ksize, std::uint64_t seed) {
  Rng rng(seed);
  const int pad = ksize / 2;
  Tensor<double> x = detail::random_tensor(2, 3, 5, 5, rng);
  ConvWeights<double> w(4, 3, ksize, ksize);
  for (double& v : w.kernel) v = rng.normal() * 0.5;
  for (double& v : w.bias) v = rng.normal() * 0.1;
  const Tensor<double> out = conv2d_forward(x, w, pad);
  const Tensor<double> probe =
      detail::random_tensor(out.n, out.c, out.h, out.w, rng);
  const ConvGrads<double> g = conv2d_backward(x, w, probe, pad);
  auto loss = [&x, &w, &probe, pad]() {
    return detail::dot(conv2d_forward(x, w, pad), probe);
  };
  double worst = detail::max_err_over(loss, x.data, g.input.data, kGradCheckEps);
  worst = std::max(worst, detail::max_err_over(loss, w.kernel,
                                               g.weights.kernel, kGradCheckEps));
  worst = std::max(
      worst, detail::max_err_over(loss, w.bias, g.weights.bias, kGradCheckEps));
  GradCheckItem item{"conv" + std::to_string(ksize) + "x" +
                         std::to_string(ksize),
                     worst, 1e-5, worst <= 1e-5};
  return item;
}

inline GradCheckItem gradcheck_relu(std::uint64_t seed) {
  Rng rng(seed);
  Tensor<double> x = detail::random_tensor(1, 2, 6, 6, rng);
  // Keep pre-activations away from the kink so finite differences are valid.
  for (double& v : x.data) {
    if (std::abs(v) < 0.01) v = v < 0 ? v - 0.02 : v + 0.02;
  }
  const Tensor<double> out = relu_forward(x);
  const Tensor<double> probe =
      detail::random_tensor(out.n, out.c, out.h, out.w, rng);
  const Tensor<double> g = relu_backward(x, probe);
  auto loss = [&x, &probe]() { return detail::dot(relu_forward(x), probe); };
  const double worst =
      detail::max_err_over(loss, x.data, g.data, kGradCheckEps);
  return {"relu", worst, 1e-5, worst <= 1e-5};
}

inline GradCheckItem gradcheck_pixel_shuffle(std::uint64_t seed) {
  Rng rng(seed);
  Tensor<double> x = detail::random_tensor(1, 8, 3, 3, rng);
  const Tensor<double> out = pixel_shuffle(x, 2);
  const Tensor<double> probe =
      detail::random_tensor(out.n, out.c, out.h, out.w, rng);
  const Tensor<double> g = pixel_unshuffle(probe, 2);
  auto loss = [&x, &probe]() { return detail::dot(pixel_shuffle(x, 2), probe); };
  const double worst =
      detail::max_err_over(loss, x.data, g.data, kGradCheckEps);
  return {"pixel_shuffle", worst, 1e-5, worst <= 1e-5};
}

inline GradCheckItem gradcheck_l1(std::uint64_t seed) {
  Rng rng(seed);
  Tensor<double> pred = detail::random_tensor(1, 3, 6, 6, rng);
  const Tensor<double> target = detail::random_tensor(1, 3, 6, 6, rng);
  // Keep |pred-target| away from the kink at zero.
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const double d = pred.data[i] - target.data[i];
    if (std::abs(d) < 0.01) pred.data[i] = target.data[i] + (d < 0 ? -0.02 : 0.02);
  }
  const auto [l, g] = l1_loss(pred, target);
  (void)l;
  auto loss = [&pred, &target]() { return l1_loss(pred, target).first; };
  const double worst =
      detail::max_err_over(loss, pred.data, g.data, kGradCheckEps);
  return {"l1_loss", worst, 1e-5, worst <= 1e-5};
}

// Full-model check: every weight gradient (and the input gradient) against
// central differences on the probe loss sum(R * rdn_forward(x)). The
// corrupt hook falsifies one analytic gradient entry to prove the harness
// detects failures.
inline GradCheckItem gradcheck_model(const RdnConfig& cfg, std::uint64_t seed,
                                     bool corrupt = false) {
  cfg.validate();
  Rng rng(seed);
  RdnParams<double> params;
  Tensor<double> x;
  RdnCache<double> cache;
  Tensor<double> out;
  // Redraw until every ReLU preactivation clears the kink margin, the
  // model-level analogue of the nudging the op checks do on their inputs.
  for (int attempt = 0; attempt < 50; ++attempt) {
    params = init_params<double>(cfg, rng.next_u64());
    // Random biases exercise those gradient paths too.
    for (auto& [name, w] : params.layers) {
      for (double& v : w.bias) v = rng.normal() * 0.05;
    }
    x = Tensor<double>(1, cfg.in_channels, 4, 4);
    for (double& v : x.data) v = rng.uniform();

    cache = RdnCache<double>();
    out = rdn_forward(x, params, cfg, &cache);
    double min_pre = kKinkMargin + 1.0;
    for (const RdbCache<double>& blk : cache.blocks) {
      for (const Tensor<double>& pre : blk.preact) {
        for (double v : pre.data) min_pre = std::min(min_pre, std::abs(v));
      }
    }
    if (min_pre > kKinkMargin) break;
  }
  const Tensor<double> probe =
      detail::random_tensor(out.n, out.c, out.h, out.w, rng);
  RdnBackwardResult<double> back = rdn_backward(probe, params, cfg, cache);
  if (corrupt) {
    back.weight_grads.layers.begin()->second.kernel[0] += 0.5;
  }

  auto loss = [&x, &params, &cfg, &probe]() {
    return detail::dot(rdn_forward(x, params, cfg), probe);
  };
  const double rescue = kGradCheckEps / 10.0;
  double worst = 0.0;
  for (auto& [name, w] : params.layers) {
    const ConvWeights<double>& g = back.weight_grads.at(name);
    worst = std::max(worst, detail::max_err_over(loss, w.kernel, g.kernel,
                                                 kGradCheckEps, rescue));
    worst = std::max(worst, detail::max_err_over(loss, w.bias, g.bias,
                                                 kGradCheckEps, rescue));
  }
  worst = std::max(
      worst, detail::max_err_over(loss, x.data, back.input_grad.data,
                                  kGradCheckEps, rescue));
  return {"model_" + ablation_tag(cfg.ablation), worst, 1e-5, worst <= 1e-5};
}

// The op-level suite plus a model check for the given config.
inline GradCheckReport run_gradcheck(const RdnConfig& cfg, std::uint64_t seed,
                                     bool corrupt = false) {
  GradCheckReport rep;
  rep.items.push_back(gradcheck_conv(3, mix64(seed, 1)));
  rep.items.push_back(gradcheck_conv(1, mix64(seed, 2)));
  rep.items.push_back(gradcheck_relu(mix64(seed, 3)));
  rep.items.push_back(gradcheck_pixel_shuffle(mix64(seed, 4)));
  rep.items.push_back(gradcheck_l1(mix64(seed, 5)));
  rep.items.push_back(gradcheck_model(cfg, mix64(seed, 6), corrupt));
  return rep;
}

}  // namespace rdn
