#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rdn/config.hpp"
#include "rdn/ops.hpp"
#include "rdn/rng.hpp"

namespace rdn {

// One conv layer in the network graph: stable name, shape, padding, and
// whether a ReLU consumes its output (drives the init gain).
struct LayerSpec {
  std::string name;
  int out_ch = 0, in_ch = 0, k = 0;
  bool relu_after = false;
  int pad() const { return k / 2; }
};

// The full layer list in execution order. Names are the serialization
// contract; block and conv indices are 0-based.
inline std::vector<LayerSpec> layer_specs(const RdnConfig& cfg) {
  cfg.validate();
  std::vector<LayerSpec> specs;
  specs.push_back({"sfe1", cfg.g0, cfg.in_channels, 3});
  specs.push_back({"sfe2", cfg.g0, cfg.g0, 3});
  for (int d = 0; d < cfg.d_blocks; ++d) {
    const std::string base = "rdb." + std::to_string(d) + ".";
    for (int c = 0; c < cfg.c_layers; ++c) {
      specs.push_back({base + "conv." + std::to_string(c), cfg.growth,
                       cfg.rdb_conv_in(c), 3, true});
    }
    specs.push_back({base + "lff", cfg.g0, cfg.rdb_lff_in(), 1});
  }
  if (cfg.ablation.gff) {
    specs.push_back({"gff.1x1", cfg.g0, cfg.d_blocks * cfg.g0, 1});
    specs.push_back({"gff.3x3", cfg.g0, cfg.g0, 3});
  }
  const std::vector<int> factors = cfg.upnet_factors();
  for (std::size_t j = 0; j < factors.size(); ++j) {
    specs.push_back({"upnet." + std::to_string(j),
                     cfg.g0 * factors[j] * factors[j], cfg.g0, 3});
  }
  specs.push_back({"final", cfg.out_channels, cfg.g0, 3});
  return specs;
}

template <typename T>
struct RdnParams {
  std::map<std::string, ConvWeights<T>> layers;

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& [name, w] : layers) n += w.scalar_count();
    return n;
  }

  const ConvWeights<T>& at(const std::string& name) const {
    auto it = layers.find(name);
    if (it == layers.end()) {
      throw ConfigError("RdnParams: missing layer '" + name + "'");
    }
    return it->second;
  }
  ConvWeights<T>& at(const std::string& name) {
    auto it = layers.find(name);
    if (it == layers.end()) {
      throw ConfigError("RdnParams: missing layer '" + name + "'");
    }
    return it->second;
  }

  bool all_finite() const {
    for (const auto& [name, w] : layers) {
      if (!w.all_finite()) return false;
    }
    return true;
  }

  template <typename U>
  RdnParams<U> cast() const {
    RdnParams<U> out;
    for (const auto& [name, w] : layers) {
      out.layers.emplace(name, w.template cast<U>());
    }
    return out;
  }
};

// Kernel entries ~ N(0, gain / fan_in) with zero biases: He gain 2 where a
// ReLU consumes the output, unit gain on the purely linear layers (fusion,
// upscaling, final). Without the distinction every linear layer doubles
// activation variance at init and deep stacks start far out of range. The
// draw order follows layer_specs, so a (cfg, seed) pair pins every weight.
template <typename T>
RdnParams<T> init_params(const RdnConfig& cfg, std::uint64_t seed) {
  RdnParams<T> params;
  Rng rng(seed);
  for (const LayerSpec& s : layer_specs(cfg)) {
    ConvWeights<T> w(s.out_ch, s.in_ch, s.k, s.k);
    const double gain = s.relu_after ? 2.0 : 1.0;
    const double stddev =
        std::sqrt(gain / (static_cast<double>(s.in_ch) * s.k * s.k));
    for (T& v : w.kernel) v = static_cast<T>(rng.normal() * stddev);
    params.layers.emplace(s.name, std::move(w));
  }
  return params;
}

// All-zero weights of the right shapes; handy for identity-map checks.
template <typename T>
RdnParams<T> zero_params(const RdnConfig& cfg) {
  RdnParams<T> params;
  for (const LayerSpec& s : layer_specs(cfg)) {
    params.layers.emplace(s.name, ConvWeights<T>(s.out_ch, s.in_ch, s.k, s.k));
  }
  return params;
}

// Closed-form parameter count, kept deliberately independent of layer_specs
// so tests can cross-check the two routes. Includes biases.
inline long long count_params(const RdnConfig& cfg) {
  cfg.validate();
  const long long D = cfg.d_blocks, C = cfg.c_layers, G = cfg.growth,
                  G0 = cfg.g0;
  long long total = 0;
  total += 9 * G0 * cfg.in_channels + G0;  // sfe1
  total += 9 * G0 * G0 + G0;               // sfe2
  long long per_block = 0;
  for (long long c = 1; c <= C; ++c) {
    long long in;
    if (cfg.ablation.cm) {
      in = G0 + (c - 1) * G;
    } else {
      in = (c == 1) ? G0 : (c - 1) * G;
    }
    per_block += 9 * G * in + G;
  }
  const long long lff_in = (cfg.ablation.cm ? G0 : 0) + C * G;
  per_block += lff_in * G0 + G0;
  total += D * per_block;
  if (cfg.ablation.gff) {
    total += D * G0 * G0 + G0;      // 1x1 fusion over all block outputs
    total += 9 * G0 * G0 + G0;      // 3x3 fusion
  }
  if (cfg.topology == Topology::SR) {
    // one conv per stage: g0 -> g0*f^2, then pixel shuffle (no weights)
    for (int f : cfg.upnet_factors()) {
      total += 9 * G0 * (G0 * f * f) + G0 * f * f;
    }
  }
  total += 9 * G0 * cfg.out_channels + cfg.out_channels;  // final
  return total;
}

}  // namespace rdn
