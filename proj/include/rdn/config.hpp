#pragma once

#include <string>
#include <vector>

#include "rdn/errors.hpp"

namespace rdn {

enum class Topology { SR, SameRes };

// The three switches studied in the 8-way ablation grid. LFF is listed for
// completeness but must stay on: dense blocks of this depth do not train
// properly without the 1x1 fusion conv.
struct AblationFlags {
  bool cm = true;
  bool lrl = true;
  bool gff = true;
  bool lff = true;
};

struct RdnConfig {
  int d_blocks = 16;  // number of residual dense blocks (D)
  int c_layers = 8;   // convs per block (C)
  int growth = 64;    // per-conv output channels (G)
  int g0 = 64;        // base width of block inputs/outputs (G0)
  int scale = 2;      // 1 only (and always) for SameRes
  Topology topology = Topology::SR;
  AblationFlags ablation;
  int in_channels = 3;
  int out_channels = 3;

  void validate() const {
    if (d_blocks < 1 || c_layers < 1 || growth < 1 || g0 < 1 ||
        in_channels < 1 || out_channels < 1) {
      throw ConfigError("RdnConfig: all counts must be >= 1");
    }
    if (scale != 1 && scale != 2 && scale != 3 && scale != 4 && scale != 8) {
      throw ConfigError("RdnConfig: scale must be one of 1,2,3,4,8, got " +
                        std::to_string(scale));
    }
    if ((scale == 1) != (topology == Topology::SameRes)) {
      throw ConfigError("RdnConfig: scale 1 and SameRes topology imply each other");
    }
    if (!ablation.lff) {
      throw ConfigError("RdnConfig: lff must stay enabled");
    }
    if (topology == Topology::SameRes && in_channels != out_channels) {
      throw ConfigError(
          "RdnConfig: SameRes input/output residual needs in_channels == "
          "out_channels");
    }
  }

  // Pixel-shuffle staging of the upscaler: x2 and x3 are a single stage,
  // larger power-of-two factors stack x2 stages.
  std::vector<int> upnet_factors() const {
    switch (scale) {
      case 1: return {};
      case 2: return {2};
      case 3: return {3};
      case 4: return {2, 2};
      case 8: return {2, 2, 2};
      default:
        throw ConfigError("RdnConfig: unsupported scale " +
                          std::to_string(scale));
    }
  }

  // Input channels of conv c (0-based) inside a block. With CM the block
  // input joins every concatenation; without it only the first conv sees
  // the block input.
  int rdb_conv_in(int c) const {
    if (ablation.cm) return g0 + c * growth;
    return c == 0 ? g0 : c * growth;
  }

  // Input channels of the block's 1x1 fusion conv.
  int rdb_lff_in() const {
    return (ablation.cm ? g0 : 0) + c_layers * growth;
  }
};

// Returns a config realizing one combination of the ablation grid. LFF is
// forced on regardless of the requested flags.
inline RdnConfig apply_ablation(RdnConfig cfg, AblationFlags flags) {
  cfg.ablation = flags;
  cfg.ablation.lff = true;
  return cfg;
}

// Short tag like "CM1LRL0GFF1" naming an ablation combination.
inline std::string ablation_tag(const AblationFlags& f) {
  return std::string("CM") + (f.cm ? "1" : "0") + "LRL" + (f.lrl ? "1" : "0") +
         "GFF" + (f.gff ? "1" : "0");
}

}  // namespace rdn
