#pragma once

#include <string>
#include <vector>

#include "rdn/config.hpp"
#include "rdn/ops.hpp"
#include "rdn/params.hpp"

namespace rdn {

// Activations retained by one block's forward pass for exact backward.
// conv_in holds each conv's (possibly concatenated) input, preact the
// pre-ReLU outputs. Memory over recomputation, acceptable at this scale.
template <typename T>
struct RdbCache {
  std::vector<Tensor<T>> conv_in;
  std::vector<Tensor<T>> preact;
  Tensor<T> lff_in;
};

template <typename T>
struct RdnCache {
  bool valid = false;
  Tensor<T> input;
  Tensor<T> f_m1;                    // after sfe1
  Tensor<T> f0;                      // after sfe2, first block input
  std::vector<Tensor<T>> block_in;   // input of each block
  std::vector<RdbCache<T>> blocks;
  Tensor<T> gff_cat;                 // concat of block outputs (gff only)
  Tensor<T> gff_mid;                 // after gff.1x1 (gff only)
  std::vector<Tensor<T>> up_in;      // input of each upscale conv
  std::vector<Tensor<T>> up_conv;    // conv output before each shuffle
  Tensor<T> final_in;
};

namespace detail {
inline std::string rdb_name(int d, const char* tail) {
  return "rdb." + std::to_string(d) + "." + tail;
}
inline std::string rdb_conv_name(int d, int c) {
  return "rdb." + std::to_string(d) + ".conv." + std::to_string(c);
}
}  // namespace detail

// One residual dense block. Conv c takes the concatenation of everything in
// the running pool; the pool seeds with the block input only under CM. The
// 1x1 fusion conv compresses the full pool back to g0, and LRL adds the
// block input on top.
template <typename T>
Tensor<T> rdb_forward(const Tensor<T>& x, const RdnParams<T>& params, int d,
                      const RdnConfig& cfg, RdbCache<T>* cache = nullptr) {
  if (x.c != cfg.g0) {
    throw DimensionError("rdb_forward: expected " + std::to_string(cfg.g0) +
                         " input channels, got " + std::to_string(x.c));
  }
  std::vector<Tensor<T>> pool;
  pool.reserve(cfg.c_layers + 1);
  if (cfg.ablation.cm) pool.push_back(x);
  for (int c = 0; c < cfg.c_layers; ++c) {
    Tensor<T> in_c = (c == 0) ? x : concat_channels(pool);
    Tensor<T> pre =
        conv2d_forward(in_c, params.at(detail::rdb_conv_name(d, c)), 1);
    Tensor<T> act = relu_forward(pre);
    if (cache) {
      cache->conv_in.push_back(std::move(in_c));
      cache->preact.push_back(std::move(pre));
    }
    pool.push_back(std::move(act));
  }
  Tensor<T> lff_in = concat_channels(pool);
  Tensor<T> fused =
      conv2d_forward(lff_in, params.at(detail::rdb_name(d, "lff")), 0);
  if (cache) cache->lff_in = std::move(lff_in);
  if (cfg.ablation.lrl) return add(x, fused);
  return fused;
}

// Gradient of rdb_forward w.r.t. the block input; weight gradients are
// written into `grads` under their layer names.
template <typename T>
Tensor<T> rdb_backward(const Tensor<T>& grad_out, const RdnParams<T>& params,
                       int d, const RdnConfig& cfg, const RdbCache<T>& cache,
                       RdnParams<T>& grads) {
  const int C = cfg.c_layers;
  const bool cm = cfg.ablation.cm;
  // Pool layout mirrors the forward pass: [x?] + C activations.
  std::vector<int> pool_sizes;
  if (cm) pool_sizes.push_back(cfg.g0);
  for (int c = 0; c < C; ++c) pool_sizes.push_back(cfg.growth);

  Tensor<T> grad_x(grad_out.n, cfg.g0, grad_out.h, grad_out.w);
  if (cfg.ablation.lrl) add_inplace(grad_x, grad_out);

  // Fusion conv first; its input gradient seeds the pool gradients.
  ConvGrads<T> lg = conv2d_backward(cache.lff_in,
                                    params.at(detail::rdb_name(d, "lff")),
                                    grad_out, 0);
  grads.layers[detail::rdb_name(d, "lff")] = std::move(lg.weights);
  std::vector<Tensor<T>> grad_pool = split_channels(lg.input, pool_sizes);

  for (int c = C - 1; c >= 0; --c) {
    const int pool_idx = (cm ? 1 : 0) + c;
    Tensor<T> grad_pre = relu_backward(cache.preact[c], grad_pool[pool_idx]);
    ConvGrads<T> cg =
        conv2d_backward(cache.conv_in[c],
                        params.at(detail::rdb_conv_name(d, c)), grad_pre, 1);
    grads.layers[detail::rdb_conv_name(d, c)] = std::move(cg.weights);
    if (c == 0) {
      add_inplace(grad_x, cg.input);
    } else {
      // The conv consumed pool entries [0, pool_idx); fan the gradient back.
      std::vector<int> prefix(pool_sizes.begin(),
                              pool_sizes.begin() + pool_idx);
      std::vector<Tensor<T>> slices = split_channels(cg.input, prefix);
      for (int i = 0; i < pool_idx; ++i) add_inplace(grad_pool[i], slices[i]);
    }
  }
  if (cm) add_inplace(grad_x, grad_pool[0]);
  return grad_x;
}

// Full network. Shallow features, D blocks, optional global fusion, global
// residual, then either the pixel-shuffle upscaler (SR) or the input
// residual (SameRes).
template <typename T>
Tensor<T> rdn_forward(const Tensor<T>& x, const RdnParams<T>& params,
                      const RdnConfig& cfg, RdnCache<T>* cache = nullptr) {
  cfg.validate();
  if (x.c != cfg.in_channels) {
    throw DimensionError("rdn_forward: expected " +
                         std::to_string(cfg.in_channels) +
                         " input channels, got " + std::to_string(x.c));
  }
  Tensor<T> f_m1 = conv2d_forward(x, params.at("sfe1"), 1);
  Tensor<T> f0 = conv2d_forward(f_m1, params.at("sfe2"), 1);
  if (cache) {
    cache->input = x;
    cache->f_m1 = f_m1;
    cache->f0 = f0;
    cache->blocks.assign(cfg.d_blocks, RdbCache<T>{});
  }

  std::vector<Tensor<T>> block_out;
  block_out.reserve(cfg.d_blocks);
  Tensor<T> cur = f0;
  for (int d = 0; d < cfg.d_blocks; ++d) {
    if (cache) cache->block_in.push_back(cur);
    Tensor<T> out =
        rdb_forward(cur, params, d, cfg, cache ? &cache->blocks[d] : nullptr);
    block_out.push_back(out);
    cur = std::move(out);
  }

  Tensor<T> f_gf;
  if (cfg.ablation.gff) {
    Tensor<T> cat = concat_channels(block_out);
    Tensor<T> mid = conv2d_forward(cat, params.at("gff.1x1"), 0);
    f_gf = conv2d_forward(mid, params.at("gff.3x3"), 1);
    if (cache) {
      cache->gff_cat = std::move(cat);
      cache->gff_mid = std::move(mid);
    }
  } else {
    f_gf = block_out.back();
  }
  Tensor<T> f_df = add(f_m1, f_gf);

  Tensor<T> cur_up = std::move(f_df);
  const std::vector<int> factors = cfg.upnet_factors();
  for (std::size_t j = 0; j < factors.size(); ++j) {
    if (cache) cache->up_in.push_back(cur_up);
    Tensor<T> conv = conv2d_forward(
        cur_up, params.at("upnet." + std::to_string(j)), 1);
    if (cache) cache->up_conv.push_back(conv);
    cur_up = pixel_shuffle(conv, factors[j]);
  }

  if (cache) cache->final_in = cur_up;
  Tensor<T> out = conv2d_forward(cur_up, params.at("final"), 1);
  if (cfg.topology == Topology::SameRes) out = add(out, x);
  if (cache) cache->valid = true;
  return out;
}

template <typename T>
struct RdnBackwardResult {
  RdnParams<T> weight_grads;
  Tensor<T> input_grad;
};

// Exact reverse-mode pass over the graph recorded by rdn_forward.
template <typename T>
RdnBackwardResult<T> rdn_backward(const Tensor<T>& grad_out,
                                  const RdnParams<T>& params,
                                  const RdnConfig& cfg,
                                  const RdnCache<T>& cache) {
  if (!cache.valid) {
    throw StateError("rdn_backward: forward pass with retained state required");
  }
  RdnBackwardResult<T> res;
  RdnParams<T>& grads = res.weight_grads;

  Tensor<T> grad_x(cache.input.n, cache.input.c, cache.input.h, cache.input.w);
  if (cfg.topology == Topology::SameRes) add_inplace(grad_x, grad_out);

  ConvGrads<T> fg =
      conv2d_backward(cache.final_in, params.at("final"), grad_out, 1);
  grads.layers["final"] = std::move(fg.weights);
  Tensor<T> g = std::move(fg.input);

  const std::vector<int> factors = cfg.upnet_factors();
  for (int j = static_cast<int>(factors.size()) - 1; j >= 0; --j) {
    Tensor<T> g_conv = pixel_unshuffle(g, factors[j]);
    ConvGrads<T> ug = conv2d_backward(
        cache.up_in[j], params.at("upnet." + std::to_string(j)), g_conv, 1);
    grads.layers["upnet." + std::to_string(j)] = std::move(ug.weights);
    g = std::move(ug.input);
  }

  // g now carries dL/dF_DF = dL/dF_-1 (residual) + dL/dF_GF.
  Tensor<T> grad_f_m1 = g;

  std::vector<Tensor<T>> grad_blocks;
  if (cfg.ablation.gff) {
    ConvGrads<T> g3 =
        conv2d_backward(cache.gff_mid, params.at("gff.3x3"), g, 1);
    grads.layers["gff.3x3"] = std::move(g3.weights);
    ConvGrads<T> g1 =
        conv2d_backward(cache.gff_cat, params.at("gff.1x1"), g3.input, 0);
    grads.layers["gff.1x1"] = std::move(g1.weights);
    grad_blocks =
        split_channels(g1.input, std::vector<int>(cfg.d_blocks, cfg.g0));
  } else {
    grad_blocks.assign(cfg.d_blocks, Tensor<T>());
    grad_blocks.back() = g;
  }

  // Walk the block chain backwards, carrying the gradient w.r.t. each
  // block's input and adding the per-block taps from the fusion concat.
  Tensor<T> carry(cache.f0.n, cache.f0.c, cache.f0.h, cache.f0.w);
  for (int d = cfg.d_blocks - 1; d >= 0; --d) {
    Tensor<T>& tap = grad_blocks[d];
    if (tap.numel() > 0) add_inplace(carry, tap);
    carry = rdb_backward(carry, params, d, cfg, cache.blocks[d], grads);
  }

  ConvGrads<T> s2 = conv2d_backward(cache.f_m1, params.at("sfe2"), carry, 1);
  grads.layers["sfe2"] = std::move(s2.weights);
  add_inplace(grad_f_m1, s2.input);

  ConvGrads<T> s1 =
      conv2d_backward(cache.input, params.at("sfe1"), grad_f_m1, 1);
  grads.layers["sfe1"] = std::move(s1.weights);
  add_inplace(grad_x, s1.input);

  res.input_grad = std::move(grad_x);
  return res;
}

}  // namespace rdn
