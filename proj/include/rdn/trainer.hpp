#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "rdn/checkpoint.hpp"
#include "rdn/model.hpp"
#include "rdn/optim.hpp"
#include "rdn/rng.hpp"
#include "rdn/transforms.hpp"

namespace rdn {

struct TrainConfig {
  int batch = 16;
  int patch_lq = 48;    // LQ-side square patch; HQ patch is patch_lq * scale
  double lr0 = 1e-4;
  int halve_every = 200;
  int iters_per_epoch = 1000;
  AdamParams adam;
  std::uint64_t seed = 0;
  int max_epochs = 200;

  void validate() const {
    if (batch < 1 || patch_lq < 1 || halve_every < 1 || iters_per_epoch < 1 ||
        max_epochs < 1) {
      throw ConfigError("TrainConfig: counts must be positive");
    }
    if (!(lr0 > 0)) throw ConfigError("TrainConfig: lr0 must be positive");
  }
};

// Stepwise halving: lr0 / 2^(epoch div halve_every).
inline double lr_schedule(int epoch, const TrainConfig& cfg) {
  if (epoch < 0) throw InputError("lr_schedule: epoch must be >= 0");
  return cfg.lr0 * std::pow(0.5, epoch / cfg.halve_every);
}

// One training example: LQ/HQ tensor pair (n = 1) plus a name for messages.
struct TrainPair {
  Tensor<float> lq, hq;
  std::string name;
};

namespace detail {
template <typename T>
Tensor<T> crop(const Tensor<T>& t, int y0, int x0, int h, int w) {
  Tensor<T> out(t.n, t.c, h, w);
  for (int ni = 0; ni < t.n; ++ni) {
    for (int ci = 0; ci < t.c; ++ci) {
      const T* src = t.plane(ni, ci);
      T* dst = out.plane(ni, ci);
      for (int y = 0; y < h; ++y) {
        std::copy(src + (static_cast<std::size_t>(y0) + y) * t.w + x0,
                  src + (static_cast<std::size_t>(y0) + y) * t.w + x0 + w,
                  dst + static_cast<std::size_t>(y) * w);
      }
    }
  }
  return out;
}
}  // namespace detail

// Aligned random crop: the HQ origin is the LQ origin times scale. Draws the
// y origin first, then x.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> sample_patch(const Tensor<T>& lq,
                                             const Tensor<T>& hq, int scale,
                                             int patch_lq, Rng& rng) {
  if (hq.h != lq.h * scale || hq.w != lq.w * scale || hq.n != lq.n) {
    throw DimensionError("sample_patch: HQ dims " + hq.dims_string() +
                         " are not LQ " + lq.dims_string() + " times scale " +
                         std::to_string(scale));
  }
  if (lq.h < patch_lq || lq.w < patch_lq) {
    throw InputError("sample_patch: LQ image " + lq.dims_string() +
                     " smaller than patch " + std::to_string(patch_lq));
  }
  const int oy = static_cast<int>(rng.below(lq.h - patch_lq + 1));
  const int ox = static_cast<int>(rng.below(lq.w - patch_lq + 1));
  return {detail::crop(lq, oy, ox, patch_lq, patch_lq),
          detail::crop(hq, oy * scale, ox * scale, patch_lq * scale,
                       patch_lq * scale)};
}

// Applies one uniformly drawn dihedral transform to both patches.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> augment(const Tensor<T>& lq,
                                        const Tensor<T>& hq, Rng& rng) {
  const int k = static_cast<int>(rng.below(kDihedralCount));
  return {dihedral_apply(lq, k), dihedral_apply(hq, k)};
}

struct LossRow {
  int epoch = 0;
  int iter = 0;
  double lr = 0.0;
  double loss = 0.0;
};

inline std::string loss_log_csv(const std::vector<LossRow>& rows) {
  std::string out = "epoch,iter,lr,loss\n";
  char buf[96];
  for (const LossRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.8g,%.8g\n", r.epoch, r.iter, r.lr,
                  r.loss);
    out += buf;
  }
  return out;
}

struct TrainOptions {
  std::string ckpt_dir;   // per-epoch checkpoints land here when non-empty
  std::string loss_csv;   // per-iteration loss log path when non-empty
  int start_epoch = 0;    // first epoch to run (resume point)
  const RdnParams<float>* resume_params = nullptr;
  const AdamState<float>* resume_adam = nullptr;
  std::ostream* progress = nullptr;  // per-epoch one-liners when non-null
};

struct TrainResult {
  RdnParams<float> params;
  AdamState<float> adam;
  std::vector<LossRow> log;
  int epochs_done = 0;
};

// Runs epochs of iters_per_epoch Adam steps on L1 loss over random
// augmented patch batches. Each epoch draws from its own RNG stream
// derived from (seed, epoch), so a resumed run retraces the from-scratch
// trajectory exactly. Single-threaded and deterministic.
inline TrainResult train(const RdnConfig& mcfg,
                         const std::vector<TrainPair>& data,
                         const TrainConfig& tcfg,
                         const TrainOptions& opts = {}) {
  mcfg.validate();
  tcfg.validate();
  if (data.empty()) throw InputError("train: empty data manifest");
  for (const TrainPair& p : data) {
    if (p.hq.h != p.lq.h * mcfg.scale || p.hq.w != p.lq.w * mcfg.scale) {
      throw DimensionError("train: pair '" + p.name + "' has LQ " +
                           p.lq.dims_string() + " vs HQ " +
                           p.hq.dims_string() + " under scale " +
                           std::to_string(mcfg.scale));
    }
    if (p.lq.c != mcfg.in_channels || p.hq.c != mcfg.out_channels) {
      throw DimensionError("train: pair '" + p.name +
                           "' channel counts do not match the model");
    }
  }

  TrainResult res;
  res.params = opts.resume_params
                   ? *opts.resume_params
                   : init_params<float>(mcfg, mix64(tcfg.seed, 0x494e4954));
  res.adam = opts.resume_adam ? *opts.resume_adam
                              : AdamState<float>::zeros_like(res.params);

  std::ofstream csv;
  if (!opts.loss_csv.empty()) {
    const bool fresh = opts.start_epoch == 0;
    csv.open(opts.loss_csv, fresh ? std::ios::trunc : std::ios::app);
    if (!csv) throw IoError("cannot open '" + opts.loss_csv + "' for writing");
    if (fresh) csv << "epoch,iter,lr,loss\n";
  }
  if (!opts.ckpt_dir.empty()) {
    std::filesystem::create_directories(opts.ckpt_dir);
  }

  for (int epoch = opts.start_epoch; epoch < tcfg.max_epochs; ++epoch) {
    Rng rng(mix64(tcfg.seed, static_cast<std::uint64_t>(epoch)));
    const double lr = lr_schedule(epoch, tcfg);
    double epoch_loss = 0.0;
    for (int iter = 0; iter < tcfg.iters_per_epoch; ++iter) {
      // Assemble the batch.
      std::vector<Tensor<float>> lq_parts, hq_parts;
      lq_parts.reserve(tcfg.batch);
      hq_parts.reserve(tcfg.batch);
      for (int b = 0; b < tcfg.batch; ++b) {
        const std::size_t pick = rng.below(data.size());
        auto [lq, hq] = sample_patch(data[pick].lq, data[pick].hq, mcfg.scale,
                                     tcfg.patch_lq, rng);
        auto [alq, ahq] = augment(lq, hq, rng);
        lq_parts.push_back(std::move(alq));
        hq_parts.push_back(std::move(ahq));
      }
      Tensor<float> lq_batch(tcfg.batch, mcfg.in_channels, tcfg.patch_lq,
                             tcfg.patch_lq);
      Tensor<float> hq_batch(tcfg.batch, mcfg.out_channels,
                             tcfg.patch_lq * mcfg.scale,
                             tcfg.patch_lq * mcfg.scale);
      for (int b = 0; b < tcfg.batch; ++b) {
        std::copy(lq_parts[b].data.begin(), lq_parts[b].data.end(),
                  lq_batch.plane(b, 0));
        std::copy(hq_parts[b].data.begin(), hq_parts[b].data.end(),
                  hq_batch.plane(b, 0));
      }

      RdnCache<float> cache;
      const Tensor<float> pred = rdn_forward(lq_batch, res.params, mcfg, &cache);
      auto [loss, grad] = l1_loss(pred, hq_batch);
      RdnBackwardResult<float> back =
          rdn_backward(grad, res.params, mcfg, cache);
      adam_step(res.params, back.weight_grads, res.adam, lr, tcfg.adam);

      res.log.push_back({epoch, iter, lr, loss});
      epoch_loss += loss;
      if (csv.is_open()) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%d,%d,%.8g,%.8g\n", epoch, iter, lr,
                      loss);
        csv << buf;
      }
    }
    if (csv.is_open()) csv.flush();
    res.epochs_done = epoch + 1;
    if (!opts.ckpt_dir.empty()) {
      CheckpointData ck;
      ck.cfg = mcfg;
      ck.params = res.params;
      ck.adam = res.adam;
      ck.epoch = epoch + 1;
      char name[32];
      std::snprintf(name, sizeof(name), "epoch_%04d.ckpt", epoch + 1);
      const std::filesystem::path dir(opts.ckpt_dir);
      save_checkpoint(ck, (dir / name).string());
      save_checkpoint(ck, (dir / "latest.ckpt").string());
    }
    if (opts.progress) {
      (*opts.progress) << "epoch " << epoch << ": lr " << lr << ", mean loss "
                       << epoch_loss / tcfg.iters_per_epoch << "\n";
    }
  }
  return res;
}

}  // namespace rdn
