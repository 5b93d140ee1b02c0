// Acceptance checklist for the library: ten end-to-end checks covering
// parameter accounting, gradients, shape contracts, identities, toy
// training, ablation ordering, metrics, degradations, ensembling, and
// checkpoint integrity. Each check prints one PASS/FAIL line; the exit
// code is nonzero if any fail.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "rdn/checkpoint.hpp"
#include "rdn/degrade.hpp"
#include "rdn/gradcheck.hpp"
#include "rdn/image.hpp"
#include "rdn/metrics.hpp"
#include "rdn/model.hpp"
#include "rdn/resize.hpp"
#include "rdn/trainer.hpp"

using rdn::Image;
using rdn::RdnConfig;
using rdn::Rng;
using rdn::Tensor;
using rdn::Topology;

namespace {

struct Outcome {
  int id;
  std::string label;
  bool pass;
  std::string detail;
};

std::vector<Outcome> g_results;

void record(int id, const std::string& label, bool pass,
            const std::string& detail) {
  g_results.push_back({id, label, pass, detail});
  std::printf("criterion %2d [%-18s] %s  %s\n", id, label.c_str(),
              pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string fmt(const char* f, ...) {
  char buf[256];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Parameter accounting: the closed form and a constructed model agree on
//    22,123,395 scalars for the stock configuration, in under a second.

void criterion_params() {
  const auto t0 = std::chrono::steady_clock::now();
  const RdnConfig cfg;  // D=16, C=8, G=64, g0=64, x2, RGB
  const long long closed = rdn::count_params(cfg);
  const long long built =
      static_cast<long long>(rdn::zero_params<float>(cfg).scalar_count());
  const double secs = seconds_since(t0);
  const bool pass =
      closed == 22123395LL && built == closed && secs < 1.0;
  record(1, "param-count", pass,
         fmt("closed=%lld built=%lld in %.3fs (want 22123395, <1s)", closed,
             built, secs));
}

// ---------------------------------------------------------------------------
// 2. Gradients: op-level checks plus a full-model finite-difference check
//    for all eight ablation combinations, every relative error <= 1e-5,
//    within five minutes.

void criterion_gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::uint64_t seed = 2026;
  double worst = 0.0;
  std::string worst_name;
  bool pass = true;

  auto take = [&](const rdn::GradCheckItem& it) {
    if (it.max_rel_err > worst) {
      worst = it.max_rel_err;
      worst_name = it.name;
    }
    pass = pass && it.pass;
  };
  take(rdn::gradcheck_conv(3, rdn::mix64(seed, 1)));
  take(rdn::gradcheck_conv(1, rdn::mix64(seed, 2)));
  take(rdn::gradcheck_relu(rdn::mix64(seed, 3)));
  take(rdn::gradcheck_pixel_shuffle(rdn::mix64(seed, 4)));
  take(rdn::gradcheck_l1(rdn::mix64(seed, 5)));

  RdnConfig base;
  base.d_blocks = 2;
  base.c_layers = 3;
  base.growth = 8;
  base.g0 = 8;
  base.scale = 2;
  base.topology = Topology::SR;
  for (int mask = 0; mask < 8; ++mask) {
    rdn::AblationFlags flags;
    flags.cm = (mask & 1) != 0;
    flags.lrl = (mask & 2) != 0;
    flags.gff = (mask & 4) != 0;
    flags.lff = true;
    const RdnConfig cfg = rdn::apply_ablation(base, flags);
    take(rdn::gradcheck_model(cfg, rdn::mix64(seed, 6 + mask)));
  }
  const double secs = seconds_since(t0);
  pass = pass && secs < 300.0;
  record(2, "gradients", pass,
         fmt("13 checks, worst %.2e (%s) in %.1fs (want <=1e-5, <300s)",
             worst, worst_name.c_str(), secs));
}

// ---------------------------------------------------------------------------
// 3. Channel arithmetic: fifty random configurations construct cleanly,
//    every layer shape follows the dense-growth formulas, and a forward
//    pass honors the scale contract.

void criterion_channels() {
  Rng rng(33);
  int checked = 0;
  bool pass = true;
  std::string detail = "ok";
  for (int trial = 0; trial < 50 && pass; ++trial) {
    RdnConfig cfg;
    cfg.d_blocks = 1 + static_cast<int>(rng.below(4));
    cfg.c_layers = 1 + static_cast<int>(rng.below(4));
    cfg.growth = 1 + static_cast<int>(rng.below(8));
    cfg.g0 = 1 + static_cast<int>(rng.below(8));
    cfg.ablation.cm = rng.below(2) == 0;
    cfg.ablation.lrl = rng.below(2) == 0;
    cfg.ablation.gff = rng.below(2) == 0;
    const int scales[] = {1, 2, 3, 4, 8};
    cfg.scale = scales[rng.below(5)];
    if (cfg.scale == 1) {
      cfg.topology = Topology::SameRes;
      cfg.in_channels = cfg.out_channels = rng.below(2) == 0 ? 1 : 3;
    } else {
      cfg.topology = Topology::SR;
    }

    const auto params = rdn::init_params<float>(cfg, rng.next_u64());
    for (int d = 0; d < cfg.d_blocks && pass; ++d) {
      const std::string base = "rdb." + std::to_string(d) + ".";
      for (int c = 0; c < cfg.c_layers; ++c) {
        const auto& w = params.at(base + "conv." + std::to_string(c));
        const int want =
            cfg.ablation.cm ? cfg.g0 + c * cfg.growth
                            : (c == 0 ? cfg.g0 : c * cfg.growth);
        if (w.in_ch != want || w.out_ch != cfg.growth || w.kh != 3) {
          pass = false;
          detail = fmt("trial %d: conv %d has in=%d want %d", trial, c,
                       w.in_ch, want);
        }
      }
      const auto& lff = params.at(base + "lff");
      const int want_lff =
          (cfg.ablation.cm ? cfg.g0 : 0) + cfg.c_layers * cfg.growth;
      if (lff.in_ch != want_lff || lff.kh != 1) {
        pass = false;
        detail = fmt("trial %d: lff in=%d want %d", trial, lff.in_ch,
                     want_lff);
      }
    }
    if (static_cast<long long>(params.scalar_count()) !=
        rdn::count_params(cfg)) {
      pass = false;
      detail = fmt("trial %d: scalar count mismatch", trial);
    }

    if (pass) {
      Tensor<float> x(1, cfg.in_channels, 8, 8);
      Rng fill(trial);
      for (float& v : x.data) v = static_cast<float>(fill.uniform());
      const Tensor<float> y = rdn::rdn_forward(x, params, cfg);
      if (y.c != cfg.out_channels || y.h != 8 * cfg.scale ||
          y.w != 8 * cfg.scale || !y.all_finite()) {
        pass = false;
        detail = fmt("trial %d: forward gave %s", trial,
                     y.dims_string().c_str());
      }
    }
    ++checked;
  }
  record(3, "channel-arith", pass,
         pass ? fmt("%d random configs construct and forward", checked)
              : detail);
}

// ---------------------------------------------------------------------------
// 4. Zero-weight identities: with all weights zero, residual paths make the
//    same-resolution model an exact identity, and each block an exact
//    identity, bit for bit.

void criterion_identities() {
  bool pass = true;
  std::string detail = "same-res model, block, and gff-off all identity";

  RdnConfig cfg;
  cfg.d_blocks = 3;
  cfg.c_layers = 2;
  cfg.growth = 4;
  cfg.g0 = 6;
  cfg.scale = 1;
  cfg.topology = Topology::SameRes;
  cfg.in_channels = cfg.out_channels = 3;
  const auto params = rdn::zero_params<float>(cfg);
  Rng rng(44);
  Tensor<float> x(2, 3, 12, 10);
  for (float& v : x.data) v = static_cast<float>(rng.uniform());
  const Tensor<float> y = rdn::rdn_forward(x, params, cfg);
  if (y.data != x.data) {
    pass = false;
    detail = "same-res zero model is not the identity";
  }

  Tensor<float> xb(1, 6, 7, 7);
  for (float& v : xb.data) v = static_cast<float>(rng.uniform());
  const Tensor<float> yb = rdn::rdb_forward(xb, params, 0, cfg);
  if (yb.data != xb.data) {
    pass = false;
    detail = "zero block with residual is not the identity";
  }

  RdnConfig nogff = cfg;
  nogff.ablation.gff = false;
  const auto params2 = rdn::zero_params<float>(nogff);
  const Tensor<float> y2 = rdn::rdn_forward(x, params2, nogff);
  if (y2.data != x.data) {
    pass = false;
    detail = "gff-off zero model is not the identity";
  }
  record(4, "zero-identities", pass, detail);
}

// ---------------------------------------------------------------------------
// Toy training shared by 5 and 6: a 64x64 scene dominated by a 4px
// checkerboard, which antialiased downscaling blurs badly but a conv
// model relearns from every patch at once, plus a gradient and one solid
// block so the image is not purely periodic.

Image toy_scene() {
  Image img(3, 64, 64);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < 64; ++y) {
      for (int x = 0; x < 64; ++x) {
        float v = 0.42f + 0.18f * y / 63.0f;
        v += (((x / 4) + (y / 4)) % 2) ? 0.3f : -0.26f;
        if (x >= 8 && x < 24 && y >= 40 && y < 56) v += 0.18f;
        // Slight channel decorrelation keeps color learnable.
        if (c == 1) v *= 0.92f;
        if (c == 2) v = 0.95f * v + 0.02f;
        img.at(c, y, x) = std::min(1.0f, std::max(0.0f, v));
      }
    }
  }
  return img;
}

struct ToyRun {
  double psnr_model = 0.0;
  double psnr_bicubic = 0.0;
  double secs = 0.0;
};

ToyRun run_toy_training(const rdn::AblationFlags& flags) {
  const auto t0 = std::chrono::steady_clock::now();
  RdnConfig cfg;
  cfg.d_blocks = 4;
  cfg.c_layers = 3;
  cfg.growth = 16;
  cfg.g0 = 64;
  cfg.scale = 2;
  cfg.topology = Topology::SR;
  cfg.ablation = flags;
  cfg.ablation.lff = true;

  const Image hq = toy_scene();
  const Image lq = rdn::degrade(hq, rdn::DegradationSpec::bi(2));

  std::vector<rdn::TrainPair> data;
  data.push_back(
      {rdn::image_to_tensor(lq), rdn::image_to_tensor(hq), "toy"});

  rdn::TrainConfig tc;
  tc.batch = 1;
  tc.patch_lq = 16;
  tc.lr0 = 1e-4;
  tc.halve_every = 200;
  tc.iters_per_epoch = 2000;
  tc.max_epochs = 1;
  tc.seed = 9;
  const rdn::TrainResult res = rdn::train(cfg, data, tc);

  const Tensor<float> pred =
      rdn::rdn_forward(rdn::image_to_tensor(lq), res.params, cfg);
  ToyRun out;
  out.psnr_model = rdn::psnr(rdn::tensor_to_image(pred), hq);
  out.psnr_bicubic = rdn::psnr(rdn::bicubic_resize(lq, 64, 64), hq);
  out.secs = seconds_since(t0);
  return out;
}

// 5. Toy training: 2000 iterations at lr 1e-4 on one synthetic image must
//    beat bicubic upscaling by at least 3 dB, within 15 minutes.

ToyRun g_full_run;  // reused by criterion 6

void criterion_training() {
  g_full_run = run_toy_training(rdn::AblationFlags{true, true, true, true});
  const bool pass = g_full_run.psnr_model >=
                        g_full_run.psnr_bicubic + 3.0 &&
                    g_full_run.secs < 900.0;
  record(5, "toy-training", pass,
         fmt("model %.2f dB vs bicubic %.2f dB in %.0fs (want +3dB, <900s)",
             g_full_run.psnr_model, g_full_run.psnr_bicubic,
             g_full_run.secs));
}

// 6. Ablation ordering: the full model must do at least as well as the
//    variant with all three structural features disabled, same budget.

void criterion_ablation() {
  const ToyRun base =
      run_toy_training(rdn::AblationFlags{false, false, false, true});
  const bool pass = g_full_run.psnr_model >= base.psnr_model;
  record(6, "ablation-order", pass,
         fmt("full %.2f dB vs CM0LRL0GFF0 %.2f dB", g_full_run.psnr_model,
             base.psnr_model));
}

// ---------------------------------------------------------------------------
// 7. Metric fixtures: a 10/255 constant offset reads 28.1308 dB, SSIM of an
//    image with itself is exactly 1, and the luma transform hits the
//    studio-swing endpoints.

void criterion_metrics() {
  bool pass = true;
  std::string detail = "psnr fixture, ssim self, luma endpoints";

  Image a(1, 16, 16), b(1, 16, 16);
  a.data.assign(a.data.size(), 0.5f);
  b.data.assign(b.data.size(), 0.5f + 10.0f / 255.0f);
  const double p = rdn::psnr(a, b);
  if (std::abs(p - 28.1308) > 1e-3) {
    pass = false;
    detail = fmt("psnr fixture gave %.5f, want 28.1308 +- 1e-3", p);
  }

  Image r(1, 24, 24);
  Rng rng(7);
  for (float& v : r.data) v = static_cast<float>(rng.uniform());
  if (rdn::ssim(r, r) != 1.0) {
    pass = false;
    detail = "ssim(a,a) is not exactly 1.0";
  }

  Image white(3, 1, 1), black(3, 1, 1);
  white.data.assign(3, 1.0f);
  black.data.assign(3, 0.0f);
  const double yw = rdn::rgb_to_y(white).at(0, 0, 0);
  const double yb = rdn::rgb_to_y(black).at(0, 0, 0);
  if (std::abs(yw - 235.0 / 255.0) > 1e-6 ||
      std::abs(yb - 16.0 / 255.0) > 1e-6) {
    pass = false;
    detail = fmt("luma endpoints %.8f / %.8f", yw, yb);
  }
  record(7, "metric-fixtures", pass, detail);
}

// ---------------------------------------------------------------------------
// 8. Degradation fixtures: blur kernels are normalized and symmetric,
//    resampling preserves constants exactly and linear ramps to 1e-5, and
//    generated noise matches its nominal strength to 2% on a 512x512 field.

void criterion_degradations() {
  bool pass = true;
  std::string detail = "kernels, constants, ramps, noise";

  const auto k = rdn::gaussian_kernel(7, 1.6);
  double sum = 0.0;
  for (double v : k) sum += v;
  if (std::abs(sum - 1.0) > 1e-12) {
    pass = false;
    detail = fmt("kernel sum off by %.2e", sum - 1.0);
  }
  for (int y = 0; y < 7 && pass; ++y) {
    for (int x = 0; x < 7; ++x) {
      if (k[y * 7 + x] != k[(6 - y) * 7 + x] ||
          k[y * 7 + x] != k[y * 7 + (6 - x)]) {
        pass = false;
        detail = "kernel not flip symmetric";
        break;
      }
    }
  }

  Image flat(3, 20, 20);
  flat.data.assign(flat.data.size(), 0.41f);
  const Image flat_up = rdn::bicubic_resize(flat, 46, 30);
  for (float v : flat_up.data) {
    if (v != 0.41f) {
      pass = false;
      detail = "resampled constant not exact";
      break;
    }
  }

  Image ramp(1, 8, 40);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 40; ++x) {
      ramp.at(0, y, x) = static_cast<float>(x) / 39.0f;
    }
  }
  const Image ramp_up = rdn::bicubic_resize(ramp, 8, 80);
  for (int x = 8; x < 72 && pass; ++x) {
    const double want = ((x + 0.5) / 2.0 - 0.5) / 39.0;
    if (std::abs(ramp_up.at(0, 4, x) - want) > 1e-5) {
      pass = false;
      detail = fmt("ramp off by %.2e at %d",
                   ramp_up.at(0, 4, x) - want, x);
    }
  }

  Image zero(1, 512, 512);
  Rng noise_rng(9);
  const Image noisy = rdn::add_gaussian_noise(zero, 30.0, noise_rng);
  double mean = 0.0;
  for (float v : noisy.data) mean += v;
  mean /= static_cast<double>(noisy.data.size());
  double var = 0.0;
  for (float v : noisy.data) var += (v - mean) * (v - mean);
  var /= static_cast<double>(noisy.data.size() - 1);
  const double want_sigma = 30.0 / 255.0;
  if (std::abs(std::sqrt(var) - want_sigma) > 0.02 * want_sigma) {
    pass = false;
    detail = fmt("noise std %.5f want %.5f +-2%%", std::sqrt(var),
                 want_sigma);
  }
  record(8, "degradations", pass, detail);
}

// ---------------------------------------------------------------------------
// 9. Self-ensemble: exact on an identity model, and within 1e-6 of a plain
//    run for a model that commutes with the dihedral group.

void criterion_ensemble() {
  bool pass = true;
  std::string detail = "identity exact, equivariant <=1e-6";

  Image img(3, 13, 17);
  Rng rng(21);
  for (float& v : img.data) v = static_cast<float>(rng.uniform());

  auto identity = [](const Image& x) { return x; };
  const Image ide = rdn::self_ensemble(identity, img);
  if (ide.data != img.data) {
    pass = false;
    detail = "identity ensemble not exact";
  }

  auto blur = [](const Image& x) {
    return rdn::blur_symmetric(x, rdn::gaussian_kernel(5, 1.1), 5);
  };
  const Image plain = blur(img);
  const Image ens = rdn::self_ensemble(blur, img);
  double worst = 0.0;
  for (std::size_t i = 0; i < ens.data.size(); ++i) {
    worst = std::max(
        worst, std::abs(static_cast<double>(ens.data[i]) - plain.data[i]));
  }
  if (worst > 1e-6) {
    pass = false;
    detail = fmt("equivariant ensemble off by %.2e", worst);
  }
  record(9, "self-ensemble", pass, detail);
}

// ---------------------------------------------------------------------------
// 10. Checkpoints: a save/load round trip is bit-exact including optimizer
//     state, and a corrupted magic is rejected up front.

void criterion_checkpoints() {
  namespace fs = std::filesystem;
  bool pass = true;
  std::string detail = "round trip bit-exact, bad magic rejected";

  const fs::path dir = fs::temp_directory_path() / "rdn_acceptance";
  fs::create_directories(dir);
  const std::string path = (dir / "a.ckpt").string();

  RdnConfig cfg;
  cfg.d_blocks = 2;
  cfg.c_layers = 2;
  cfg.growth = 8;
  cfg.g0 = 8;
  cfg.scale = 3;
  cfg.topology = Topology::SR;
  rdn::CheckpointData data;
  data.cfg = cfg;
  data.params = rdn::init_params<float>(cfg, 77);
  data.adam = rdn::AdamState<float>::zeros_like(data.params);
  Rng rng(78);
  for (auto& [name, m] : data.adam->m) {
    for (float& v : m.kernel) v = static_cast<float>(rng.normal());
  }
  data.adam->t = 12345;
  data.epoch = 9;
  rdn::save_checkpoint(data, path);
  const rdn::CheckpointData loaded = rdn::load_checkpoint(path);
  if (loaded.epoch != 9 || !loaded.adam || loaded.adam->t != 12345) {
    pass = false;
    detail = "metadata did not round trip";
  }
  for (const auto& [name, w] : data.params.layers) {
    if (w.kernel != loaded.params.at(name).kernel ||
        w.bias != loaded.params.at(name).bias) {
      pass = false;
      detail = "weights did not round trip bit-exact";
      break;
    }
  }
  if (pass) {
    for (const auto& [name, m] : data.adam->m) {
      if (m.kernel != loaded.adam->m.at(name).kernel) {
        pass = false;
        detail = "optimizer state did not round trip";
        break;
      }
    }
  }

  // Corrupt the magic; the loader must refuse and a valid reload must
  // still work afterwards (nothing half-loaded lingers).
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.write("NOTACKPT", 8);
  }
  bool rejected = false;
  try {
    (void)rdn::load_checkpoint(path);
  } catch (const rdn::FormatError&) {
    rejected = true;
  }
  if (!rejected) {
    pass = false;
    detail = "corrupted magic was accepted";
  }
  const std::string path2 = (dir / "b.ckpt").string();
  rdn::save_checkpoint(data, path2);
  const rdn::CheckpointData again = rdn::load_checkpoint(path2);
  if (again.params.layers.size() != data.params.layers.size()) {
    pass = false;
    detail = "reload after rejection failed";
  }
  std::error_code ec;
  fs::remove_all(dir, ec);
  record(10, "checkpoints", pass, detail);
}

}  // namespace

int main() {
  using CriterionFn = void (*)();
  const struct {
    int id;
    const char* label;
    CriterionFn fn;
  } steps[] = {
      {1, "param-count", criterion_params},
      {2, "gradients", criterion_gradients},
      {3, "channel-arith", criterion_channels},
      {4, "zero-identities", criterion_identities},
      {5, "toy-training", criterion_training},
      {6, "ablation-order", criterion_ablation},
      {7, "metric-fixtures", criterion_metrics},
      {8, "degradations", criterion_degradations},
      {9, "self-ensemble", criterion_ensemble},
      {10, "checkpoints", criterion_checkpoints},
  };
  for (const auto& step : steps) {
    try {
      step.fn();
    } catch (const std::exception& e) {
      record(step.id, step.label, false, std::string("exception: ") + e.what());
    }
  }
  int failed = 0;
  for (const Outcome& o : g_results) {
    if (!o.pass) ++failed;
  }
  if (failed == 0) {
    std::printf("all %zu criteria passed\n", g_results.size());
    return 0;
  }
  std::printf("%d criteria FAILED\n", failed);
  return 1;
}
