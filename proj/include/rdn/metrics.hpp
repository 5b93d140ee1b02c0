#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "rdn/image.hpp"
#include "rdn/transforms.hpp"

namespace rdn {

// BT.601 studio-swing luma: Y = (65.481 R + 128.553 G + 24.966 B + 16) / 255
// on [0,1] inputs, so white maps to 235/255 and black to 16/255. This is the
// convention of the usual benchmark tooling; note it differs from full-swing
// Y by a few tenths of a dB in PSNR comparisons. Gray input passes through.
inline Image rgb_to_y(const Image& img) {
  if (img.is_gray()) return img;
  Image out(1, img.h, img.w);
  const float* r = img.plane(0);
  const float* g = img.plane(1);
  const float* b = img.plane(2);
  float* y = out.plane(0);
  for (std::size_t i = 0; i < out.plane_size(); ++i) {
    y[i] = static_cast<float>(
        (65.481 * r[i] + 128.553 * g[i] + 24.966 * b[i] + 16.0) / 255.0);
  }
  return out;
}

inline Image shave_border(const Image& img, int shave) {
  if (shave < 0) throw InputError("shave must be >= 0");
  if (shave == 0) return img;
  if (img.h <= 2 * shave || img.w <= 2 * shave) {
    throw InputError("shave " + std::to_string(shave) +
                     " leaves no pixels on " + std::to_string(img.h) + "x" +
                     std::to_string(img.w));
  }
  Image out(img.c, img.h - 2 * shave, img.w - 2 * shave);
  for (int ci = 0; ci < img.c; ++ci) {
    for (int y = 0; y < out.h; ++y) {
      const float* src =
          img.plane(ci) + (static_cast<std::size_t>(y) + shave) * img.w + shave;
      std::copy(src, src + out.w,
                out.plane(ci) + static_cast<std::size_t>(y) * out.w);
    }
  }
  return out;
}

// Identical images return +infinity; report writers print it as "inf" and
// leave it out of averages.
inline double psnr(const Image& a, const Image& b, int shave = 0) {
  if (a.c != b.c || a.h != b.h || a.w != b.w) {
    throw DimensionError("psnr: image dims disagree");
  }
  const Image sa = shave_border(a, shave);
  const Image sb = shave_border(b, shave);
  double se = 0.0;
  for (std::size_t i = 0; i < sa.data.size(); ++i) {
    const double d = static_cast<double>(sa.data[i]) - sb.data[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(sa.data.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

namespace detail {
inline std::vector<double> ssim_window() {
  // 11x11 Gaussian, sigma 1.5, normalized.
  std::vector<double> w(121);
  double sum = 0.0;
  for (int y = 0; y < 11; ++y) {
    for (int x = 0; x < 11; ++x) {
      const double dy = y - 5, dx = x - 5;
      const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * 1.5 * 1.5));
      w[static_cast<std::size_t>(y) * 11 + x] = v;
      sum += v;
    }
  }
  for (double& v : w) v /= sum;
  return w;
}
}  // namespace detail

// Mean local SSIM over valid (fully inside) 11x11 windows, K1=0.01,
// K2=0.03, dynamic range 1. Gray images only; use rgb_to_y first for color.
inline double ssim(const Image& a, const Image& b) {
  if (!a.is_gray() || !b.is_gray()) {
    throw InputError("ssim: gray images expected (convert color with rgb_to_y)");
  }
  if (a.h != b.h || a.w != b.w) {
    throw DimensionError("ssim: image dims disagree");
  }
  if (a.h < 11 || a.w < 11) {
    throw InputError("ssim: images must be at least 11x11");
  }
  static const std::vector<double> win = detail::ssim_window();
  const double c1 = 0.01 * 0.01;
  const double c2 = 0.03 * 0.03;
  const float* pa = a.plane(0);
  const float* pb = b.plane(0);
  const int oh = a.h - 10, ow = a.w - 10;
  double total = 0.0;
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double ma = 0.0, mb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
      for (int ky = 0; ky < 11; ++ky) {
        const float* ra = pa + (static_cast<std::size_t>(y) + ky) * a.w + x;
        const float* rb = pb + (static_cast<std::size_t>(y) + ky) * a.w + x;
        const double* rw = win.data() + static_cast<std::size_t>(ky) * 11;
        for (int kx = 0; kx < 11; ++kx) {
          const double va = ra[kx], vb = rb[kx];
          const double w = rw[kx];
          ma += w * va;
          mb += w * vb;
          saa += w * va * va;
          sbb += w * vb * vb;
          sab += w * va * vb;
        }
      }
      const double va = saa - ma * ma;
      const double vb = sbb - mb * mb;
      const double cov = sab - ma * mb;
      const double num = (2.0 * ma * mb + c1) * (2.0 * cov + c2);
      const double den = (ma * ma + mb * mb + c1) * (va + vb + c2);
      total += num / den;
    }
  }
  return total / (static_cast<double>(oh) * ow);
}

// Test-time x8 augmentation: run the model on each dihedral transform of the
// input, undo the transform on each output, average.
template <typename Model>
Image self_ensemble(Model&& model, const Image& img) {
  const Tensor<float> base = image_to_tensor(img);
  Image first;
  std::vector<double> acc;
  for (int k = 0; k < kDihedralCount; ++k) {
    const Tensor<float> tin = dihedral_apply(base, k);
    Image out = model(tensor_to_image(tin));
    Tensor<float> tout = dihedral_unapply(image_to_tensor(out), k);
    if (k == 0) {
      first = tensor_to_image(tout);
      acc.assign(first.data.begin(), first.data.end());
    } else {
      if (tout.c != first.c || tout.h != first.h || tout.w != first.w) {
        throw DimensionError(
            "self_ensemble: model outputs disagree across transforms");
      }
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += tout.data[i];
    }
  }
  Image result(first.c, first.h, first.w);
  for (std::size_t i = 0; i < acc.size(); ++i) {
    result.data[i] = static_cast<float>(acc[i] / kDihedralCount);
  }
  return result;
}

struct EvalRow {
  std::string name;
  double psnr_db = 0.0;
  double ssim_val = 0.0;
};

// Per-image metric rows plus means. Infinite PSNR rows (identical images)
// are excluded from the PSNR mean.
struct EvalReport {
  std::vector<EvalRow> rows;

  double mean_psnr() const {
    double sum = 0.0;
    int count = 0;
    for (const EvalRow& r : rows) {
      if (std::isinf(r.psnr_db)) continue;
      sum += r.psnr_db;
      ++count;
    }
    return count == 0 ? std::numeric_limits<double>::infinity() : sum / count;
  }

  double mean_ssim() const {
    if (rows.empty()) return 0.0;
    double sum = 0.0;
    for (const EvalRow& r : rows) sum += r.ssim_val;
    return sum / static_cast<double>(rows.size());
  }

  std::string to_csv() const {
    auto fmt = [](double v, const char* spec) {
      if (std::isinf(v)) return std::string("inf");
      char buf[64];
      std::snprintf(buf, sizeof(buf), spec, v);
      return std::string(buf);
    };
    std::string out = "image,psnr_db,ssim\n";
    for (const EvalRow& r : rows) {
      out += r.name + "," + fmt(r.psnr_db, "%.4f") + "," +
             fmt(r.ssim_val, "%.6f") + "\n";
    }
    out += "MEAN," + fmt(mean_psnr(), "%.4f") + "," +
           fmt(mean_ssim(), "%.6f") + "\n";
    return out;
  }
};

}  // namespace rdn
