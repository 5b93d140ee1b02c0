#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rdn/image.hpp"
#include "rdn/resize.hpp"
#include "rdn/rng.hpp"

namespace rdn {

enum class DegradationKind { BI, BD, DN, AWGN, DEBLUR };

inline std::string degradation_name(DegradationKind k) {
  switch (k) {
    case DegradationKind::BI: return "bi";
    case DegradationKind::BD: return "bd";
    case DegradationKind::DN: return "dn";
    case DegradationKind::AWGN: return "awgn";
    case DegradationKind::DEBLUR: return "deblur";
  }
  return "?";
}

// Parameters of one synthetic degradation. sigma_noise is on the 0-255
// scale and gets divided by 255 internally.
struct DegradationSpec {
  DegradationKind kind = DegradationKind::BI;
  int scale = 2;
  double sigma_noise = 0.0;
  int blur_size = 7;
  double blur_std = 1.6;
  std::uint64_t seed = 0;

  void validate() const {
    const bool scaled = kind == DegradationKind::BI ||
                        kind == DegradationKind::BD ||
                        kind == DegradationKind::DN;
    if (scaled && scale < 2) {
      throw InputError("DegradationSpec: scale must be >= 2 for " +
                       degradation_name(kind));
    }
    if (sigma_noise < 0) {
      throw InputError("DegradationSpec: sigma_noise must be >= 0");
    }
    if (blur_size % 2 == 0 || blur_size < 1) {
      throw InputError("DegradationSpec: blur size must be odd");
    }
  }

  // Canonical constructors with the standard parameter choices per kind.
  static DegradationSpec bi(int scale, std::uint64_t seed = 0) {
    return {DegradationKind::BI, scale, 0.0, 7, 1.6, seed};
  }
  static DegradationSpec bd(std::uint64_t seed = 0) {
    return {DegradationKind::BD, 3, 0.0, 7, 1.6, seed};
  }
  static DegradationSpec dn(std::uint64_t seed = 0) {
    return {DegradationKind::DN, 3, 30.0, 7, 1.6, seed};
  }
  static DegradationSpec awgn(double sigma, std::uint64_t seed = 0) {
    return {DegradationKind::AWGN, 1, sigma, 7, 1.6, seed};
  }
  static DegradationSpec deblur(std::uint64_t seed = 0) {
    return {DegradationKind::DEBLUR, 1, 2.0, 25, 1.6, seed};
  }
};

// Sampled isotropic Gaussian, size x size, normalized to sum exactly 1.
// Symmetry under both axis flips holds bit-wise by construction.
inline std::vector<double> gaussian_kernel(int size, double stddev) {
  if (size < 1 || size % 2 == 0) {
    throw InputError("gaussian_kernel: size must be odd and positive, got " +
                     std::to_string(size));
  }
  if (!(stddev > 0)) {
    throw InputError("gaussian_kernel: std must be positive");
  }
  const int half = size / 2;
  std::vector<double> k(static_cast<std::size_t>(size) * size);
  double sum = 0.0;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double dy = y - half, dx = x - half;
      const double v = std::exp(-(dx * dx + dy * dy) / (2.0 * stddev * stddev));
      k[static_cast<std::size_t>(y) * size + x] = v;
      sum += v;
    }
  }
  for (double& v : k) v /= sum;
  return k;
}

// Dense 2-D convolution with symmetric (reflect-including-edge) padding,
// accumulating in double. Kernel side must be odd.
inline Image blur_symmetric(const Image& img, const std::vector<double>& kernel,
                            int size) {
  if (size % 2 == 0 || static_cast<std::size_t>(size) * size != kernel.size()) {
    throw InputError("blur_symmetric: kernel must be odd-sided and square");
  }
  const int half = size / 2;
  auto fold = [](int idx, int n) {
    const int period = 2 * n;
    idx = ((idx % period) + period) % period;
    return idx < n ? idx : period - 1 - idx;
  };
  Image out(img.c, img.h, img.w);
  for (int ci = 0; ci < img.c; ++ci) {
    const float* src = img.plane(ci);
    float* dst = out.plane(ci);
    for (int y = 0; y < img.h; ++y) {
      for (int x = 0; x < img.w; ++x) {
        double acc = 0.0;
        for (int ky = 0; ky < size; ++ky) {
          const int sy = fold(y + ky - half, img.h);
          const double* krow = kernel.data() + static_cast<std::size_t>(ky) * size;
          const float* srow = src + static_cast<std::size_t>(sy) * img.w;
          for (int kx = 0; kx < size; ++kx) {
            acc += krow[kx] * srow[fold(x + kx - half, img.w)];
          }
        }
        dst[static_cast<std::size_t>(y) * img.w + x] = static_cast<float>(acc);
      }
    }
  }
  return out;
}

// Plain subsampling on the stride grid anchored at the top-left pixel.
inline Image subsample(const Image& img, int stride) {
  if (stride < 1) throw InputError("subsample: stride must be >= 1");
  if (img.h % stride != 0 || img.w % stride != 0) {
    throw InputError("subsample: dims must be divisible by " +
                     std::to_string(stride));
  }
  Image out(img.c, img.h / stride, img.w / stride);
  for (int ci = 0; ci < img.c; ++ci) {
    const float* src = img.plane(ci);
    float* dst = out.plane(ci);
    for (int y = 0; y < out.h; ++y) {
      for (int x = 0; x < out.w; ++x) {
        dst[static_cast<std::size_t>(y) * out.w + x] =
            src[(static_cast<std::size_t>(y) * stride) * img.w + x * stride];
      }
    }
  }
  return out;
}

// Adds N(0, (sigma/255)^2) noise. Generated in double via the seeded PRNG,
// never clipped here; clamping happens only at file write.
inline Image add_gaussian_noise(const Image& img, double sigma255, Rng& rng) {
  Image out(img.c, img.h, img.w);
  const double s = sigma255 / 255.0;
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    out.data[i] = static_cast<float>(img.data[i] + s * rng.normal());
  }
  return out;
}

// Applies one degradation. For the scaled kinds the input must already be
// divisible by the scale (callers pre-crop; see crop_to_multiple).
inline Image degrade(const Image& img, const DegradationSpec& spec) {
  spec.validate();
  const bool scaled = spec.kind == DegradationKind::BI ||
                      spec.kind == DegradationKind::BD ||
                      spec.kind == DegradationKind::DN;
  if (scaled && (img.h % spec.scale != 0 || img.w % spec.scale != 0)) {
    throw InputError("degrade: image dims " + std::to_string(img.h) + "x" +
                     std::to_string(img.w) + " not divisible by scale " +
                     std::to_string(spec.scale) + "; crop first");
  }
  Rng rng(spec.seed);
  switch (spec.kind) {
    case DegradationKind::BI:
      return bicubic_resize(img, img.h / spec.scale, img.w / spec.scale);
    case DegradationKind::BD: {
      const Image blurred = blur_symmetric(
          img, gaussian_kernel(spec.blur_size, spec.blur_std), spec.blur_size);
      return subsample(blurred, spec.scale);
    }
    case DegradationKind::DN: {
      const Image small =
          bicubic_resize(img, img.h / spec.scale, img.w / spec.scale);
      return add_gaussian_noise(small, spec.sigma_noise, rng);
    }
    case DegradationKind::AWGN:
      return add_gaussian_noise(img, spec.sigma_noise, rng);
    case DegradationKind::DEBLUR: {
      const Image blurred = blur_symmetric(
          img, gaussian_kernel(spec.blur_size, spec.blur_std), spec.blur_size);
      return add_gaussian_noise(blurred, spec.sigma_noise, rng);
    }
  }
  throw InputError("degrade: unknown kind");
}

inline DegradationKind parse_degradation(const std::string& s) {
  if (s == "bi") return DegradationKind::BI;
  if (s == "bd") return DegradationKind::BD;
  if (s == "dn") return DegradationKind::DN;
  if (s == "awgn") return DegradationKind::AWGN;
  if (s == "deblur") return DegradationKind::DEBLUR;
  throw InputError("unknown degradation '" + s +
                   "' (expected bi|bd|dn|awgn|deblur)");
}

}  // namespace rdn
