#pragma once

#include <cmath>
#include <vector>

#include "rdn/image.hpp"

namespace rdn {

// Keys cubic convolution kernel with a = -0.5 (the classic bicubic).
inline double keys_cubic(double x) {
  const double ax = std::abs(x);
  if (ax <= 1.0) return (1.5 * ax - 2.5) * ax * ax + 1.0;
  if (ax < 2.0) return ((-0.5 * ax + 2.5) * ax - 4.0) * ax + 2.0;
  return 0.0;
}

namespace detail {

// Per-output-pixel source taps and weights for one axis, matching the
// reference resizer's conventions: output center j maps to source
// coordinate (j+0.5)/scale-0.5; when shrinking, the kernel is widened by
// 1/scale (antialiasing); weights are renormalized to sum 1; out-of-range
// taps fold back symmetrically.
struct AxisContrib {
  int taps = 0;
  std::vector<int> index;      // [out * taps], folded into [0, in)
  std::vector<double> weight;  // [out * taps], rows sum to 1
};

inline AxisContrib axis_contributions(int in, int out) {
  const double scale = static_cast<double>(out) / in;
  const bool shrink = scale < 1.0;
  const double width = shrink ? 4.0 / scale : 4.0;
  AxisContrib c;
  c.taps = static_cast<int>(std::ceil(width)) + 2;
  c.index.resize(static_cast<std::size_t>(out) * c.taps);
  c.weight.resize(static_cast<std::size_t>(out) * c.taps);
  for (int j = 0; j < out; ++j) {
    const double u = (j + 0.5) / scale - 0.5;
    const int left = static_cast<int>(std::floor(u - width / 2.0));
    double sum = 0.0;
    for (int t = 0; t < c.taps; ++t) {
      const double x = u - (left + t);
      const double w = shrink ? scale * keys_cubic(scale * x) : keys_cubic(x);
      c.weight[static_cast<std::size_t>(j) * c.taps + t] = w;
      sum += w;
    }
    for (int t = 0; t < c.taps; ++t) {
      c.weight[static_cast<std::size_t>(j) * c.taps + t] /= sum;
      // Symmetric fold: ... 2,1,0 | 0,1,...,n-1 | n-1,n-2 ...
      int idx = left + t;
      const int period = 2 * in;
      idx = ((idx % period) + period) % period;
      if (idx >= in) idx = period - 1 - idx;
      c.index[static_cast<std::size_t>(j) * c.taps + t] = idx;
    }
  }
  return c;
}

}  // namespace detail

// Separable cubic-convolution resampling (height pass then width pass),
// accumulating in double.
inline Image bicubic_resize(const Image& img, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) {
    throw InputError("bicubic_resize: output dims must be >= 1");
  }
  const detail::AxisContrib ch = detail::axis_contributions(img.h, out_h);
  const detail::AxisContrib cw = detail::axis_contributions(img.w, out_w);
  Image out(img.c, out_h, out_w);
  std::vector<double> mid(static_cast<std::size_t>(out_h) * img.w);
  for (int ci = 0; ci < img.c; ++ci) {
    const float* src = img.plane(ci);
    for (int y = 0; y < out_h; ++y) {
      const int* idx = ch.index.data() + static_cast<std::size_t>(y) * ch.taps;
      const double* wt =
          ch.weight.data() + static_cast<std::size_t>(y) * ch.taps;
      for (int x = 0; x < img.w; ++x) {
        double acc = 0.0;
        for (int t = 0; t < ch.taps; ++t) {
          acc += wt[t] * src[static_cast<std::size_t>(idx[t]) * img.w + x];
        }
        mid[static_cast<std::size_t>(y) * img.w + x] = acc;
      }
    }
    float* dst = out.plane(ci);
    for (int y = 0; y < out_h; ++y) {
      const double* row = mid.data() + static_cast<std::size_t>(y) * img.w;
      for (int x = 0; x < out_w; ++x) {
        const int* idx =
            cw.index.data() + static_cast<std::size_t>(x) * cw.taps;
        const double* wt =
            cw.weight.data() + static_cast<std::size_t>(x) * cw.taps;
        double acc = 0.0;
        for (int t = 0; t < cw.taps; ++t) acc += wt[t] * row[idx[t]];
        dst[static_cast<std::size_t>(y) * out_w + x] = static_cast<float>(acc);
      }
    }
  }
  return out;
}

}  // namespace rdn
