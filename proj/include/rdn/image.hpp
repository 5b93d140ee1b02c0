#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "rdn/tensor.hpp"

namespace rdn {

// Planar floating-point image, values nominally in [0,1] (additive noise may
// push outside; clamping happens only at file write). c is 1 (gray) or 3 (RGB).
struct Image {
  int c = 0, h = 0, w = 0;
  std::vector<float> data;

  Image() = default;
  Image(int c_, int h_, int w_) : c(c_), h(h_), w(w_) {
    if (c_ != 1 && c_ != 3) {
      throw DimensionError("Image: channel count must be 1 or 3, got " +
                           std::to_string(c_));
    }
    if (h_ < 1 || w_ < 1) throw DimensionError("Image: dims must be positive");
    data.assign(static_cast<std::size_t>(c_) * h_ * w_, 0.0f);
  }

  bool is_gray() const { return c == 1; }

  std::size_t plane_size() const { return static_cast<std::size_t>(h) * w; }

  float* plane(int ci) { return data.data() + ci * plane_size(); }
  const float* plane(int ci) const { return data.data() + ci * plane_size(); }

  float& at(int ci, int y, int x) {
    return data[(static_cast<std::size_t>(ci) * h + y) * w + x];
  }
  const float& at(int ci, int y, int x) const {
    return data[(static_cast<std::size_t>(ci) * h + y) * w + x];
  }

  bool all_finite() const {
    for (float v : data) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }
};

inline Tensor<float> image_to_tensor(const Image& img) {
  Tensor<float> t(1, img.c, img.h, img.w);
  t.data = img.data;
  return t;
}

inline Image tensor_to_image(const Tensor<float>& t, int ni = 0) {
  if (t.c != 1 && t.c != 3) {
    throw DimensionError("tensor_to_image: channel count must be 1 or 3");
  }
  Image img(t.c, t.h, t.w);
  const std::size_t sz = img.data.size();
  std::copy(t.data.begin() + ni * sz, t.data.begin() + (ni + 1) * sz,
            img.data.begin());
  return img;
}

// 8-bit quantization: scale by 255, round half away from zero, clamp.
inline std::uint8_t quantize8(float v) {
  const float s = v * 255.0f;
  const float r = std::round(s);  // rounds halves away from zero
  if (r <= 0.0f) return 0;
  if (r >= 255.0f) return 255;
  return static_cast<std::uint8_t>(r);
}

inline Image quantize_image(const Image& img) {
  Image out(img.c, img.h, img.w);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    out.data[i] = static_cast<float>(quantize8(img.data[i])) / 255.0f;
  }
  return out;
}

// Crops to the top-left region whose sides are divisible by `modulus`.
inline Image crop_to_multiple(const Image& img, int modulus) {
  if (modulus < 1) throw InputError("crop_to_multiple: modulus must be >= 1");
  const int nh = (img.h / modulus) * modulus;
  const int nw = (img.w / modulus) * modulus;
  if (nh < 1 || nw < 1) {
    throw InputError("crop_to_multiple: image smaller than modulus " +
                     std::to_string(modulus));
  }
  if (nh == img.h && nw == img.w) return img;
  Image out(img.c, nh, nw);
  for (int ci = 0; ci < img.c; ++ci) {
    for (int y = 0; y < nh; ++y) {
      const float* src = img.plane(ci) + static_cast<std::size_t>(y) * img.w;
      std::copy(src, src + nw,
                out.plane(ci) + static_cast<std::size_t>(y) * nw);
    }
  }
  return out;
}

}  // namespace rdn
