#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "rdn/errors.hpp"

namespace rdn {

// Dense 4-D array in NCHW layout, row-major, contiguous. T is float for
// production paths and double for gradient checking.
template <typename T>
struct Tensor {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<T> data;

  Tensor() = default;

  Tensor(int n_, int c_, int h_, int w_) : n(n_), c(c_), h(h_), w(w_) {
    if (n_ < 1 || c_ < 1 || h_ < 1 || w_ < 1) {
      throw DimensionError("Tensor: dims must be positive, got " +
                           dims_string(n_, c_, h_, w_));
    }
    data.assign(static_cast<std::size_t>(n_) * c_ * h_ * w_, T(0));
  }

  static std::string dims_string(int n, int c, int h, int w) {
    return "[" + std::to_string(n) + "," + std::to_string(c) + "," +
           std::to_string(h) + "," + std::to_string(w) + "]";
  }

  std::string dims_string() const { return dims_string(n, c, h, w); }

  std::size_t numel() const { return data.size(); }

  bool same_dims(const Tensor& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }

  std::size_t plane_size() const {
    return static_cast<std::size_t>(h) * w;
  }

  T* plane(int ni, int ci) {
    return data.data() + (static_cast<std::size_t>(ni) * c + ci) * plane_size();
  }
  const T* plane(int ni, int ci) const {
    return data.data() + (static_cast<std::size_t>(ni) * c + ci) * plane_size();
  }

  T& at(int ni, int ci, int y, int x) {
    return data[((static_cast<std::size_t>(ni) * c + ci) * h + y) * w + x];
  }
  const T& at(int ni, int ci, int y, int x) const {
    return data[((static_cast<std::size_t>(ni) * c + ci) * h + y) * w + x];
  }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }

  // True when every element is finite. Ops never introduce NaN or Inf from
  // finite inputs; tests and load paths assert this instead of every op
  // paying for a scan.
  bool all_finite() const {
    for (const T& v : data) {
      if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(n, c, h, w);
    for (std::size_t i = 0; i < data.size(); ++i) {
      out.data[i] = static_cast<U>(data[i]);
    }
    return out;
  }
};

}  // namespace rdn
