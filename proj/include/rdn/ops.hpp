#pragma once

#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "rdn/tensor.hpp"

namespace rdn {

// Weights of one 2-D convolution layer. Kernel layout is
// [out_ch][in_ch][kh][kw], contiguous; cross-correlation convention (no
// kernel flip), stride 1 everywhere in this codebase.
template <typename T>
struct ConvWeights {
  int out_ch = 0, in_ch = 0, kh = 0, kw = 0;
  std::vector<T> kernel;
  std::vector<T> bias;

  ConvWeights() = default;

  ConvWeights(int out, int in, int kh_, int kw_)
      : out_ch(out), in_ch(in), kh(kh_), kw(kw_) {
    if (out < 1 || in < 1 || kh_ < 1 || kw_ < 1) {
      throw DimensionError("ConvWeights: dims must be positive");
    }
    kernel.assign(static_cast<std::size_t>(out) * in * kh_ * kw_, T(0));
    bias.assign(static_cast<std::size_t>(out), T(0));
  }

  std::size_t scalar_count() const { return kernel.size() + bias.size(); }

  bool same_dims(const ConvWeights& o) const {
    return out_ch == o.out_ch && in_ch == o.in_ch && kh == o.kh && kw == o.kw;
  }

  T& at(int o, int i, int y, int x) {
    return kernel[((static_cast<std::size_t>(o) * in_ch + i) * kh + y) * kw + x];
  }
  const T& at(int o, int i, int y, int x) const {
    return kernel[((static_cast<std::size_t>(o) * in_ch + i) * kh + y) * kw + x];
  }

  bool all_finite() const {
    for (const T& v : kernel) {
      if (!std::isfinite(static_cast<double>(v))) return false;
    }
    for (const T& v : bias) {
      if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
  }

  template <typename U>
  ConvWeights<U> cast() const {
    ConvWeights<U> out(out_ch, in_ch, kh, kw);
    for (std::size_t i = 0; i < kernel.size(); ++i) {
      out.kernel[i] = static_cast<U>(kernel[i]);
    }
    for (std::size_t i = 0; i < bias.size(); ++i) {
      out.bias[i] = static_cast<U>(bias[i]);
    }
    return out;
  }
};

// C[M,N] += A[M,K] * B[K,N]. Plain saxpy-ordered loops; the j loop
// autovectorizes and the C row stays hot across k.
template <typename T>
void gemm_nn(int m, int n, int k, const T* a, const T* b, T* c) {
  for (int i = 0; i < m; ++i) {
    const T* arow = a + static_cast<std::size_t>(i) * k;
    T* crow = c + static_cast<std::size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const T av = arow[p];
      const T* brow = b + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[M,N] += A[M,K] * B[N,K]^T (dot products along K).
template <typename T>
void gemm_nt(int m, int n, int k, const T* a, const T* b, T* c) {
  for (int i = 0; i < m; ++i) {
    const T* arow = a + static_cast<std::size_t>(i) * k;
    T* crow = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const T* brow = b + static_cast<std::size_t>(j) * k;
      T acc = T(0);
      for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
      crow[j] += acc;
    }
  }
}

// C[M,N] += A[K,M]^T * B[K,N].
template <typename T>
void gemm_tn(int m, int n, int k, const T* a, const T* b, T* c) {
  for (int p = 0; p < k; ++p) {
    const T* arow = a + static_cast<std::size_t>(p) * m;
    const T* brow = b + static_cast<std::size_t>(p) * n;
    for (int i = 0; i < m; ++i) {
      const T av = arow[i];
      T* crow = c + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// Unfolds one sample (c,h,w) into a (c*kh*kw, oh*ow) matrix for zero-padded
// stride-1 convolution. col must hold that many elements.
template <typename T>
void im2col(const T* src, int c, int h, int w, int kh, int kw, int pad,
            int oh, int ow, T* col) {
  for (int ci = 0; ci < c; ++ci) {
    const T* chan = src + static_cast<std::size_t>(ci) * h * w;
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        T* row = col + ((static_cast<std::size_t>(ci) * kh + ky) * kw + kx) *
                           oh * ow;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy + ky - pad;
          T* dst = row + static_cast<std::size_t>(oy) * ow;
          if (iy < 0 || iy >= h) {
            std::memset(dst, 0, sizeof(T) * ow);
            continue;
          }
          const T* srow = chan + static_cast<std::size_t>(iy) * w;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox + kx - pad;
            dst[ox] = (ix < 0 || ix >= w) ? T(0) : srow[ix];
          }
        }
      }
    }
  }
}

// Scatter-adds a column matrix back onto the (c,h,w) sample. Inverse of the
// im2col gather, used for input gradients.
template <typename T>
void col2im_add(const T* col, int c, int h, int w, int kh, int kw, int pad,
                int oh, int ow, T* dst) {
  for (int ci = 0; ci < c; ++ci) {
    T* chan = dst + static_cast<std::size_t>(ci) * h * w;
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        const T* row = col + ((static_cast<std::size_t>(ci) * kh + ky) * kw +
                              kx) *
                                 oh * ow;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy + ky - pad;
          if (iy < 0 || iy >= h) continue;
          T* drow = chan + static_cast<std::size_t>(iy) * w;
          const T* srow = row + static_cast<std::size_t>(oy) * ow;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox + kx - pad;
            if (ix < 0 || ix >= w) continue;
            drow[ix] += srow[ox];
          }
        }
      }
    }
  }
}

// Zero-padded stride-1 convolution, out[n,o] = bias[o] + sum_i x[n,i] * K[o,i].
// 1x1 kernels skip the im2col staging and multiply the input planes directly.
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const ConvWeights<T>& w, int pad) {
  if (x.c != w.in_ch) {
    throw DimensionError("conv2d_forward: input has " + std::to_string(x.c) +
                         " channels, weights expect " + std::to_string(w.in_ch));
  }
  if (pad < 0) throw DimensionError("conv2d_forward: negative padding");
  const int oh = x.h + 2 * pad - w.kh + 1;
  const int ow = x.w + 2 * pad - w.kw + 1;
  if (oh < 1 || ow < 1) {
    throw DimensionError("conv2d_forward: kernel " + std::to_string(w.kh) +
                         "x" + std::to_string(w.kw) + " does not fit input " +
                         x.dims_string() + " with pad " + std::to_string(pad));
  }
  Tensor<T> out(x.n, w.out_ch, oh, ow);
  const int pixels = oh * ow;
  const int kdim = w.in_ch * w.kh * w.kw;
  const bool pointwise = (w.kh == 1 && w.kw == 1 && pad == 0);
  std::vector<T> col;
  if (!pointwise) col.resize(static_cast<std::size_t>(kdim) * pixels);
  for (int ni = 0; ni < x.n; ++ni) {
    const T* src = x.plane(ni, 0);
    const T* mat = src;
    if (!pointwise) {
      im2col(src, x.c, x.h, x.w, w.kh, w.kw, pad, oh, ow, col.data());
      mat = col.data();
    }
    for (int o = 0; o < w.out_ch; ++o) {
      T* dst = out.plane(ni, o);
      const T b = w.bias[o];
      for (int p = 0; p < pixels; ++p) dst[p] = b;
    }
    gemm_nn(w.out_ch, pixels, kdim, w.kernel.data(), mat, out.plane(ni, 0));
  }
  return out;
}

template <typename T>
struct ConvGrads {
  Tensor<T> input;        // dL/dx, same dims as the forward input
  ConvWeights<T> weights; // dL/dkernel and dL/dbias
};

// Gradients of conv2d_forward. grad_out must have the forward output dims.
template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& x, const ConvWeights<T>& w,
                             const Tensor<T>& grad_out, int pad) {
  const int oh = x.h + 2 * pad - w.kh + 1;
  const int ow = x.w + 2 * pad - w.kw + 1;
  if (x.c != w.in_ch || grad_out.n != x.n || grad_out.c != w.out_ch ||
      grad_out.h != oh || grad_out.w != ow) {
    throw DimensionError("conv2d_backward: grad dims " +
                         grad_out.dims_string() + " do not match forward of " +
                         x.dims_string());
  }
  ConvGrads<T> g;
  g.input = Tensor<T>(x.n, x.c, x.h, x.w);
  g.weights = ConvWeights<T>(w.out_ch, w.in_ch, w.kh, w.kw);
  const int pixels = oh * ow;
  const int kdim = w.in_ch * w.kh * w.kw;
  const bool pointwise = (w.kh == 1 && w.kw == 1 && pad == 0);
  std::vector<T> col, gcol;
  if (!pointwise) {
    col.resize(static_cast<std::size_t>(kdim) * pixels);
    gcol.resize(static_cast<std::size_t>(kdim) * pixels);
  }
  for (int ni = 0; ni < x.n; ++ni) {
    const T* src = x.plane(ni, 0);
    const T* go = grad_out.plane(ni, 0);
    const T* mat = src;
    if (!pointwise) {
      im2col(src, x.c, x.h, x.w, w.kh, w.kw, pad, oh, ow, col.data());
      mat = col.data();
    }
    // dK += gout * col^T, accumulated over the batch.
    gemm_nt(w.out_ch, kdim, pixels, go, mat, g.weights.kernel.data());
    // dbias[o] += sum over pixels of gout[o].
    for (int o = 0; o < w.out_ch; ++o) {
      const T* row = grad_out.plane(ni, o);
      T acc = T(0);
      for (int p = 0; p < pixels; ++p) acc += row[p];
      g.weights.bias[o] += acc;
    }
    // dcol = K^T * gout, then fold back onto the input.
    if (pointwise) {
      gemm_tn(kdim, pixels, w.out_ch, w.kernel.data(), go, g.input.plane(ni, 0));
    } else {
      std::fill(gcol.begin(), gcol.end(), T(0));
      gemm_tn(kdim, pixels, w.out_ch, w.kernel.data(), go, gcol.data());
      col2im_add(gcol.data(), x.c, x.h, x.w, w.kh, w.kw, pad, oh, ow,
                 g.input.plane(ni, 0));
    }
  }
  return g;
}

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x) {
  Tensor<T> out(x.n, x.c, x.h, x.w);
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    out.data[i] = x.data[i] > T(0) ? x.data[i] : T(0);
  }
  return out;
}

// Gradient gate uses the pre-activation input; the derivative at exactly 0
// is taken as 0.
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& grad_out) {
  if (!x.same_dims(grad_out)) {
    throw DimensionError("relu_backward: dims " + grad_out.dims_string() +
                         " vs input " + x.dims_string());
  }
  Tensor<T> g(x.n, x.c, x.h, x.w);
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    g.data[i] = x.data[i] > T(0) ? grad_out.data[i] : T(0);
  }
  return g;
}

// Concatenates along the channel axis, first part's channels first.
template <typename T>
Tensor<T> concat_channels(std::span<const Tensor<T>> parts) {
  if (parts.empty()) throw DimensionError("concat_channels: no parts");
  int total_c = 0;
  for (const Tensor<T>& p : parts) {
    if (p.n != parts[0].n || p.h != parts[0].h || p.w != parts[0].w) {
      throw DimensionError("concat_channels: part dims " + p.dims_string() +
                           " disagree with " + parts[0].dims_string());
    }
    total_c += p.c;
  }
  Tensor<T> out(parts[0].n, total_c, parts[0].h, parts[0].w);
  for (int ni = 0; ni < out.n; ++ni) {
    int co = 0;
    for (const Tensor<T>& p : parts) {
      std::memcpy(out.plane(ni, co), p.plane(ni, 0),
                  sizeof(T) * p.c * p.plane_size());
      co += p.c;
    }
  }
  return out;
}

template <typename T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& parts) {
  return concat_channels(std::span<const Tensor<T>>(parts));
}

// Splits a concatenated gradient back into per-part gradients; exact inverse
// of the concat_channels layout.
template <typename T>
std::vector<Tensor<T>> split_channels(const Tensor<T>& x,
                                      const std::vector<int>& sizes) {
  int total = 0;
  for (int s : sizes) {
    if (s < 1) throw DimensionError("split_channels: sizes must be positive");
    total += s;
  }
  if (total != x.c) {
    throw DimensionError("split_channels: sizes sum to " +
                         std::to_string(total) + ", tensor has " +
                         std::to_string(x.c) + " channels");
  }
  std::vector<Tensor<T>> out;
  out.reserve(sizes.size());
  int co = 0;
  for (int s : sizes) {
    Tensor<T> part(x.n, s, x.h, x.w);
    for (int ni = 0; ni < x.n; ++ni) {
      std::memcpy(part.plane(ni, 0), x.plane(ni, co),
                  sizeof(T) * s * x.plane_size());
    }
    co += s;
    out.push_back(std::move(part));
  }
  return out;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  if (!a.same_dims(b)) {
    throw DimensionError("add: dims " + a.dims_string() + " vs " +
                         b.dims_string());
  }
  Tensor<T> out(a.n, a.c, a.h, a.w);
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    out.data[i] = a.data[i] + b.data[i];
  }
  return out;
}

template <typename T>
void add_inplace(Tensor<T>& dst, const Tensor<T>& src) {
  if (!dst.same_dims(src)) {
    throw DimensionError("add_inplace: dims " + dst.dims_string() + " vs " +
                         src.dims_string());
  }
  for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

// Rearranges (n, c*r^2, h, w) into (n, c, h*r, w*r). Output pixel (y, x) of
// channel k reads input channel k*r^2 + (y mod r)*r + (x mod r) at
// (y div r, x div r).
template <typename T>
Tensor<T> pixel_shuffle(const Tensor<T>& x, int r) {
  if (r < 1) throw DimensionError("pixel_shuffle: factor must be positive");
  if (x.c % (r * r) != 0) {
    throw DimensionError("pixel_shuffle: " + std::to_string(x.c) +
                         " channels not divisible by r^2 = " +
                         std::to_string(r * r));
  }
  const int oc = x.c / (r * r);
  Tensor<T> out(x.n, oc, x.h * r, x.w * r);
  for (int ni = 0; ni < x.n; ++ni) {
    for (int k = 0; k < oc; ++k) {
      T* dst = out.plane(ni, k);
      for (int sy = 0; sy < r; ++sy) {
        for (int sx = 0; sx < r; ++sx) {
          const T* src = x.plane(ni, k * r * r + sy * r + sx);
          for (int iy = 0; iy < x.h; ++iy) {
            T* drow = dst + (static_cast<std::size_t>(iy) * r + sy) * out.w + sx;
            const T* srow = src + static_cast<std::size_t>(iy) * x.w;
            for (int ix = 0; ix < x.w; ++ix) drow[static_cast<std::size_t>(ix) * r] = srow[ix];
          }
        }
      }
    }
  }
  return out;
}

// Exact inverse permutation of pixel_shuffle; also serves as its gradient.
template <typename T>
Tensor<T> pixel_unshuffle(const Tensor<T>& x, int r) {
  if (r < 1) throw DimensionError("pixel_unshuffle: factor must be positive");
  if (x.h % r != 0 || x.w % r != 0) {
    throw DimensionError("pixel_unshuffle: spatial dims " + x.dims_string() +
                         " not divisible by " + std::to_string(r));
  }
  const int ih = x.h / r, iw = x.w / r;
  Tensor<T> out(x.n, x.c * r * r, ih, iw);
  for (int ni = 0; ni < x.n; ++ni) {
    for (int k = 0; k < x.c; ++k) {
      const T* src = x.plane(ni, k);
      for (int sy = 0; sy < r; ++sy) {
        for (int sx = 0; sx < r; ++sx) {
          T* dst = out.plane(ni, k * r * r + sy * r + sx);
          for (int iy = 0; iy < ih; ++iy) {
            const T* srow = src + (static_cast<std::size_t>(iy) * r + sy) * x.w + sx;
            T* drow = dst + static_cast<std::size_t>(iy) * iw;
            for (int ix = 0; ix < iw; ++ix) drow[ix] = srow[static_cast<std::size_t>(ix) * r];
          }
        }
      }
    }
  }
  return out;
}

}  // namespace rdn
