#pragma once

#include "rdn/tensor.hpp"

namespace rdn {

// The 8 dihedral transforms of an axis-aligned image, indexed 0..7 as
// k = rot * 2 + flip: an optional horizontal flip first, then rot
// quarter-turns clockwise. k = 0 is the identity.
inline constexpr int kDihedralCount = 8;

namespace detail {
// Maps output coordinates to source coordinates for one transform.
// Output dims are (oh, ow); source dims derived from the rotation.
struct DihedralMap {
  int rot, flip;
};
inline DihedralMap dihedral_decode(int k) {
  if (k < 0 || k >= kDihedralCount) {
    throw InputError("dihedral transform index must be in [0,8), got " +
                     std::to_string(k));
  }
  return {k / 2, k % 2};
}
}  // namespace detail

template <typename T>
Tensor<T> flip_horizontal(const Tensor<T>& x) {
  Tensor<T> out(x.n, x.c, x.h, x.w);
  for (int ni = 0; ni < x.n; ++ni) {
    for (int ci = 0; ci < x.c; ++ci) {
      const T* src = x.plane(ni, ci);
      T* dst = out.plane(ni, ci);
      for (int y = 0; y < x.h; ++y) {
        for (int xx = 0; xx < x.w; ++xx) {
          dst[static_cast<std::size_t>(y) * x.w + xx] =
              src[static_cast<std::size_t>(y) * x.w + (x.w - 1 - xx)];
        }
      }
    }
  }
  return out;
}

// One quarter-turn clockwise: out(y, x) = in(h_in - 1 - x, y).
template <typename T>
Tensor<T> rotate90_cw(const Tensor<T>& x) {
  Tensor<T> out(x.n, x.c, x.w, x.h);
  for (int ni = 0; ni < x.n; ++ni) {
    for (int ci = 0; ci < x.c; ++ci) {
      const T* src = x.plane(ni, ci);
      T* dst = out.plane(ni, ci);
      for (int y = 0; y < out.h; ++y) {
        for (int xx = 0; xx < out.w; ++xx) {
          dst[static_cast<std::size_t>(y) * out.w + xx] =
              src[static_cast<std::size_t>(x.h - 1 - xx) * x.w + y];
        }
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> dihedral_apply(const Tensor<T>& x, int k) {
  const auto m = detail::dihedral_decode(k);
  Tensor<T> out = m.flip ? flip_horizontal(x) : x;
  for (int r = 0; r < m.rot; ++r) out = rotate90_cw(out);
  return out;
}

// Exact inverse of dihedral_apply(k): undo the rotations, then the flip.
template <typename T>
Tensor<T> dihedral_unapply(const Tensor<T>& x, int k) {
  const auto m = detail::dihedral_decode(k);
  Tensor<T> out = x;
  for (int r = 0; r < (4 - m.rot) % 4; ++r) out = rotate90_cw(out);
  if (m.flip) out = flip_horizontal(out);
  return out;
}

// Index of the group inverse: dihedral_apply(x, dihedral_inverse(k)) undoes
// dihedral_apply(x, k). Reflections are involutions; pure rotations invert.
inline int dihedral_inverse(int k) {
  const auto m = detail::dihedral_decode(k);
  if (m.flip) return k;
  return ((4 - m.rot) % 4) * 2;
}

}  // namespace rdn
