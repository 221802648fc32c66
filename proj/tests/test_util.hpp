#pragma once

#include <random>

#include "sos/height_field.hpp"
#include "sos/sampler.hpp"

namespace sos::testing_util {

inline HeightField random_field(Rng& rng, int n, Height lo, Height hi) {
  std::vector<Height> h(static_cast<std::size_t>(n) * n);
  const auto span = static_cast<std::uint64_t>(hi - lo + 1);
  for (auto& v : h) v = lo + static_cast<Height>(rng() % span);
  return HeightField(n, std::move(h), 0);
}

/// One of the 8 symmetries of the square: bit 0 transposes, bits 1-2 flip axes.
inline HeightField apply_symmetry(const HeightField& f, int sym) {
  const int n = f.n();
  HeightField g(n, 0, f.boundary());
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      int u = x, v = y;
      if (sym & 1) std::swap(u, v);
      if (sym & 2) u = n - 1 - u;
      if (sym & 4) v = n - 1 - v;
      g(u, v) = f(x, y);
    }
  }
  return g;
}

/// Field equal to `base` with the axis-aligned block [x0, x0+w) x [y0, y0+h) set to `value`.
inline HeightField with_block(HeightField f, int x0, int y0, int w, int h, Height value) {
  for (int y = y0; y < y0 + h; ++y)
    for (int x = x0; x < x0 + w; ++x) f(x, y) = value;
  return f;
}

}  // namespace sos::testing_util
