#pragma once

// Explicit transition matrices of the single-site sampler on tiny boxes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "sos/height_field.hpp"
#include "sos/sampler.hpp"

namespace sos::markov {

using Matrix = std::vector<std::vector<double>>;

/// Transition matrix of the single-site update at `site` over the states of
/// `exact`, built from the sampler's own kernel.
inline Matrix site_transition_matrix(const ExactDistribution& exact, const SiteKernel& kernel,
                                     int site) {
  const std::size_t m = exact.size();
  Matrix p(m, std::vector<double>(m, 0.0));
  for (std::uint64_t i = 0; i < m; ++i) {
    const HeightField f = exact.state(i);
    const int n = f.n();
    const int x = site % n, y = site / n;
    const std::int64_t v = volume(f);
    double stay = 1.0;
    for (int delta : {-1, 1}) {
      const double q = kernel.move_probability(f, x, y, delta, v);
      if (q == 0.0) continue;
      HeightField g = f;
      g(x, y) += delta;
      const auto j = exact.index_of(g);
      if (!j) continue;  // outside the truncated cube: treated as rejected
      p[i][*j] += q;
      stay -= q;
    }
    p[i][i] += stay;
  }
  return p;
}

inline Matrix multiply(const Matrix& a, const Matrix& b) {
  const std::size_t m = a.size();
  Matrix c(m, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t k = 0; k < m; ++k) {
      if (a[i][k] == 0.0) continue;
      for (std::size_t j = 0; j < m; ++j) c[i][j] += a[i][k] * b[k][j];
    }
  return c;
}

/// max over (x, y) of |pi(x) P(x, y) - pi(y) P(y, x)|.
inline double detailed_balance_defect(const ExactDistribution& exact, const Matrix& p) {
  double worst = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < p.size(); ++j)
      worst = std::max(worst, std::abs(exact[i] * p[i][j] - exact[j] * p[j][i]));
  return worst;
}

/// max over y of |(pi P)(y) - pi(y)|.
inline double stationarity_defect(const ExactDistribution& exact, const Matrix& p) {
  double worst = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += exact[i] * p[i][j];
    worst = std::max(worst, std::abs(s - exact[j]));
  }
  return worst;
}

}  // namespace sos::markov
