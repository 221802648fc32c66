#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include <boost/math/constants/constants.hpp>

#include "sos/errors.hpp"
#include "sos/sampler.hpp"

namespace sos {

struct YoungDiagram {
  std::vector<int> parts;  // nonincreasing, positive
  std::int64_t size = 0;

  YoungDiagram() = default;
  explicit YoungDiagram(std::vector<int> p) : parts(std::move(p)) {
    detail::require(std::is_sorted(parts.rbegin(), parts.rend()), "YoungDiagram: parts must be nonincreasing");
    detail::require(parts.empty() || parts.back() >= 1, "YoungDiagram: parts must be positive");
    size = std::accumulate(parts.begin(), parts.end(), std::int64_t{0});
  }

  friend bool operator==(const YoungDiagram&, const YoungDiagram&) = default;
  friend auto operator<=>(const YoungDiagram& a, const YoungDiagram& b) { return a.parts <=> b.parts; }
};

/// pi / sqrt(6), the rate in exp(-pi u / sqrt 6) + exp(-pi v / sqrt 6) = 1.
inline constexpr double kVershikRate = 1.2825498301618640;

/// Solves exp(-c u) + exp(-c v) = 1 for v, c = pi / sqrt(6).
inline double vershik_curve(double u) {
  detail::require(u > 0.0, "vershik_curve: u must be positive");
  const double cu = kVershikRate * u;
  // 1 - exp(-cu), computed without cancellation at either end.
  const double log_gap = cu < std::log(2.0) ? std::log(-std::expm1(-cu)) : std::log1p(-std::exp(-cu));
  return -log_gap / kVershikRate;
}

/// The point where the curve meets the diagonal u = v.
inline double vershik_symmetric_point() { return std::log(2.0) / kVershikRate; }

/// Uniform random partition of n. Boltzmann multiplicities Z_k ~ Geom(1 - x^k)
/// for k >= 2 at x = exp(-pi / sqrt(6 n)); Z_1 is then forced to n - sum k Z_k
/// and kept with probability x^{Z_1}, which is P(Z_1 = z) / P(Z_1 = 0). The
/// accepted multiplicities are exactly uniform over partitions of n.
inline YoungDiagram sample_partition(int n, Rng& rng) {
  detail::require(n >= 1, "sample_partition: n must be positive");
  const double log_x = -kVershikRate / std::sqrt(static_cast<double>(n));
  const double x = std::exp(log_x);
  std::vector<std::int64_t> mult(static_cast<std::size_t>(n) + 1, 0);
  for (;;) {
    std::fill(mult.begin(), mult.end(), 0);
    std::int64_t total = 0;
    bool overflow = false;
    double xk = x;
    for (int k = 2; k <= n; ++k) {
      xk *= x;  // x^k
      const double u = detail::uniform01(rng);
      if (u >= xk) continue;  // Z_k = 0
      // P(Z_k >= j) = x^{k j}; invert with a fresh uniform conditioned on Z_k >= 1.
      const double w = 1.0 - detail::uniform01(rng);
      const auto z = 1 + static_cast<std::int64_t>(std::floor(std::log(w) / (k * log_x)));
      mult[static_cast<std::size_t>(k)] = z;
      total += z * k;
      if (total > n) {
        overflow = true;
        break;
      }
    }
    if (overflow) continue;
    const std::int64_t ones = n - total;
    if (!(detail::uniform01(rng) < std::exp(static_cast<double>(ones) * log_x))) continue;
    mult[1] = ones;
    std::vector<int> parts;
    for (int k = n; k >= 1; --k)
      for (std::int64_t j = 0; j < mult[static_cast<std::size_t>(k)]; ++j) parts.push_back(k);
    return YoungDiagram(std::move(parts));
  }
}

/// All partitions of n in reverse lexicographic order.
inline std::vector<YoungDiagram> enumerate_partitions(int n) {
  detail::require(n >= 1 && n <= 60, "enumerate_partitions: n must lie in 1..60");
  std::vector<YoungDiagram> out;
  std::vector<int> cur;
  auto rec = [&](auto&& self, int left, int cap) -> void {
    if (left == 0) {
      out.emplace_back(cur);
      return;
    }
    for (int p = std::min(left, cap); p >= 1; --p) {
      cur.push_back(p);
      self(self, left - p, p);
      cur.pop_back();
    }
  };
  rec(rec, n, n);
  return out;
}

/// Signed offset t with (u + t, v + t) on the curve.
inline double diagonal_offset_to_curve(double u, double v) {
  auto f = [](double a, double b) {
    return std::exp(-kVershikRate * a) + std::exp(-kVershikRate * b) - 1.0;
  };
  double lo = -std::min(u, v);  // f(lo) > 0: one coordinate sits on an axis
  double hi = std::max(1.0, lo + 1.0);
  while (f(u + hi, v + hi) > 0.0) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (f(u + mid, v + mid) > 0.0) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

/// Sup over the boundary vertices of the diagram, rescaled by size^{-1/2}, of
/// the Euclidean distance to the limit curve measured along (1, 1).
inline double profile_deviation(const YoungDiagram& d) {
  detail::require(d.size >= 1, "profile_deviation: empty diagram");
  const double scale = 1.0 / std::sqrt(static_cast<double>(d.size));
  double worst = 0.0;
  for (std::size_t i = 0; i < d.parts.size(); ++i) {
    const double x = d.parts[i] * scale;
    for (double y : {static_cast<double>(i) * scale, static_cast<double>(i + 1) * scale})
      worst = std::max(worst, std::abs(diagonal_offset_to_curve(x, y)) * std::sqrt(2.0));
  }
  // The last vertical run ends on the axis at (0, rows).
  const double rows = static_cast<double>(d.parts.size()) * scale;
  worst = std::max(worst, std::abs(diagonal_offset_to_curve(0.0, rows)) * std::sqrt(2.0));
  return worst;
}

// Monolayer equation ------------------------------------------------------------

/// zeta(3) from the alternating central-binomial series
/// (5/2) sum_{k>=1} (-1)^{k+1} / (k^3 C(2k, k)), summed to the precision of Real.
template <class Real = double>
Real zeta3() {
  using std::abs;
  Real sum = 0;
  Real binom = 1;  // C(2k, k)
  const Real eps = std::numeric_limits<Real>::epsilon();
  for (int k = 1; k < 10'000; ++k) {
    binom = binom * Real(2 * k) * Real(2 * k - 1) / (Real(k) * Real(k));
    Real term = Real(1) / (Real(k) * Real(k) * Real(k) * binom);
    if (k % 2 == 0) term = -term;
    sum += term;
    if (abs(term) < eps * abs(sum) / 16) break;
  }
  return Real(5) / 2 * sum;
}

/// 2^11 3^3 zeta(3)^2 / pi^6.
template <class Real = double>
Real monolayer_constant() {
  const Real z = zeta3<Real>();
  const Real pi = boost::math::constants::pi<Real>();
  const Real pi3 = pi * pi * pi;
  return Real(2048) * Real(27) * z * z / (pi3 * pi3);
}

template <class Real = double>
Real monolayer_residual(const Real& k, const Real& x) {
  const Real gap = k - 4 * x;
  return gap * gap - monolayer_constant<Real>() * x * x * x;
}

/// Root x in (0, k/4) of (k - 4x)^2 = c x^3, by bisection to the working
/// precision of Real.
template <class Real = double>
Real solve_monolayer_x(const Real& k) {
  using std::abs;
  detail::require(k > 0, "solve_monolayer_x: k must be positive");
  const Real c = monolayer_constant<Real>();
  auto g = [&](const Real& x) {
    const Real gap = k - 4 * x;
    return gap * gap - c * x * x * x;
  };
  Real lo = 0;
  Real hi = k / 4;
  detail::require(g(lo) > 0 && g(hi) < 0, "solve_monolayer_x: no sign change on (0, k/4)");
  const Real eps = std::numeric_limits<Real>::epsilon();
  for (int it = 0; it < 2000; ++it) {
    const Real mid = (lo + hi) / 2;
    if (mid <= lo || mid >= hi) break;
    if (g(mid) > 0) lo = mid;
    else hi = mid;
    if (hi - lo <= eps * hi) break;
  }
  return abs(g(lo)) < abs(g(hi)) ? lo : hi;
}

/// K_n = n^3 + k (k - 1) + 1 with k = floor(mu n).
inline std::int64_t quasicube_volume(std::int64_t n, double mu) {
  detail::require(n >= 1, "quasicube_volume: n must be positive");
  detail::require(mu > 0.0 && mu < 1.0, "quasicube_volume: mu must lie in (0, 1)");
  const auto k = static_cast<std::int64_t>(std::floor(mu * static_cast<double>(n)));
  return n * n * n + k * (k - 1) + 1;
}

}  // namespace sos
