#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "sos/errors.hpp"

namespace sos {

struct IsoDecomposition {
  std::int64_t side = 0;       // L: largest integer with L^2 <= V
  std::int64_t remainder = 0;  // r = V - L^2, 0 <= r <= 2L
  friend bool operator==(const IsoDecomposition&, const IsoDecomposition&) = default;
};

inline std::int64_t isqrt(std::int64_t v) {
  auto r = static_cast<std::int64_t>(std::sqrt(static_cast<double>(v)));
  while (r * r > v) --r;
  while ((r + 1) * (r + 1) <= v) ++r;
  return r;
}

inline IsoDecomposition iso_decompose(std::int64_t v) {
  detail::require(v >= 1, "iso_decompose: volume must be positive");
  const std::int64_t l = isqrt(v);
  return {l, v - l * l};
}

/// Shortest closed lattice path enclosing v unit squares; p(0) = 0.
inline std::int64_t min_perimeter(std::int64_t v) {
  detail::require(v >= 0, "min_perimeter: negative volume");
  if (v == 0) return 0;
  const auto [l, r] = iso_decompose(v);
  if (r == 0) return 4 * l;
  if (r <= l) return 4 * l + 2;
  return 4 * l + 4;
}

/// The two-sided square-root bound 4 sqrt(v) <= p(v) < 4 sqrt(v) + 4,
/// decided in integers: 16 v <= p^2 and p - 4 < 4 sqrt(v).
inline bool sqrt_bounds_check(std::int64_t v) {
  detail::require(v >= 1, "sqrt_bounds_check: volume must be positive");
  const std::int64_t p = min_perimeter(v);
  const bool lower = 16 * v <= p * p;
  const bool upper = p - 4 < 0 || (p - 4) * (p - 4) < 16 * v;
  return lower && upper;
}

// Polyomino oracle ------------------------------------------------------------

/// Minimal boundary length of fixed polyominoes with v cells, v = 1..max_cells,
/// by exhaustive enumeration up to translation (Redelmeier's method).
class PolyominoOracle {
 public:
  static constexpr int kMaxCells = 12;

  explicit PolyominoOracle(int max_cells = kMaxCells) : max_cells_(max_cells) {
    detail::require(max_cells >= 1 && max_cells <= kMaxCells,
                    "polyomino oracle: cell count must lie in 1..12");
    best_.assign(static_cast<std::size_t>(max_cells) + 1, std::numeric_limits<int>::max());
    counts_.assign(static_cast<std::size_t>(max_cells) + 1, 0);
    run();
  }

  int min_perimeter(int v) const {
    detail::require(v >= 1 && v <= max_cells_, "polyomino oracle: v out of range");
    return best_[static_cast<std::size_t>(v)];
  }
  /// Number of fixed polyominoes with v cells.
  std::uint64_t count(int v) const { return counts_[static_cast<std::size_t>(v)]; }

 private:
  // Cells live on a strip: y >= 0, and on row 0 only x >= 0, so the origin is
  // the lowest-leftmost cell of every polyomino.
  static constexpr int kW = 2 * kMaxCells + 1;
  static constexpr int kH = kMaxCells + 1;

  static int id(int x, int y) { return (y + 1) * kW + (x + kMaxCells); }

  void run() {
    occupied_.assign(static_cast<std::size_t>(kW) * (kH + 2), 0);
    reached_.assign(occupied_.size(), 0);
    std::vector<int> untried{id(0, 0)};
    reached_[static_cast<std::size_t>(id(0, 0))] = 1;
    recurse(untried, 0, 0);
  }

  bool allowed(int x, int y) const {
    if (y < 0 || y > kMaxCells) return false;
    if (y == 0 && x < 0) return false;
    return x > -kW / 2 && x < kW / 2;
  }

  void recurse(std::vector<int> untried, int size, int perimeter) {
    while (!untried.empty()) {
      const int cell = untried.back();
      untried.pop_back();
      const int cx = cell % kW - kMaxCells;
      const int cy = cell / kW - 1;
      int shared = 0;
      static constexpr int dx[4] = {1, -1, 0, 0};
      static constexpr int dy[4] = {0, 0, 1, -1};
      for (int d = 0; d < 4; ++d)
        if (allowed(cx + dx[d], cy + dy[d]) && occupied_[static_cast<std::size_t>(id(cx + dx[d], cy + dy[d]))])
          ++shared;
      const int new_size = size + 1;
      const int new_perimeter = perimeter + 4 - 2 * shared;
      ++counts_[static_cast<std::size_t>(new_size)];
      auto& best = best_[static_cast<std::size_t>(new_size)];
      best = std::min(best, new_perimeter);
      if (new_size < max_cells_) {
        occupied_[static_cast<std::size_t>(cell)] = 1;
        std::vector<int> next = untried;
        std::vector<int> added;
        for (int d = 0; d < 4; ++d) {
          const int nx = cx + dx[d], ny = cy + dy[d];
          if (!allowed(nx, ny)) continue;
          const int nid = id(nx, ny);
          if (reached_[static_cast<std::size_t>(nid)]) continue;
          reached_[static_cast<std::size_t>(nid)] = 1;
          added.push_back(nid);
          next.push_back(nid);
        }
        recurse(std::move(next), new_size, new_perimeter);
        for (int nid : added) reached_[static_cast<std::size_t>(nid)] = 0;
        occupied_[static_cast<std::size_t>(cell)] = 0;
      }
    }
  }

  int max_cells_;
  std::vector<int> best_;
  std::vector<std::uint64_t> counts_;
  std::vector<char> occupied_;
  std::vector<char> reached_;
};

inline int min_perimeter_oracle(int v) {
  detail::require(v >= 1 && v <= PolyominoOracle::kMaxCells, "min_perimeter_oracle: v out of range");
  return PolyominoOracle(v).min_perimeter(v);
}

// Droplet transfer ------------------------------------------------------------

/// Two droplets V1 <= V2 in an n x n box and a transfer amount D, under the
/// size hypotheses rho n^2 <= D <= V1, V1 >= rho n^2, V2 <= n^2.
struct DropletTriple {
  std::int64_t v1 = 0;
  std::int64_t v2 = 0;
  std::int64_t d = 0;
  int n = 0;
  double rho = 0.0;

  bool hypotheses_hold() const {
    const double floor_area = rho * static_cast<double>(n) * n;
    const std::int64_t box = static_cast<std::int64_t>(n) * n;
    return n >= 1 && rho > 0.0 && rho < 1.0 && v1 >= 1 && v1 <= v2 && v2 <= box &&
           static_cast<double>(d) >= floor_area && d <= v1 && static_cast<double>(v1) >= floor_area;
  }
};

/// p(v1) + p(v2) - p(v1 - d) - p(v2 + d), with no hypothesis check.
inline std::int64_t raw_transfer_gain(std::int64_t v1, std::int64_t v2, std::int64_t d) {
  return min_perimeter(v1) + min_perimeter(v2) - min_perimeter(v1 - d) - min_perimeter(v2 + d);
}

/// Perimeter saved by moving d cells from the smaller droplet to the larger.
/// Throws when the triple is outside the size hypotheses.
inline std::int64_t transfer_gain(const DropletTriple& t) {
  detail::require(t.hypotheses_hold(), "transfer_gain: droplet hypotheses violated");
  return raw_transfer_gain(t.v1, t.v2, t.d);
}

struct TransferCertificate {
  int n = 0;
  double rho = 0.0;
  std::int64_t step = 0;
  std::uint64_t triples = 0;
  std::uint64_t negative = 0;      // triples with gain < 0
  std::uint64_t nonpositive = 0;   // triples with gain <= 0
  std::int64_t min_gain = 0;
  double kappa = 0.0;              // min over triples of gain / (p(v1) + p(v2))
  DropletTriple worst_gain;
  DropletTriple worst_kappa;
};

/// Scans the valid triples on a grid of step ceil(rho n^2 / 20) starting at
/// ceil(rho n^2); the top values (v = n^2, d = v1) are always included.
inline TransferCertificate certify_transfer(int n, double rho) {
  detail::require(n >= 1 && rho > 0.0 && rho < 1.0, "certify_transfer: bad (n, rho)");
  const std::int64_t box = static_cast<std::int64_t>(n) * n;
  const auto lo = static_cast<std::int64_t>(std::ceil(rho * static_cast<double>(box)));
  const auto step = static_cast<std::int64_t>(std::ceil(rho * static_cast<double>(box) / 20.0));
  std::vector<std::int64_t> grid;
  for (std::int64_t v = lo; v <= box; v += step) grid.push_back(v);
  if (grid.empty() || grid.back() != box) grid.push_back(box);

  TransferCertificate cert;
  cert.n = n;
  cert.rho = rho;
  cert.step = step;
  cert.min_gain = std::numeric_limits<std::int64_t>::max();
  cert.kappa = std::numeric_limits<double>::infinity();
  std::vector<std::int64_t> ds;
  for (std::int64_t v1 : grid) {
    ds.clear();
    for (std::int64_t d : grid)
      if (d <= v1) ds.push_back(d);
    if (ds.back() != v1) ds.push_back(v1);
    for (std::int64_t v2 : grid) {
      if (v2 < v1) continue;
      const std::int64_t base = min_perimeter(v1) + min_perimeter(v2);
      for (std::int64_t d : ds) {
        const DropletTriple t{v1, v2, d, n, rho};
        const std::int64_t g = transfer_gain(t);
        const double k = static_cast<double>(g) / static_cast<double>(base);
        ++cert.triples;
        if (g < 0) ++cert.negative;
        if (g <= 0) ++cert.nonpositive;
        if (g < cert.min_gain) {
          cert.min_gain = g;
          cert.worst_gain = t;
        }
        if (k < cert.kappa) {
          cert.kappa = k;
          cert.worst_kappa = t;
        }
      }
    }
  }
  return cert;
}

}  // namespace sos
