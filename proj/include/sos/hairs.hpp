#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <vector>

#include "sos/errors.hpp"
#include "sos/height_field.hpp"
#include "sos/levelsets.hpp"

namespace sos {

enum class HairDirection { Up, Down };

inline const char* to_string(HairDirection d) { return d == HairDirection::Up ? "up" : "down"; }

/// A maximal chain of nested contours climbing above (up) or sinking below
/// (down) the facet level, one contour per unit of height.
struct Hair {
  HairDirection direction = HairDirection::Up;
  std::vector<Contour> contours;  // outermost first
  int length = 0;
};

namespace detail {

/// Contours of one step of a hair ladder, with a site -> contour map of
/// their (disjoint) interiors.
struct HairRung {
  std::vector<Contour> contours;
  std::vector<int> owner;  // site -> index into contours, or -1
  std::vector<int> parent; // contour -> index into the previous rung, or -1
};

inline HairRung make_rung(std::vector<Contour> contours, int n) {
  HairRung rung;
  rung.owner.assign(static_cast<std::size_t>(n) * n, -1);
  for (std::size_t i = 0; i < contours.size(); ++i)
    for (int s : interior_sites(contours[i], n)) rung.owner[static_cast<std::size_t>(s)] = static_cast<int>(i);
  rung.contours = std::move(contours);
  rung.parent.assign(rung.contours.size(), -1);
  return rung;
}

/// One site enclosed by the contour: the cell on the inner side of its first edge.
inline int representative_site(const Contour& c, int n) {
  const Vertex a = c.vertices[0];
  const Vertex b = c.vertices[1 % c.vertices.size()];
  int d = 0;
  if (b.x > a.x) d = 0;
  else if (b.y > a.y) d = 1;
  else if (b.x < a.x) d = 2;
  else d = 3;
  // Interior lies on the left of outer contours and on the right of holes.
  const int cx = a.x + (c.outer ? kLeftX[d] : kRightX[d]);
  const int cy = a.y + (c.outer ? kLeftY[d] : kRightY[d]);
  return cy * n + cx;
}

inline std::vector<char> interior_of_external(const LevelContours& lc) {
  std::vector<char> mask(static_cast<std::size_t>(lc.n) * lc.n, 0);
  for (const auto& c : lc.contours)
    if (c.external)
      for (int s : interior_sites(c, lc.n)) mask[static_cast<std::size_t>(s)] = 1;
  return mask;
}

inline void collect_chains(const std::vector<HairRung>& rungs, HairDirection dir,
                           const std::vector<char>& f2_interior, int n, std::vector<Hair>& out) {
  if (rungs.empty()) return;
  // children[k][i]: indices in rung k + 1 whose parent is contour i of rung k.
  std::vector<std::vector<std::vector<int>>> children(rungs.size());
  for (std::size_t k = 0; k < rungs.size(); ++k) {
    children[k].assign(rungs[k].contours.size(), {});
    if (k + 1 < rungs.size())
      for (std::size_t j = 0; j < rungs[k + 1].contours.size(); ++j)
        if (int p = rungs[k + 1].parent[j]; p >= 0)
          children[k][static_cast<std::size_t>(p)].push_back(static_cast<int>(j));
  }
  std::vector<int> path;
  auto emit = [&](auto&& self, std::size_t k, int i) -> void {
    path.push_back(i);
    const auto& kids = k + 1 < rungs.size() ? children[k][static_cast<std::size_t>(i)] : std::vector<int>{};
    if (kids.empty()) {
      Hair h;
      h.direction = dir;
      for (std::size_t r = 0; r < path.size(); ++r)
        h.contours.push_back(rungs[r].contours[static_cast<std::size_t>(path[r])]);
      h.length = static_cast<int>(path.size());
      out.push_back(std::move(h));
    } else {
      for (int j : kids) self(self, k + 1, j);
    }
    path.pop_back();
  };
  for (std::size_t i = 0; i < rungs[0].contours.size(); ++i) {
    bool inside = true;
    for (int s : interior_sites(rungs[0].contours[i], n))
      if (!f2_interior[static_cast<std::size_t>(s)]) { inside = false; break; }
    if (inside) emit(emit, 0, static_cast<int>(i));
  }
}

}  // namespace detail

/// Up-hairs: maximal chains of external contours of D(phi, L + i), i >= 1,
/// nested by inclusion. Down-hairs: maximal chains of the hole boundaries of
/// external sections of D(phi, L - i + 1), i >= 1, i.e. boundaries of the
/// depressions {phi <= L - i} enclosed by the facet. Every branch of a
/// branching excitation is reported as its own hair.
inline std::vector<Hair> extract_hairs(const HeightField& field, const ModelParams& params) {
  const int n = field.n();
  const int top = require_facet_level(field, params.a);
  const auto f2_interior = detail::interior_of_external(contours_of(field, top - 1));
  const LevelCounts counts(field);
  std::vector<Hair> hairs;

  std::vector<detail::HairRung> up;
  for (int l = top + 1; l <= counts.max_height(); ++l) {
    std::vector<Contour> ext;
    for (auto& c : contours_of(field, l).contours)
      if (c.external) ext.push_back(std::move(c));
    up.push_back(detail::make_rung(std::move(ext), n));
    if (up.size() > 1) {
      auto& rung = up.back();
      const auto& prev = up[up.size() - 2];
      for (std::size_t j = 0; j < rung.contours.size(); ++j)
        rung.parent[j] = prev.owner[static_cast<std::size_t>(detail::representative_site(rung.contours[j], n))];
    }
  }
  detail::collect_chains(up, HairDirection::Up, f2_interior, n, hairs);

  std::vector<detail::HairRung> down;
  for (int i = 1; top - i >= counts.min_height(); ++i) {
    const auto lc = contours_of(field, top - i + 1);
    std::vector<Contour> holes;
    for (const auto& c : lc.contours)
      if (!c.outer && lc.sections[static_cast<std::size_t>(c.section)].external) holes.push_back(c);
    down.push_back(detail::make_rung(std::move(holes), n));
    if (down.size() > 1) {
      auto& rung = down.back();
      const auto& prev = down[down.size() - 2];
      for (std::size_t j = 0; j < rung.contours.size(); ++j)
        rung.parent[j] = prev.owner[static_cast<std::size_t>(detail::representative_site(rung.contours[j], n))];
    }
  }
  detail::collect_chains(down, HairDirection::Down, f2_interior, n, hairs);
  return hairs;
}

/// max |phi_s - L| over sites enclosed by the external contours of F2.
inline int max_deviation_in_f2(const HeightField& field, const ModelParams& params) {
  const int l = require_facet_level(field, params.a);
  const auto inside = detail::interior_of_external(contours_of(field, l - 1));
  int best = 0;
  for (std::size_t s = 0; s < field.size(); ++s)
    if (inside[s]) best = std::max(best, std::abs(field[s] - l));
  return best;
}

inline int max_hair_length(const std::vector<Hair>& hairs) {
  int best = 0;
  for (const auto& h : hairs) best = std::max(best, h.length);
  return best;
}

// Scale sequences -------------------------------------------------------------

struct ScaleTable {
  int n = 0;
  double a = 0.0, c1 = 0.0, c2 = 0.0;
  std::vector<double> v_r;  // a N^2 / 2^r for r = 0..r_max + 1
  std::vector<double> h_r;  // r = 0..r_max + 1
  int r_max = 0;            // R_N: largest r with v_r >= 1
  double r_prime = 0.0;     // R'_N = log2(a N^2 / (C1 (ln N)^2))
  double h_sum = 0.0;       // sum of h_r for r = 0..R_N
  double c3 = 0.0;          // h_sum / ln N
  double h_at_r_prime = 0.0;// sqrt(a / C1) C2
};

/// C1 such that a near-square contour of area C1 (ln N)^2 has perimeter K ln N.
inline double default_c1(double k_large) { return (k_large / 4.0) * (k_large / 4.0); }

inline ScaleTable scale_table(int n, double a, double c1, double c2) {
  detail::require(n >= 2, "scale_table: n must be at least 2");
  detail::require(a > 0.0 && c1 > 0.0 && c2 > 0.0, "scale_table: a, c1, c2 must be positive");
  ScaleTable t;
  t.n = n;
  t.a = a;
  t.c1 = c1;
  t.c2 = c2;
  t.h_at_r_prime = std::sqrt(a / c1) * c2;
  detail::require(t.h_at_r_prime >= 10.0, "scale_table: sqrt(a / C1) C2 must be at least 10");
  const double nn = static_cast<double>(n);
  const double ln_n = std::log(nn);
  const double v0 = a * nn * nn;
  detail::require(v0 >= 1.0, "scale_table: a N^2 must be at least 1");
  t.r_max = 0;
  while (std::ldexp(v0, -(t.r_max + 1)) >= 1.0) ++t.r_max;
  t.r_prime = std::log(v0 / (c1 * ln_n * ln_n)) / std::log(2.0);
  for (int r = 0; r <= t.r_max + 1; ++r) {
    t.v_r.push_back(std::ldexp(v0, -r));
    t.h_r.push_back(r < t.r_prime ? 4.0 : c2 * std::exp2(0.5 * r) * ln_n / nn);
  }
  for (int r = 0; r <= t.r_max; ++r) t.h_sum += t.h_r[static_cast<std::size_t>(r)];
  t.c3 = t.h_sum / ln_n;
  return t;
}

}  // namespace sos
