#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include <nlohmann/json.hpp>

#include "sos/errors.hpp"
#include "sos/height_field.hpp"

namespace sos {

/// Lattice point of the dual lattice; cell (x, y) has corners (x, y)..(x+1, y+1).
struct Vertex {
  int x = 0;
  int y = 0;
  friend bool operator==(const Vertex&, const Vertex&) = default;
};

/// A closed boundary cycle of a level set, traversed with the level set on
/// its left. Outer boundaries run counter-clockwise, hole boundaries clockwise.
struct Contour {
  std::vector<Vertex> vertices;   // cycle start points; the cycle closes on vertices[0]
  int length = 0;                 // number of unit edges
  std::int64_t interior_area = 0; // unit squares enclosed
  int level = 0;
  bool external = false;          // outer boundary of a mutually external section
  bool outer = true;              // false for a hole boundary
  int section = -1;               // index of the section on the contour's inner side
};

/// An 8-connected component of a level set together with its outer boundary.
struct Section {
  std::vector<int> sites;  // site indices y * N + x, ascending
  Contour outer_boundary;
  bool external = false;
  std::vector<int> holes;  // indices into LevelContours::contours
};

struct LevelContours {
  int n = 0;
  int level = 0;
  std::vector<Contour> contours;
  std::vector<Section> sections;

  std::vector<const Contour*> external_contours() const {
    std::vector<const Contour*> out;
    for (const auto& c : contours)
      if (c.external) out.push_back(&c);
    return out;
  }
};

/// D(phi, l): sites with height >= l.
inline std::vector<int> level_set(const HeightField& field, int l) {
  std::vector<int> out;
  for (std::size_t i = 0; i < field.size(); ++i)
    if (field[i] >= l) out.push_back(static_cast<int>(i));
  return out;
}

namespace detail {

// Direction order E, N, W, S.
inline constexpr int kDx[4] = {1, 0, -1, 0};
inline constexpr int kDy[4] = {0, 1, 0, -1};
// Cell on the left / right of the unit edge leaving vertex v in direction d.
inline constexpr int kLeftX[4] = {0, -1, -1, 0};
inline constexpr int kLeftY[4] = {0, 0, -1, -1};
inline constexpr int kRightX[4] = {0, 0, -1, -1};
inline constexpr int kRightY[4] = {-1, 0, 0, -1};

inline int turn_right(int d) { return (d + 3) & 3; }
inline int turn_left(int d) { return (d + 1) & 3; }

/// Occupancy on a padded (n + 2)^2 grid; padded cell (x + 1, y + 1) is site (x, y).
class PaddedMask {
 public:
  PaddedMask(int n, std::vector<char> inside) : n_(n), w_(n + 2), cells_(std::move(inside)) {}

  static PaddedMask from_predicate(int n, auto&& pred) {
    std::vector<char> cells(static_cast<std::size_t>(n + 2) * (n + 2), 0);
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x)
        cells[static_cast<std::size_t>(y + 1) * (n + 2) + (x + 1)] = pred(x, y) ? 1 : 0;
    return PaddedMask(n, std::move(cells));
  }

  int n() const { return n_; }
  int width() const { return w_; }
  // Unpadded cell coordinates; anything outside the box is empty.
  bool occupied(int x, int y) const {
    if (x < 0 || y < 0 || x >= n_ || y >= n_) return false;
    return cells_[pidx(x, y)] != 0;
  }
  std::size_t pidx(int x, int y) const {
    return static_cast<std::size_t>(y + 1) * w_ + static_cast<std::size_t>(x + 1);
  }

 private:
  int n_;
  int w_;
  std::vector<char> cells_;
};

struct Labels {
  std::vector<int> fg;  // padded index -> 8-component id or -1
  std::vector<int> bg;  // padded index -> 4-component id or -1; id 0 touches the pad
  int fg_count = 0;
  int bg_count = 0;
};

inline Labels label_components(const PaddedMask& m) {
  const int w = m.width();
  const int n = m.n();
  Labels lab;
  lab.fg.assign(static_cast<std::size_t>(w) * w, -1);
  lab.bg.assign(static_cast<std::size_t>(w) * w, -1);
  std::vector<std::pair<int, int>> stack;
  auto in_pad = [w](int px, int py) { return px >= 0 && py >= 0 && px < w && py < w; };
  auto pocc = [&](int px, int py) { return m.occupied(px - 1, py - 1); };
  // Background first, seeded at the padded corner so the outside gets id 0.
  for (int py = 0; py < w; ++py) {
    for (int px = 0; px < w; ++px) {
      const auto id = static_cast<std::size_t>(py) * w + px;
      if (pocc(px, py) || lab.bg[id] >= 0) continue;
      const int label = lab.bg_count++;
      lab.bg[id] = label;
      stack.assign(1, {px, py});
      while (!stack.empty()) {
        auto [cx, cy] = stack.back();
        stack.pop_back();
        for (int d = 0; d < 4; ++d) {
          const int nx = cx + kDx[d], ny = cy + kDy[d];
          if (!in_pad(nx, ny) || pocc(nx, ny)) continue;
          const auto nid = static_cast<std::size_t>(ny) * w + nx;
          if (lab.bg[nid] >= 0) continue;
          lab.bg[nid] = label;
          stack.emplace_back(nx, ny);
        }
      }
    }
  }
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const auto id = m.pidx(x, y);
      if (!m.occupied(x, y) || lab.fg[id] >= 0) continue;
      const int label = lab.fg_count++;
      lab.fg[id] = label;
      stack.assign(1, {x, y});
      while (!stack.empty()) {
        auto [cx, cy] = stack.back();
        stack.pop_back();
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = cx + dx, ny = cy + dy;
            if (!m.occupied(nx, ny)) continue;
            const auto nid = m.pidx(nx, ny);
            if (lab.fg[nid] >= 0) continue;
            lab.fg[nid] = label;
            stack.emplace_back(nx, ny);
          }
        }
      }
    }
  }
  return lab;
}

inline std::int64_t signed_double_area(const std::vector<Vertex>& v) {
  std::int64_t s = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vertex& a = v[i];
    const Vertex& b = v[(i + 1) % v.size()];
    s += static_cast<std::int64_t>(a.x) * b.y - static_cast<std::int64_t>(b.x) * a.y;
  }
  return s;
}

/// Boundary cycles of the occupied region. At a pinch (two occupied cells
/// meeting only at a corner) the walk turns towards the other occupied cell,
/// so each cycle bounds one 8-connected component.
struct TracedCycle {
  std::vector<Vertex> vertices;
  int fg_label = -1;
  int bg_label = -1;
  std::int64_t double_area = 0;
};

inline std::vector<TracedCycle> trace_cycles(const PaddedMask& m, const Labels& lab) {
  const int n = m.n();
  // visited[(y * n + x) * 4 + d]: edge with left cell (x, y) heading in direction d.
  std::vector<char> visited(static_cast<std::size_t>(n) * n * 4, 0);
  auto edge_id = [n](int cx, int cy, int d) {
    return (static_cast<std::size_t>(cy) * n + cx) * 4 + static_cast<std::size_t>(d);
  };
  // Start vertex of the edge of cell (x, y) walked in direction d with the cell on its left.
  static constexpr int kStartX[4] = {0, 1, 1, 0};
  static constexpr int kStartY[4] = {0, 0, 1, 1};
  std::vector<TracedCycle> out;
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      if (!m.occupied(x, y)) continue;
      for (int d0 = 0; d0 < 4; ++d0) {
        const int rx = x + kStartX[d0] + kRightX[d0];
        const int ry = y + kStartY[d0] + kRightY[d0];
        if (m.occupied(rx, ry) || visited[edge_id(x, y, d0)]) continue;
        TracedCycle cyc;
        cyc.fg_label = lab.fg[m.pidx(x, y)];
        cyc.bg_label = lab.bg[m.pidx(rx, ry)];
        int vx = x + kStartX[d0], vy = y + kStartY[d0], d = d0;
        do {
          const int lx = vx + kLeftX[d], ly = vy + kLeftY[d];
          visited[edge_id(lx, ly, d)] = 1;
          cyc.vertices.push_back({vx, vy});
          vx += kDx[d];
          vy += kDy[d];
          const bool ahead_right = m.occupied(vx + kRightX[d], vy + kRightY[d]);
          const bool ahead_left = m.occupied(vx + kLeftX[d], vy + kLeftY[d]);
          if (ahead_right) d = turn_right(d);
          else if (!ahead_left) d = turn_left(d);
        } while (!(vx == x + kStartX[d0] && vy == y + kStartY[d0] && d == d0));
        cyc.double_area = signed_double_area(cyc.vertices);
        out.push_back(std::move(cyc));
      }
    }
  }
  return out;
}

}  // namespace detail

/// Contours and sections of D(phi, l): 8-connected occupied components,
/// 4-connected complement, pinch points resolved towards occupied connectivity.
inline LevelContours contours_of(const HeightField& field, int l) {
  const int n = field.n();
  const auto mask = detail::PaddedMask::from_predicate(n, [&](int x, int y) { return field(x, y) >= l; });
  const auto lab = detail::label_components(mask);
  LevelContours out;
  out.n = n;
  out.level = l;
  out.sections.resize(static_cast<std::size_t>(lab.fg_count));
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x)
      if (mask.occupied(x, y))
        out.sections[static_cast<std::size_t>(lab.fg[mask.pidx(x, y)])].sites.push_back(y * n + x);

  for (auto& cyc : detail::trace_cycles(mask, lab)) {
    Contour c;
    c.length = static_cast<int>(cyc.vertices.size());
    c.vertices = std::move(cyc.vertices);
    c.outer = cyc.double_area > 0;
    c.interior_area = std::abs(cyc.double_area) / 2;
    c.level = l;
    c.section = cyc.fg_label;
    c.external = c.outer && cyc.bg_label == 0;
    auto& sec = out.sections[static_cast<std::size_t>(c.section)];
    if (c.outer) {
      sec.external = c.external;
      sec.outer_boundary = c;
    } else {
      sec.holes.push_back(static_cast<int>(out.contours.size()));
    }
    out.contours.push_back(std::move(c));
  }
  return out;
}

/// Sites enclosed by a contour (ascending indices), by row parity over its
/// vertical edges.
inline std::vector<int> interior_sites(const Contour& c, int n) {
  std::vector<std::vector<int>> rows(static_cast<std::size_t>(n));
  const auto& v = c.vertices;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Vertex& a = v[i];
    const Vertex& b = v[(i + 1) % v.size()];
    if (a.x != b.x) continue;
    const int row = std::min(a.y, b.y);
    if (row >= 0 && row < n) rows[static_cast<std::size_t>(row)].push_back(a.x);
  }
  std::vector<int> out;
  for (int y = 0; y < n; ++y) {
    auto& xs = rows[static_cast<std::size_t>(y)];
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2)
      for (int x = std::max(xs[k], 0); x < std::min(xs[k + 1], n); ++x) out.push_back(y * n + x);
  }
  return out;
}

enum class ContourClass { Small, Large };

/// Large iff length >= K ln N.
inline ContourClass classify_contour(const Contour& c, int n, double k_large) {
  return static_cast<double>(c.length) >= k_large * std::log(static_cast<double>(n))
             ? ContourClass::Large
             : ContourClass::Small;
}

/// Counts |D(phi, l)| for all l in [lo, hi] from a height histogram.
class LevelCounts {
 public:
  explicit LevelCounts(const HeightField& field) {
    if (field.size() == 0) return;
    auto [mn, mx] = std::minmax_element(field.heights().begin(), field.heights().end());
    lo_ = *mn;
    hi_ = *mx;
    std::vector<std::int64_t> hist(static_cast<std::size_t>(hi_ - lo_) + 1, 0);
    for (Height h : field.heights()) ++hist[static_cast<std::size_t>(h - lo_)];
    at_least_.assign(hist.size(), 0);
    std::int64_t acc = 0;
    for (std::size_t i = hist.size(); i-- > 0;) {
      acc += hist[i];
      at_least_[i] = acc;
    }
  }

  std::int64_t operator()(int l) const {
    if (l <= lo_) return at_least_.empty() ? 0 : at_least_.front();
    if (l > hi_) return 0;
    return at_least_[static_cast<std::size_t>(l - lo_)];
  }
  Height min_height() const { return lo_; }
  Height max_height() const { return hi_; }

 private:
  Height lo_ = 0, hi_ = 0;
  std::vector<std::int64_t> at_least_;
};

/// L(phi): the largest l >= 1 with |D(phi, l)| >= a N^2, or nullopt.
inline std::optional<int> facet_level(const HeightField& field, double a) {
  detail::require(a > 0.0 && a < 1.0, "facet_level: a must lie in (0, 1)");
  const LevelCounts counts(field);
  const double threshold = a * static_cast<double>(field.size());
  for (int l = counts.max_height(); l >= 1; --l)
    if (static_cast<double>(counts(l)) >= threshold) return l;
  return std::nullopt;
}

inline int require_facet_level(const HeightField& field, double a) {
  auto l = facet_level(field, a);
  if (!l) throw DegenerateField("no positive level holds a fraction a of the box");
  return *l;
}

struct FacetReport {
  int level = 0;                    // L(phi)
  std::int64_t f1_area = 0;         // |D(phi, L)|
  std::int64_t f2_area = 0;         // |D(phi, L - 1)|
  std::int64_t e2_area = 0;         // interior area of external contours of D(phi, L - 1)
  std::int64_t small_volume = 0;    // interior area of small external contours at level L
  std::int64_t large_volume = 0;    // interior area of large external contours at level L

  friend bool operator==(const FacetReport&, const FacetReport&) = default;
};

inline std::int64_t external_interior_area(const LevelContours& lc) {
  std::int64_t total = 0;
  for (const auto& c : lc.contours)
    if (c.external) total += c.interior_area;
  return total;
}

inline FacetReport facet_report(const HeightField& field, const ModelParams& params) {
  const int l = require_facet_level(field, params.a);
  const LevelCounts counts(field);
  FacetReport r;
  r.level = l;
  r.f1_area = counts(l);
  r.f2_area = counts(l - 1);
  r.e2_area = external_interior_area(contours_of(field, l - 1));
  for (const auto& c : contours_of(field, l).contours) {
    if (!c.external) continue;
    if (classify_contour(c, field.n(), params.k_large) == ContourClass::Large)
      r.large_volume += c.interior_area;
    else
      r.small_volume += c.interior_area;
  }
  return r;
}

/// Lowers the field by one inside each contour. Interiors must be disjoint.
inline HeightField erase(const HeightField& field, const std::vector<Contour>& contours) {
  HeightField out = field;
  std::vector<char> touched(field.size(), 0);
  for (const auto& c : contours) {
    for (int s : interior_sites(c, field.n())) {
      if (touched[static_cast<std::size_t>(s)])
        throw ContractViolation("erase: contour interiors overlap");
      touched[static_cast<std::size_t>(s)] = 1;
      out[static_cast<std::size_t>(s)] -= 1;
    }
  }
  return out;
}

/// Adds +1 on a side_big square and +1 on a side_small square, both anchored
/// at the lower-left corner of the box.
inline HeightField fill_squares(const HeightField& field, int side_big, int side_small) {
  const int n = field.n();
  detail::require(side_big >= 0 && side_small >= 0, "fill_squares: negative side");
  detail::require(side_big <= n && side_small <= n, "fill_squares: square exceeds box");
  HeightField out = field;
  for (int side : {side_big, side_small})
    for (int y = 0; y < side; ++y)
      for (int x = 0; x < side; ++x) out(x, y) += 1;
  return out;
}

/// Outermost contours of D(phi, L - 1) left after removing its external
/// contours: the hole boundaries of the external sections of F2.
inline std::vector<Contour> second_order_externals(const HeightField& field,
                                                   const ModelParams& params) {
  const int l = require_facet_level(field, params.a);
  const auto lc = contours_of(field, l - 1);
  std::vector<Contour> out;
  for (const auto& c : lc.contours)
    if (!c.outer && lc.sections[static_cast<std::size_t>(c.section)].external) out.push_back(c);
  return out;
}

// Serialization -------------------------------------------------------------

inline void to_json(nlohmann::json& j, const FacetReport& r) {
  j = nlohmann::json{{"level", r.level},
                     {"f1_area", r.f1_area},
                     {"f2_area", r.f2_area},
                     {"e2_area", r.e2_area},
                     {"small_volume", r.small_volume},
                     {"large_volume", r.large_volume}};
}

inline void from_json(const nlohmann::json& j, FacetReport& r) {
  j.at("level").get_to(r.level);
  j.at("f1_area").get_to(r.f1_area);
  j.at("f2_area").get_to(r.f2_area);
  j.at("e2_area").get_to(r.e2_area);
  j.at("small_volume").get_to(r.small_volume);
  j.at("large_volume").get_to(r.large_volume);
}

/// Contour dump, one contour per line:
///   <level> <external 0|1> <outer 0|1> <length> <area> <x0> <y0> <x1> <y1> ...
inline void write_contours(std::ostream& out, const LevelContours& lc) {
  for (const auto& c : lc.contours) {
    out << c.level << ' ' << (c.external ? 1 : 0) << ' ' << (c.outer ? 1 : 0) << ' ' << c.length
        << ' ' << c.interior_area;
    for (const auto& v : c.vertices) out << ' ' << v.x << ' ' << v.y;
    out << '\n';
  }
}

}  // namespace sos
