#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sos/errors.hpp"

namespace sos {

using Height = std::int32_t;

/// Integer height configuration on an N x N box with a constant boundary
/// height outside the box. Site (x, y) lives at index y * N + x and is the
/// closed unit square [x, x+1] x [y, y+1]; (0, 0) is the lower-left corner.
class HeightField {
 public:
  HeightField() = default;

  HeightField(int n, Height fill, Height boundary = 0)
      : n_(n), boundary_(boundary), heights_(checked_area(n), fill) {}

  HeightField(int n, std::vector<Height> heights, Height boundary = 0)
      : n_(n), boundary_(boundary), heights_(std::move(heights)) {
    detail::require(heights_.size() == checked_area(n),
                    "HeightField: expected n*n heights");
  }

  int n() const noexcept { return n_; }
  Height boundary() const noexcept { return boundary_; }
  std::size_t size() const noexcept { return heights_.size(); }

  Height operator()(int x, int y) const noexcept { return heights_[index(x, y)]; }
  Height& operator()(int x, int y) noexcept { return heights_[index(x, y)]; }
  Height operator[](std::size_t i) const noexcept { return heights_[i]; }
  Height& operator[](std::size_t i) noexcept { return heights_[i]; }

  /// Height at (x, y), or the boundary value when (x, y) lies outside the box.
  Height extended(int x, int y) const noexcept {
    if (x < 0 || y < 0 || x >= n_ || y >= n_) return boundary_;
    return heights_[index(x, y)];
  }

  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(n_) +
           static_cast<std::size_t>(x);
  }

  std::span<const Height> heights() const noexcept { return heights_; }
  std::span<Height> heights() noexcept { return heights_; }

  friend bool operator==(const HeightField&, const HeightField&) = default;

 private:
  static std::size_t checked_area(int n) {
    detail::require(n >= 1, "HeightField: box side must be positive");
    return static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
  }

  int n_ = 0;
  Height boundary_ = 0;
  std::vector<Height> heights_;
};

/// Physical parameters of the constrained SOS measure.
struct ModelParams {
  double beta = 3.0;     // inverse temperature
  double lambda = 0.5;   // volume fraction: V >= lambda * N^3
  double a = 0.1;        // facet threshold a(beta)
  double k_large = 10.0; // contours with length >= K ln N are large

  void validate() const {
    detail::require(beta > 0.0 && std::isfinite(beta), "beta must be positive");
    detail::require(lambda > 0.0 && std::isfinite(lambda), "lambda must be positive");
    detail::require(a > 0.0 && a < 1.0, "a must lie in (0, 1)");
    detail::require(k_large > 0.0 && std::isfinite(k_large), "k_large must be positive");
  }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Smallest integer volume satisfying V >= lambda * n^3.
inline std::int64_t min_volume(double lambda, int n) {
  const double bound = lambda * static_cast<double>(n) * n * n;
  return static_cast<std::int64_t>(std::ceil(bound));
}

/// Sum of |phi_s - phi_t| over unordered nearest-neighbour pairs with at
/// least one endpoint in the box; outside sites carry the boundary height.
inline std::int64_t energy(const HeightField& field) {
  const int n = field.n();
  const Height psi = field.boundary();
  std::int64_t total = 0;
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const Height h = field(x, y);
      if (x + 1 < n) total += std::abs(h - field(x + 1, y));
      if (y + 1 < n) total += std::abs(h - field(x, y + 1));
      if (x == 0) total += std::abs(h - psi);
      if (x == n - 1) total += std::abs(h - psi);
      if (y == 0) total += std::abs(h - psi);
      if (y == n - 1) total += std::abs(h - psi);
    }
  }
  return total;
}

/// Number of vertical unit plaquettes of the surface, S(phi).
inline std::int64_t vertical_plaquettes(const HeightField& field) {
  // Each unit of height difference across a dual edge is one vertical plaquette.
  return energy(field);
}

inline std::int64_t volume(const HeightField& field) {
  std::int64_t total = 0;
  for (Height h : field.heights()) total += h;
  return total;
}

// Serialization -------------------------------------------------------------

/// Plain-text grid: first line N, then N rows of N integers (row y = 0 first).
inline void write_grid(std::ostream& out, const HeightField& field) {
  const int n = field.n();
  out << n << '\n';
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      if (x) out << ' ';
      out << field(x, y);
    }
    out << '\n';
  }
}

inline std::string to_grid_string(const HeightField& field) {
  std::ostringstream os;
  write_grid(os, field);
  return os.str();
}

/// Reads the grid format. The boundary height is not part of the format and
/// is supplied by the caller.
inline HeightField read_grid(std::istream& in, Height boundary = 0) {
  long long n = 0;
  if (!(in >> n) || n < 1 || n > 1'000'000)
    throw ContractViolation("grid: missing or invalid box side");
  std::vector<Height> heights(static_cast<std::size_t>(n * n));
  for (auto& h : heights) {
    long long v = 0;
    if (!(in >> v)) throw ContractViolation("grid: expected n*n integers");
    h = static_cast<Height>(v);
  }
  return HeightField(static_cast<int>(n), std::move(heights), boundary);
}

inline HeightField from_grid_string(const std::string& text, Height boundary = 0) {
  std::istringstream is(text);
  return read_grid(is, boundary);
}

inline void to_json(nlohmann::json& j, const HeightField& field) {
  nlohmann::json rows = nlohmann::json::array();
  for (int y = 0; y < field.n(); ++y) {
    nlohmann::json row = nlohmann::json::array();
    for (int x = 0; x < field.n(); ++x) row.push_back(field(x, y));
    rows.push_back(std::move(row));
  }
  j = nlohmann::json{{"n", field.n()}, {"boundary", field.boundary()}, {"heights", rows}};
}

inline void from_json(const nlohmann::json& j, HeightField& field) {
  const int n = j.at("n").get<int>();
  const auto& rows = j.at("heights");
  detail::require(rows.is_array() && rows.size() == static_cast<std::size_t>(n),
                  "field json: expected n rows");
  std::vector<Height> heights;
  heights.reserve(static_cast<std::size_t>(n) * n);
  for (const auto& row : rows) {
    detail::require(row.is_array() && row.size() == static_cast<std::size_t>(n),
                    "field json: expected n columns per row");
    for (const auto& v : row) heights.push_back(v.get<Height>());
  }
  field = HeightField(n, std::move(heights), j.value("boundary", Height{0}));
}

inline void to_json(nlohmann::json& j, const ModelParams& p) {
  j = nlohmann::json{{"beta", p.beta}, {"lambda", p.lambda}, {"a", p.a}, {"k_large", p.k_large}};
}

inline void from_json(const nlohmann::json& j, ModelParams& p) {
  ModelParams d;
  p.beta = j.value("beta", d.beta);
  p.lambda = j.value("lambda", d.lambda);
  p.a = j.value("a", d.a);
  p.k_large = j.value("k_large", d.k_large);
}

}  // namespace sos
