#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "sos/errors.hpp"
#include "sos/height_field.hpp"

namespace sos {

using Rng = std::mt19937_64;

namespace detail {

/// Uniform double in [0, 1) from the top 53 bits; portable across standard
/// libraries, unlike std::uniform_real_distribution.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline bool fair_coin(Rng& rng) { return (rng() >> 63) != 0; }

}  // namespace detail

struct SamplerConfig {
  ModelParams params;
  std::int64_t sweeps = 1000;
  std::int64_t burn_in = 0;
  std::int64_t thin = 1;
  std::uint64_t seed = 1;
  std::optional<Height> height_floor;
  std::optional<Height> height_ceiling;

  void validate() const {
    params.validate();
    detail::require(sweeps >= 1, "sweeps must be positive");
    detail::require(burn_in >= 0 && burn_in < sweeps, "burn_in must lie in [0, sweeps)");
    detail::require(thin >= 1, "thin must be at least 1");
    if (height_floor && height_ceiling)
      detail::require(*height_floor <= *height_ceiling, "height_floor exceeds height_ceiling");
  }
};

/// Truncation used by experiments: [-8, ceil(lambda N) + 8 ceil(ln N)].
inline std::pair<Height, Height> default_height_bounds(double lambda, int n) {
  const auto top = static_cast<Height>(std::ceil(lambda * n)) +
                   8 * static_cast<Height>(std::ceil(std::log(static_cast<double>(n))));
  return {Height{-8}, top};
}

struct ChainSample {
  HeightField field;
  std::int64_t sweep_index = 0;
  std::int64_t energy = 0;
  std::int64_t volume = 0;
};

struct SweepStats {
  std::int64_t proposals = 0;
  std::int64_t accepted = 0;
  std::int64_t uphill_accepted = 0;       // accepted with Delta H > 0
  std::int64_t rejected_constraint = 0;   // would break V >= lambda N^3
  std::int64_t rejected_bounds = 0;       // would leave [floor, ceiling]

  SweepStats& operator+=(const SweepStats& o) {
    proposals += o.proposals;
    accepted += o.accepted;
    uphill_accepted += o.uphill_accepted;
    rejected_constraint += o.rejected_constraint;
    rejected_bounds += o.rejected_bounds;
    return *this;
  }
};

/// Flat start at ceil(lambda n); its volume already meets the constraint.
inline HeightField init_field(const ModelParams& params, int n) {
  detail::require(n >= 1, "init_field: n must be positive");
  return HeightField(n, static_cast<Height>(std::ceil(params.lambda * n)), 0);
}

/// Energy change of moving site (x, y) by `delta` (+1 or -1).
inline int local_energy_change(const HeightField& field, int x, int y, int delta) {
  const Height h = field(x, y);
  const Height nb[4] = {field.extended(x - 1, y), field.extended(x + 1, y),
                        field.extended(x, y - 1), field.extended(x, y + 1)};
  int d = 0;
  for (Height t : nb) d += std::abs(h + delta - t) - std::abs(h - t);
  return d;
}

/// Single-site Metropolis kernel for the conditional measure. The same rule
/// drives metropolis_sweep and the explicit transition matrices in tests.
class SiteKernel {
 public:
  SiteKernel(const ModelParams& params, int n, std::optional<Height> floor,
             std::optional<Height> ceiling)
      : min_volume_(sos::min_volume(params.lambda, n)), floor_(floor), ceiling_(ceiling) {
    for (int d = 0; d <= 4; ++d) boltzmann_[d] = std::exp(-params.beta * d);
  }

  explicit SiteKernel(const SamplerConfig& cfg, int n)
      : SiteKernel(cfg.params, n, cfg.height_floor, cfg.height_ceiling) {}

  std::int64_t min_volume() const noexcept { return min_volume_; }

  enum class Verdict { Allowed, Constraint, Bounds };

  /// Hard-constraint screen for moving site (x, y) by delta at total volume v.
  Verdict screen(const HeightField& field, int x, int y, int delta, std::int64_t v) const {
    const Height target = field(x, y) + delta;
    if ((floor_ && target < *floor_) || (ceiling_ && target > *ceiling_)) return Verdict::Bounds;
    if (v + delta < min_volume_) return Verdict::Constraint;
    return Verdict::Allowed;
  }

  /// Metropolis acceptance min(1, exp(-beta dH)); dH ranges over [-4, 4].
  double acceptance(int energy_change) const noexcept {
    return energy_change <= 0 ? 1.0 : boltzmann_[energy_change];
  }

  /// Probability that a proposal of `delta` at (x, y) is carried out,
  /// including the fair coin choosing its sign.
  double move_probability(const HeightField& field, int x, int y, int delta,
                          std::int64_t v) const {
    if (screen(field, x, y, delta, v) != Verdict::Allowed) return 0.0;
    return 0.5 * acceptance(local_energy_change(field, x, y, delta));
  }

 private:
  std::int64_t min_volume_;
  std::optional<Height> floor_;
  std::optional<Height> ceiling_;
  std::array<double, 5> boltzmann_{};
};

/// One raster-scan sweep of N^2 single-site +-1 proposals, in place.
/// `volume_now` must be the field's current volume; it is kept up to date.
inline SweepStats metropolis_sweep_inplace(HeightField& field, const SiteKernel& kernel,
                                           std::int64_t& volume_now, Rng& rng) {
  SweepStats st;
  const int n = field.n();
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      ++st.proposals;
      const int delta = detail::fair_coin(rng) ? 1 : -1;
      switch (kernel.screen(field, x, y, delta, volume_now)) {
        case SiteKernel::Verdict::Bounds: ++st.rejected_bounds; continue;
        case SiteKernel::Verdict::Constraint: ++st.rejected_constraint; continue;
        case SiteKernel::Verdict::Allowed: break;
      }
      const int dh = local_energy_change(field, x, y, delta);
      if (dh > 0 && !(detail::uniform01(rng) < kernel.acceptance(dh))) continue;
      field(x, y) += delta;
      volume_now += delta;
      ++st.accepted;
      if (dh > 0) ++st.uphill_accepted;
    }
  }
  return st;
}

struct SweepResult {
  HeightField field;
  SweepStats stats;
};

inline SweepResult metropolis_sweep(HeightField field, const SamplerConfig& config, Rng& rng) {
  std::int64_t v = volume(field);
  const SiteKernel kernel(config, field.n());
  if (v < kernel.min_volume())
    throw ContractViolation("metropolis_sweep: input field violates the volume constraint");
  SweepStats st = metropolis_sweep_inplace(field, kernel, v, rng);
  return {std::move(field), st};
}

struct ChainRun {
  std::vector<ChainSample> samples;
  SweepStats stats;
};

/// Runs one chain from init_field and calls visit(field, sweep, volume)
/// after every `thin` sweeps once `burn_in` sweeps are done. Deterministic
/// in (config, n). Returns the accumulated move statistics.
template <class Visit>
SweepStats for_each_sample(const SamplerConfig& config, int n, Visit&& visit) {
  config.validate();
  HeightField field = init_field(config.params, n);
  if (config.height_ceiling)
    detail::require(field[0] <= *config.height_ceiling,
                    "run_chain: initial height exceeds height_ceiling");
  if (config.height_floor)
    detail::require(field[0] >= *config.height_floor, "run_chain: initial height below height_floor");
  const SiteKernel kernel(config, n);
  Rng rng(config.seed);
  std::int64_t v = volume(field);
  SweepStats stats;
  for (std::int64_t s = 1; s <= config.sweeps; ++s) {
    stats += metropolis_sweep_inplace(field, kernel, v, rng);
    if (s > config.burn_in && (s - config.burn_in) % config.thin == 0) visit(std::as_const(field), s, v);
  }
  return stats;
}

inline ChainRun run_chain_with_stats(const SamplerConfig& config, int n) {
  ChainRun run;
  run.stats = for_each_sample(config, n, [&](const HeightField& f, std::int64_t s, std::int64_t v) {
    run.samples.push_back({f, s, energy(f), v});
  });
  return run;
}

inline std::vector<ChainSample> run_chain(const SamplerConfig& config, int n) {
  return run_chain_with_stats(config, n).samples;
}

// Exhaustive oracle ---------------------------------------------------------

/// Conditional Gibbs probabilities over the truncated cube
/// [h_min, h_max]^(n*n). States are indexed in mixed radix, site 0 least
/// significant.
class ExactDistribution {
 public:
  static constexpr std::uint64_t kMaxStates = 10'000'000;

  ExactDistribution(int n, Height h_min, Height h_max, double beta, double lambda,
                    Height boundary = 0)
      : n_(n), h_min_(h_min), h_max_(h_max), boundary_(boundary) {
    detail::require(n >= 1 && n <= 3, "exact_distribution: n must lie in 1..3");
    detail::require(h_min <= h_max, "exact_distribution: empty height range");
    detail::require(beta >= 0.0 && lambda >= 0.0, "exact_distribution: beta, lambda must be >= 0");
    const std::uint64_t radix = static_cast<std::uint64_t>(h_max - h_min) + 1;
    std::uint64_t states = 1;
    for (int i = 0; i < n * n; ++i) {
      states *= radix;
      if (states > kMaxStates) throw ContractViolation("exact_distribution: state space too large");
    }
    const double bound = lambda * n * n * n;
    prob_.resize(states);
    double z = 0.0;
    double e_min = 0.0;
    bool first = true;
    std::vector<double> log_w(states, 0.0);
    std::vector<char> allowed(states, 0);
    for (std::uint64_t i = 0; i < states; ++i) {
      const HeightField f = state(i);
      if (static_cast<double>(volume(f)) < bound) continue;
      allowed[i] = 1;
      const double e = beta * static_cast<double>(energy(f));
      log_w[i] = -e;
      if (first || e < e_min) e_min = e;
      first = false;
    }
    detail::require(!first, "exact_distribution: no configuration satisfies the constraint");
    for (std::uint64_t i = 0; i < states; ++i) {
      prob_[i] = allowed[i] ? std::exp(log_w[i] + e_min) : 0.0;
      z += prob_[i];
    }
    for (double& p : prob_) p /= z;
  }

  int n() const noexcept { return n_; }
  Height h_min() const noexcept { return h_min_; }
  Height h_max() const noexcept { return h_max_; }
  std::size_t size() const noexcept { return prob_.size(); }
  double operator[](std::size_t i) const noexcept { return prob_[i]; }
  const std::vector<double>& probabilities() const noexcept { return prob_; }

  HeightField state(std::uint64_t index) const {
    const std::uint64_t radix = static_cast<std::uint64_t>(h_max_ - h_min_) + 1;
    std::vector<Height> h(static_cast<std::size_t>(n_) * n_);
    for (auto& v : h) {
      v = h_min_ + static_cast<Height>(index % radix);
      index /= radix;
    }
    return HeightField(n_, std::move(h), boundary_);
  }

  /// Index of `field`, or nullopt when it lies outside the truncated cube.
  std::optional<std::uint64_t> index_of(const HeightField& field) const {
    if (field.n() != n_) return std::nullopt;
    const std::uint64_t radix = static_cast<std::uint64_t>(h_max_ - h_min_) + 1;
    std::uint64_t idx = 0;
    for (std::size_t i = field.size(); i-- > 0;) {
      if (field[i] < h_min_ || field[i] > h_max_) return std::nullopt;
      idx = idx * radix + static_cast<std::uint64_t>(field[i] - h_min_);
    }
    return idx;
  }

 private:
  int n_;
  Height h_min_, h_max_, boundary_;
  std::vector<double> prob_;
};

inline ExactDistribution exact_distribution(int n, Height h_min, Height h_max,
                                            const ModelParams& params) {
  return ExactDistribution(n, h_min, h_max, params.beta, params.lambda);
}

/// Total-variation distance between the empirical law of `samples` and the
/// exact table. Samples outside the truncated cube count as full mass error.
inline double total_variation(const ExactDistribution& exact,
                              const std::vector<std::uint64_t>& counts, std::uint64_t outside,
                              std::uint64_t total) {
  double tv = static_cast<double>(outside) / static_cast<double>(total);
  for (std::size_t i = 0; i < exact.size(); ++i)
    tv += std::abs(static_cast<double>(counts[i]) / static_cast<double>(total) - exact[i]);
  return 0.5 * tv;
}

}  // namespace sos
