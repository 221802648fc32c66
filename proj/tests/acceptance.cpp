// Acceptance suite: one PASS/FAIL line per criterion.
//   acceptance              run every criterion
//   acceptance --criterion K run criterion K only
// Exit status is 0 when every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "sos/experiment.hpp"
#include "sos/hairs.hpp"
#include "sos/isoperimetry.hpp"
#include "sos/levelsets.hpp"
#include "sos/markov.hpp"
#include "sos/partitions.hpp"
#include "sos/sampler.hpp"

namespace {

using namespace sos;
using Clock = std::chrono::steady_clock;
using Big = boost::multiprecision::cpp_bin_float_50;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Independent oracles ---------------------------------------------------------

/// Energy of a row-major n x n height array with zero boundary, counting each
/// nearest-neighbour pair once.
std::int64_t oracle_energy(const std::vector<int>& h, int n) {
  auto at = [&](int x, int y) { return (x < 0 || y < 0 || x >= n || y >= n) ? 0 : h[y * n + x]; };
  std::int64_t e = 0;
  for (int y = -1; y < n; ++y)
    for (int x = -1; x < n; ++x) {
      if (y >= 0) e += std::abs(at(x, y) - at(x + 1, y));
      if (x >= 0) e += std::abs(at(x, y) - at(x, y + 1));
    }
  return e;
}

/// Largest l >= 1 with #{s : h_s >= l} >= a N^2, by direct counting.
std::optional<int> oracle_facet_level(const HeightField& f, double a) {
  const double need = a * static_cast<double>(f.size());
  const int top = *std::max_element(f.heights().begin(), f.heights().end());
  for (int l = top; l >= 1; --l) {
    std::int64_t c = 0;
    for (Height h : f.heights()) c += h >= l;
    if (static_cast<double>(c) >= need) return l;
  }
  return std::nullopt;
}

std::int64_t count_at_least(const HeightField& f, int l) {
  std::int64_t c = 0;
  for (Height h : f.heights()) c += h >= l;
  return c;
}

void partitions_into(int left, int cap, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (left == 0) {
    out.push_back(cur);
    return;
  }
  for (int p = 1; p <= std::min(left, cap); ++p) {
    cur.push_back(p);
    partitions_into(left - p, p, cur, out);
    cur.pop_back();
  }
}

// Criteria --------------------------------------------------------------------

Outcome criterion1() {
  const PolyominoOracle oracle(12);
  int mismatches = 0;
  std::string table;
  for (int v = 1; v <= 12; ++v) {
    mismatches += oracle.min_perimeter(v) != min_perimeter(v);
    table += fmt("%d:%d ", v, oracle.min_perimeter(v));
  }
  return {mismatches == 0, fmt("mismatches=%d oracle p(v)=[%s]", mismatches, table.c_str())};
}

Outcome criterion2() {
  std::int64_t violations = 0, float_disagree = 0;
  for (std::int64_t v = 1; v <= 1'000'000; ++v) {
    const bool ok = sqrt_bounds_check(v);
    violations += !ok;
    // Long-double evaluation of the same two-sided bound.
    const long double s = 4.0L * std::sqrt(static_cast<long double>(v));
    const auto p = static_cast<long double>(min_perimeter(v));
    float_disagree += ok != (s <= p + 1e-12L && p < s + 4.0L);
  }
  return {violations == 0 && float_disagree == 0,
          fmt("v in 1..1e6: violations=%lld float_disagreements=%lld", static_cast<long long>(violations),
              static_cast<long long>(float_disagree))};
}

Outcome criterion3() {
  bool pass = true;
  std::string detail;
  for (int n : {50, 100, 200}) {
    const auto cert = certify_transfer(n, 0.1);
    const bool ok = cert.min_gain > 0 && cert.kappa > 0.01;
    pass = pass && ok;
    detail += fmt("n=%d triples=%llu negative=%llu min_gain=%lld kappa=%.6f (worst v1=%lld v2=%lld d=%lld); ", n,
                  static_cast<unsigned long long>(cert.triples), static_cast<unsigned long long>(cert.negative),
                  static_cast<long long>(cert.min_gain), cert.kappa, static_cast<long long>(cert.worst_kappa.v1),
                  static_cast<long long>(cert.worst_kappa.v2), static_cast<long long>(cert.worst_kappa.d));
  }
  const DropletTriple control{4, 4, 1, 50, 0.1};
  const auto g = raw_transfer_gain(4, 4, 1);
  bool threw = false;
  try {
    (void)transfer_gain(control);
  } catch (const ContractViolation&) {
    threw = true;
  }
  const bool control_ok = g == -2 && !control.hypotheses_hold() && threw;
  pass = pass && control_ok;
  detail += fmt("control (4,4,1): gain=%lld flagged=%d", static_cast<long long>(g), control_ok ? 1 : 0);
  return {pass, detail};
}

Outcome criterion4() {
  const int n = 2;
  const double beta = 1.0, lambda = 0.5;
  // Own Gibbs table over {0..3}^4, site index y * n + x, site 0 least significant.
  std::vector<double> pi(256, 0.0);
  double z = 0.0;
  for (int code = 0; code < 256; ++code) {
    std::vector<int> h(4);
    int vol = 0;
    for (int s = 0; s < 4; ++s) {
      h[static_cast<std::size_t>(s)] = (code >> (2 * s)) & 3;
      vol += h[static_cast<std::size_t>(s)];
    }
    if (vol < 4) continue;
    pi[static_cast<std::size_t>(code)] = std::exp(-beta * static_cast<double>(oracle_energy(h, n)));
    z += pi[static_cast<std::size_t>(code)];
  }
  for (auto& p : pi) p /= z;

  const ExactDistribution exact(n, 0, 3, beta, lambda);
  double table_diff = 0.0;
  for (std::size_t i = 0; i < 256; ++i) table_diff = std::max(table_diff, std::abs(exact[i] - pi[i]));

  SamplerConfig cfg;
  cfg.params.beta = beta;
  cfg.params.lambda = lambda;
  cfg.height_floor = 0;
  cfg.height_ceiling = 3;
  const std::int64_t samples = 1'000'000, thin = 5;
  cfg.burn_in = 1000;
  cfg.thin = thin;
  cfg.sweeps = cfg.burn_in + samples * thin;
  cfg.seed = 20240501;
  std::vector<std::int64_t> counts(256, 0);
  std::int64_t outside = 0, taken = 0;
  for_each_sample(cfg, n, [&](const HeightField& f, std::int64_t, std::int64_t) {
    ++taken;
    int code = 0;
    for (int s = 3; s >= 0; --s) {
      const Height h = f[static_cast<std::size_t>(s)];
      if (h < 0 || h > 3) {
        ++outside;
        return;
      }
      code = code * 4 + h;
    }
    ++counts[static_cast<std::size_t>(code)];
  });
  double tv = static_cast<double>(outside) / static_cast<double>(taken);
  for (std::size_t i = 0; i < 256; ++i)
    tv += std::abs(static_cast<double>(counts[i]) / static_cast<double>(taken) - pi[i]);
  tv *= 0.5;

  // Entrywise detailed balance of each single-site kernel against the own table.
  const SiteKernel kernel(cfg.params, n, Height{0}, Height{3});
  double defect = 0.0;
  for (int s = 0; s < 4; ++s) {
    const auto p = markov::site_transition_matrix(exact, kernel, s);
    for (std::size_t i = 0; i < 256; ++i)
      for (std::size_t j = 0; j < 256; ++j) defect = std::max(defect, std::abs(pi[i] * p[i][j] - pi[j] * p[j][i]));
  }
  const bool pass = taken == samples && tv < 0.02 && defect <= 1e-12 && table_diff <= 1e-15;
  return {pass, fmt("samples=%lld TV=%.5f (< 0.02) balance_defect=%.2e (<= 1e-12) table_diff=%.1e",
                    static_cast<long long>(taken), tv, defect, table_diff)};
}

/// Reference low-temperature runs shared by criteria 5-7.
struct FacetRun {
  int n = 0;
  std::int64_t samples = 0, big_f2 = 0, degenerate = 0, level_violations = 0, mismatches = 0;
  int level_lo = 0, level_hi = 0;
  std::int64_t median_f1 = 0;
  int q99 = 0, max_dev = 0;
};

FacetRun facet_run(int n) {
  SamplerConfig cfg;
  cfg.params.beta = 3.0;
  cfg.params.lambda = 0.5;
  cfg.params.a = 0.1;
  cfg.params.k_large = 10.0;
  cfg.sweeps = 100'000;
  cfg.burn_in = 10'000;
  cfg.thin = 50;
  cfg.seed = experiment::derive_seed(777, static_cast<std::uint64_t>(n));
  const auto [lo, hi] = default_height_bounds(cfg.params.lambda, n);
  cfg.height_floor = lo;
  cfg.height_ceiling = hi;

  FacetRun r;
  r.n = n;
  r.level_lo = std::numeric_limits<int>::max();
  r.level_hi = std::numeric_limits<int>::min();
  std::vector<std::int64_t> f1;
  std::vector<int> devs;
  const double need = (1.0 - cfg.params.a) * n * n;
  const int level_max = static_cast<int>(std::floor(2.0 * cfg.params.lambda * n));
  for_each_sample(cfg, n, [&](const HeightField& f, std::int64_t, std::int64_t) {
    ++r.samples;
    const auto l = oracle_facet_level(f, cfg.params.a);
    if (!l) {
      ++r.degenerate;
      devs.push_back(std::numeric_limits<int>::max());
      return;
    }
    const auto report = facet_report(f, cfg.params);
    const std::int64_t f2 = count_at_least(f, *l - 1), f1_area = count_at_least(f, *l);
    r.mismatches += report.level != *l || report.f2_area != f2 || report.f1_area != f1_area;
    r.big_f2 += static_cast<double>(f2) >= need;
    r.level_violations += *l < 2 || *l > level_max;
    r.level_lo = std::min(r.level_lo, *l);
    r.level_hi = std::max(r.level_hi, *l);
    f1.push_back(f1_area);
    devs.push_back(max_deviation_in_f2(f, cfg.params));
  });
  if (!f1.empty()) r.median_f1 = experiment::quantile(f1, 0.5);
  r.q99 = experiment::quantile(devs, 0.99);
  r.max_dev = experiment::quantile(devs, 1.0);
  return r;
}

Outcome criterion5() {
  bool pass = true;
  std::string detail;
  for (int n : {16, 32}) {
    const auto r = facet_run(n);
    const double frac = static_cast<double>(r.big_f2) / static_cast<double>(r.samples);
    pass = pass && r.degenerate == 0 && r.mismatches == 0 && frac >= 0.95;
    detail += fmt("N=%d samples=%lld frac(|F2|>=(1-a)N^2)=%.4f median|F1|=%lld degenerate=%lld; ", n,
                  static_cast<long long>(r.samples), frac, static_cast<long long>(r.median_f1),
                  static_cast<long long>(r.degenerate));
  }
  return {pass, detail};
}

Outcome criterion6() {
  std::vector<FacetRun> runs;
  for (int n : {16, 32, 64}) runs.push_back(facet_run(n));
  bool nondecreasing = true;
  double c = 0.0;
  std::string detail;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (i > 0 && runs[i].q99 < runs[i - 1].q99) nondecreasing = false;
    c = std::max(c, runs[i].q99 / std::log(static_cast<double>(runs[i].n)));
    detail += fmt("N=%d q99=%d max=%d; ", runs[i].n, runs[i].q99, runs[i].max_dev);
  }
  detail += fmt("fitted C=%.4f (<= 3) nondecreasing=%d", c, nondecreasing ? 1 : 0);
  return {nondecreasing && c <= 3.0, detail};
}

Outcome criterion7() {
  bool pass = true;
  std::string detail;
  for (int n : {16, 32}) {
    const auto r = facet_run(n);
    pass = pass && r.level_violations == 0 && r.degenerate == 0;
    detail += fmt("N=%d L in [%d, %d] allowed [2, %d] violations=%lld; ", n, r.level_lo, r.level_hi, n,
                  static_cast<long long>(r.level_violations + r.degenerate));
  }
  return {pass, detail};
}

Outcome criterion8() {
  Rng rng(8080);
  ModelParams p;
  p.a = 0.1;
  std::int64_t checked = 0, violations = 0, skipped = 0;
  while (checked < 10'000) {
    std::vector<int> h(36);
    for (auto& v : h) v = static_cast<int>(rng() % 4);
    const HeightField f(6, std::vector<Height>(h.begin(), h.end()));
    const auto l = facet_level(f, p.a);
    if (!l) {
      ++skipped;
      continue;
    }
    std::vector<Contour> ext;
    std::int64_t total = 0;
    for (const auto& c : contours_of(f, *l).contours)
      if (c.external) {
        ext.push_back(c);
        total += c.length;
      }
    const auto g = erase(f, ext);
    const std::vector<int> gh(g.heights().begin(), g.heights().end());
    violations += oracle_energy(gh, 6) != oracle_energy(h, 6) - total;
    ++checked;
  }
  return {violations == 0, fmt("fields=%lld violations=%lld skipped_without_facet=%lld", static_cast<long long>(checked),
                               static_cast<long long>(violations), static_cast<long long>(skipped))};
}

Outcome criterion9() {
  double worst = 0.0;
  int worst_n = 0;
  const int draws = 1'000'000;
  for (int n = 1; n <= 12; ++n) {
    std::vector<std::vector<int>> all;
    std::vector<int> cur;
    partitions_into(n, n, cur, all);
    std::map<std::vector<int>, std::int64_t> freq;
    for (auto& q : all) {
      std::sort(q.rbegin(), q.rend());
      freq[q] = 0;
    }
    Rng rng(experiment::derive_seed(9, static_cast<std::uint64_t>(n)));
    std::int64_t strays = 0;
    for (int i = 0; i < draws; ++i) {
      const auto d = sample_partition(n, rng);
      auto it = freq.find(d.parts);
      if (it == freq.end()) ++strays;
      else ++it->second;
    }
    if (strays) return {false, fmt("n=%d produced %lld non-partitions", n, static_cast<long long>(strays))};
    const double u = 1.0 / static_cast<double>(all.size());
    for (const auto& [q, c] : freq) {
      const double dev = std::abs(static_cast<double>(c) / draws - u);
      if (dev > worst) {
        worst = dev;
        worst_n = n;
      }
    }
  }
  return {worst < 3e-3, fmt("draws=%d per n, max |freq - 1/p(n)|=%.5f (< 3e-3) at n=%d", draws, worst, worst_n)};
}

Outcome criterion10() {
  auto mean_dev = [](int n) {
    Rng rng(experiment::derive_seed(10, static_cast<std::uint64_t>(n)));
    double s = 0.0;
    for (int i = 0; i < 200; ++i) s += profile_deviation(sample_partition(n, rng));
    return s / 200.0;
  };
  const double m3 = mean_dev(1000), m5 = mean_dev(100'000);
  const double sym = vershik_symmetric_point();
  const double expected = std::sqrt(6.0) / 3.14159265358979323846 * std::log(2.0);
  const double err = std::abs(sym - expected);
  const bool on_curve = std::abs(vershik_curve(sym) - sym) <= 1e-12;
  return {m5 < 0.05 && m5 < m3 && err <= 1e-12 && on_curve,
          fmt("mean dev n=1e3: %.4f, n=1e5: %.4f (< 0.05); symmetric point %.15f err=%.1e", m3, m5, sym, err)};
}

Outcome criterion11() {
  // c from a direct zeta(3) sum with Euler-Maclaurin tail, in long double.
  long double zeta = 0.0L;
  const int m = 200'000;
  for (int k = m; k >= 1; --k) zeta += 1.0L / (static_cast<long double>(k) * k * k);
  const long double mm = m;
  zeta += 1.0L / (2.0L * mm * mm) - 1.0L / (2.0L * mm * mm * mm) + 1.0L / (4.0L * mm * mm * mm * mm);
  const long double pi = 3.141592653589793238462643383279502884L;
  const long double c = 2048.0L * 27.0L * zeta * zeta / std::pow(pi, 6.0L);

  double worst = 0.0;
  Big x6;
  for (double k : {1e2, 1e3, 1e4, 1e5, 1e6}) {
    const Big kb = k;
    const Big x = solve_monolayer_x<Big>(kb);
    worst = std::max(worst, static_cast<double>(abs(monolayer_residual<Big>(kb, x))));
    if (k == 1e6) x6 = x;
  }
  const double ratio = static_cast<double>(x6 / boost::multiprecision::cbrt(Big(1e12)));
  const double leading = static_cast<double>(1.0L / std::cbrt(c));
  const double rel = std::abs(ratio / leading - 1.0);
  const double c_diff = std::abs(static_cast<double>(monolayer_constant<Big>()) - static_cast<double>(c));
  return {worst < 1e-9 && rel <= 0.02 && c_diff < 1e-12,
          fmt("max residual=%.2e (< 1e-9) x(1e6)/k^(2/3)=%.6f c^(-1/3)=%.6f rel=%.4f c=%.12f |c-c_lib|=%.1e", worst,
              ratio, leading, rel, static_cast<double>(c), c_diff)};
}

Outcome criterion12() {
  const double a = 0.1, c1 = default_c1(10.0), c2 = 80.0;
  double worst = 0.0;
  int checked = 0;
  bool table_ok = true;
  for (int n : {100, 10'000}) {
    const auto t = scale_table(n, a, c1, c2);
    const double ln_n = std::log(static_cast<double>(n));
    const double v0 = a * n * n;
    const double r_prime = std::log2(v0 / (c1 * ln_n * ln_n));
    table_ok = table_ok && std::abs(t.r_prime - r_prime) < 1e-12;
    for (std::size_t r = 0; r + 1 < t.v_r.size(); ++r) {
      table_ok = table_ok && t.v_r[r] == v0 / std::pow(2.0, static_cast<double>(r));
      if (static_cast<double>(r) < r_prime) continue;
      const double h = c2 * std::pow(2.0, r / 2.0) * ln_n / n;
      table_ok = table_ok && std::abs(t.h_r[r] - h) <= 1e-12 * h;
      const double lhs = std::sqrt(t.v_r[r + 1]) * t.h_r[r];
      const double rhs = std::sqrt(a / 2.0) * c2 * ln_n;
      worst = std::max(worst, std::abs(lhs - rhs) / rhs);
      ++checked;
    }
  }
  bool rejected = false;
  try {
    (void)experiment::resolve_config(nullptr, {"scales.c2=20"});
  } catch (const ContractViolation&) {
    rejected = true;
  }
  bool accepted = true;
  try {
    (void)experiment::resolve_config(nullptr);
  } catch (const ContractViolation&) {
    accepted = false;
  }
  return {worst <= 1e-9 && checked > 0 && table_ok && rejected && accepted,
          fmt("identity rows=%d max rel err=%.2e (<= 1e-9); bound<10 rejected=%d default accepted=%d", checked, worst,
              rejected ? 1 : 0, accepted ? 1 : 0)};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "perimeter formula vs polyomino oracle", 60, criterion1},
      {2, "square-root bounds scan", 5, criterion2},
      {3, "droplet transfer certification", 60, criterion3},
      {4, "sampler exactness", 120, criterion4},
      {5, "second facet surrogate", 900, criterion5},
      {6, "no hairs surrogate", 1800, criterion6},
      {7, "height localization", 900, criterion7},
      {8, "erasing map identity", 10, criterion8},
      {9, "partition uniformity", 120, criterion9},
      {10, "Vershik convergence", 300, criterion10},
      {11, "monolayer solver", 1, criterion11},
      {12, "scale identities", 1, criterion12},
  };
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--criterion" && i + 1 < argc) only = std::atoi(argv[++i]);
    else {
      std::fprintf(stderr, "usage: %s [--criterion K]\n", argv[0]);
      return 1;
    }
  }
  bool all_pass = true;
  int ran = 0;
  for (const auto& c : all) {
    if (only != 0 && c.id != only) continue;
    ++ran;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = o.pass && in_time;
    all_pass = all_pass && pass;
    std::printf("criterion %2d %s: %s [%.2fs / %.0fs] %s%s\n", c.id, pass ? "PASS" : "FAIL", c.name, secs, c.budget_s,
                o.detail.c_str(), in_time ? "" : " (over time budget)");
    std::fflush(stdout);
  }
  if (ran == 0) {
    std::fprintf(stderr, "no criterion %d\n", only);
    return 1;
  }
  return all_pass ? 0 : 1;
}
