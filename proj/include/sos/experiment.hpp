#pragma once

// Configured, reproducible runs behind the sos command-line tool. Every
// command takes a resolved configuration, writes its tables into an output
// directory and reports whether its built-in checks passed.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <nlohmann/json.hpp>

#include "sos/errors.hpp"
#include "sos/hairs.hpp"
#include "sos/height_field.hpp"
#include "sos/isoperimetry.hpp"
#include "sos/levelsets.hpp"
#include "sos/markov.hpp"
#include "sos/partitions.hpp"
#include "sos/sampler.hpp"

namespace sos::experiment {

using nlohmann::json;
namespace fs = std::filesystem;

inline constexpr int kSchemaVersion = 1;

/// Thrown when an output file cannot be written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Configuration ---------------------------------------------------------------

inline json default_config() {
  return json::parse(R"({
    "model": {"beta": 3.0, "lambda": 0.5, "a": 0.1, "k_large": 10.0},
    "sampler": {"sizes": [16], "sweeps": 20000, "burn_in": 2000, "thin": 10, "seed": 1,
                "height_floor": null, "height_ceiling": null, "write_fields": true},
    "scales": {"sizes": [100, 10000], "c1": null, "c2": 80.0},
    "isoperimetry": {"oracle_max": 12, "table_max": 100, "scan_max": 1000000,
                     "transfer_sizes": [50, 100, 200], "rho": 0.1, "kappa_min": 0.01},
    "vershik": {"sizes": [1000, 10000, 100000], "samples": 200, "seed": 1, "mean_max": 0.05,
                "profiles": 1, "curve_points": 200,
                "monolayer_k": [100, 1000, 10000, 100000, 1000000],
                "residual_max": 1e-9, "ratio_tol": 0.02},
    "oracle": {"n": 2, "h_min": 0, "h_max": 3, "beta": 1.0, "lambda": 0.5,
               "samples": 1000000, "burn_in": 1000, "thin": 5, "seed": 1, "tv_max": 0.02,
               "balance_tol": 1e-12,
               "partition_max_n": 12, "partition_draws": 1000000, "partition_tol": 0.003},
    "checks": {"enforce": true, "f2_fraction_min": 0.95, "hair_c_max": 3.0, "level_min": 2},
    "input": null
  })");
}

struct SimulateSection {
  std::vector<int> sizes;
  std::int64_t sweeps = 0, burn_in = 0, thin = 1;
  std::uint64_t seed = 1;
  std::optional<Height> height_floor, height_ceiling;
  bool write_fields = true;
};

struct ScalesSection {
  std::vector<int> sizes;
  std::optional<double> c1;
  double c2 = 80.0;
};

struct IsoSection {
  int oracle_max = 12;
  std::int64_t table_max = 100;
  std::int64_t scan_max = 1'000'000;
  std::vector<int> transfer_sizes;
  double rho = 0.1;
  double kappa_min = 0.01;
};

struct VershikSection {
  std::vector<int> sizes;
  int samples = 200;
  std::uint64_t seed = 1;
  double mean_max = 0.05;
  int profiles = 1;
  int curve_points = 200;
  std::vector<double> monolayer_k;
  double residual_max = 1e-9;
  double ratio_tol = 0.02;
};

struct OracleSection {
  int n = 2;
  Height h_min = 0, h_max = 3;
  double beta = 1.0, lambda = 0.5;
  std::int64_t samples = 1'000'000, burn_in = 1000, thin = 5;
  std::uint64_t seed = 1;
  double tv_max = 0.02;
  double balance_tol = 1e-12;
  int partition_max_n = 12;
  std::int64_t partition_draws = 1'000'000;
  double partition_tol = 0.003;
};

struct ChecksSection {
  bool enforce = true;
  double f2_fraction_min = 0.95;
  double hair_c_max = 3.0;
  int level_min = 2;
};

struct ExperimentConfig {
  ModelParams model;
  SimulateSection sampler;
  ScalesSection scales;
  IsoSection isoperimetry;
  VershikSection vershik;
  OracleSection oracle;
  ChecksSection checks;
  std::optional<std::string> input;
  json resolved;  // the full merged document, echoed into every output

  double c1() const { return scales.c1.value_or(default_c1(model.k_large)); }
};

namespace detail {

template <class T>
std::optional<T> opt(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<T>();
}

/// Rejects keys that do not exist in the defaults, so typos fail loudly.
inline void check_known_keys(const json& given, const json& known, const std::string& path) {
  if (!given.is_object()) return;
  for (const auto& [k, v] : given.items()) {
    const std::string here = path.empty() ? k : path + "." + k;
    if (!known.is_object() || !known.contains(k)) throw ContractViolation("config: unknown key '" + here + "'");
    if (known.at(k).is_object()) check_known_keys(v, known.at(k), here);
  }
}

/// Recursive overlay; unlike a JSON merge patch, null is kept as a value.
inline void overlay(json& doc, const json& patch) {
  for (const auto& [k, v] : patch.items()) {
    if (v.is_object() && doc[k].is_object()) overlay(doc[k], v);
    else doc[k] = v;
  }
}

inline void check_sizes(const std::vector<int>& sizes, int lo, const std::string& what) {
  sos::detail::require(!sizes.empty(), what + ": at least one size is required");
  for (int n : sizes) sos::detail::require(n >= lo, what + ": size below " + std::to_string(lo));
}

}  // namespace detail

/// Applies one `key.path=value` override. The value is parsed as JSON when
/// possible and taken as a string otherwise.
inline void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  sos::detail::require(eq != std::string::npos && eq > 0, "override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json* node = &doc;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    sos::detail::require(node->is_object() && node->contains(part), "config: unknown key '" + key + "'");
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = std::move(value);
}

/// Merges `file` over the defaults, applies overrides in order, then parses
/// and validates every section.
inline ExperimentConfig resolve_config(const json& file, const std::vector<std::string>& overrides = {}) {
  json doc = default_config();
  if (!file.is_null()) {
    sos::detail::require(file.is_object(), "config: top level must be an object");
    detail::check_known_keys(file, doc, "");
    detail::overlay(doc, file);
  }
  for (const auto& o : overrides) apply_override(doc, o);

  ExperimentConfig c;
  try {
    const auto& m = doc.at("model");
    c.model = {m.at("beta").get<double>(), m.at("lambda").get<double>(), m.at("a").get<double>(),
               m.at("k_large").get<double>()};
    const auto& s = doc.at("sampler");
    c.sampler = {s.at("sizes").get<std::vector<int>>(), s.at("sweeps").get<std::int64_t>(),
                 s.at("burn_in").get<std::int64_t>(), s.at("thin").get<std::int64_t>(),
                 s.at("seed").get<std::uint64_t>(), detail::opt<Height>(s.at("height_floor")),
                 detail::opt<Height>(s.at("height_ceiling")), s.at("write_fields").get<bool>()};
    const auto& sc = doc.at("scales");
    c.scales = {sc.at("sizes").get<std::vector<int>>(), detail::opt<double>(sc.at("c1")), sc.at("c2").get<double>()};
    const auto& iso = doc.at("isoperimetry");
    c.isoperimetry = {iso.at("oracle_max").get<int>(), iso.at("table_max").get<std::int64_t>(),
                      iso.at("scan_max").get<std::int64_t>(), iso.at("transfer_sizes").get<std::vector<int>>(),
                      iso.at("rho").get<double>(), iso.at("kappa_min").get<double>()};
    const auto& v = doc.at("vershik");
    c.vershik = {v.at("sizes").get<std::vector<int>>(), v.at("samples").get<int>(), v.at("seed").get<std::uint64_t>(),
                 v.at("mean_max").get<double>(), v.at("profiles").get<int>(), v.at("curve_points").get<int>(),
                 v.at("monolayer_k").get<std::vector<double>>(), v.at("residual_max").get<double>(),
                 v.at("ratio_tol").get<double>()};
    const auto& o = doc.at("oracle");
    c.oracle = {o.at("n").get<int>(), o.at("h_min").get<Height>(), o.at("h_max").get<Height>(),
                o.at("beta").get<double>(), o.at("lambda").get<double>(), o.at("samples").get<std::int64_t>(),
                o.at("burn_in").get<std::int64_t>(), o.at("thin").get<std::int64_t>(), o.at("seed").get<std::uint64_t>(),
                o.at("tv_max").get<double>(), o.at("balance_tol").get<double>(), o.at("partition_max_n").get<int>(),
                o.at("partition_draws").get<std::int64_t>(), o.at("partition_tol").get<double>()};
    const auto& ch = doc.at("checks");
    c.checks = {ch.at("enforce").get<bool>(), ch.at("f2_fraction_min").get<double>(),
                ch.at("hair_c_max").get<double>(), ch.at("level_min").get<int>()};
    c.input = detail::opt<std::string>(doc.at("input"));
  } catch (const json::exception& e) {
    throw ContractViolation(std::string("config: ") + e.what());
  }

  c.model.validate();
  SamplerConfig probe;
  probe.params = c.model;
  probe.sweeps = c.sampler.sweeps;
  probe.burn_in = c.sampler.burn_in;
  probe.thin = c.sampler.thin;
  probe.height_floor = c.sampler.height_floor;
  probe.height_ceiling = c.sampler.height_ceiling;
  probe.validate();
  detail::check_sizes(c.sampler.sizes, 2, "sampler.sizes");
  detail::check_sizes(c.scales.sizes, 2, "scales.sizes");
  sos::detail::require(!c.scales.c1 || *c.scales.c1 > 0.0, "scales.c1 must be positive");
  sos::detail::require(c.scales.c2 > 0.0, "scales.c2 must be positive");
  sos::detail::require(std::sqrt(c.model.a / c.c1()) * c.scales.c2 >= 10.0,
                       "scales: sqrt(a / c1) * c2 must be at least 10");
  sos::detail::require(c.isoperimetry.oracle_max >= 1 && c.isoperimetry.oracle_max <= PolyominoOracle::kMaxCells,
                       "isoperimetry.oracle_max must lie in 1..12");
  sos::detail::require(c.isoperimetry.table_max >= 1, "isoperimetry.table_max must be positive");
  sos::detail::require(c.isoperimetry.scan_max >= 1 && c.isoperimetry.scan_max <= 1'000'000'000,
                       "isoperimetry.scan_max must lie in 1..1e9");
  detail::check_sizes(c.isoperimetry.transfer_sizes, 1, "isoperimetry.transfer_sizes");
  sos::detail::require(c.isoperimetry.rho > 0.0 && c.isoperimetry.rho < 1.0, "isoperimetry.rho must lie in (0, 1)");
  detail::check_sizes(c.vershik.sizes, 1, "vershik.sizes");
  sos::detail::require(c.vershik.samples >= 1, "vershik.samples must be positive");
  sos::detail::require(c.vershik.profiles >= 0 && c.vershik.profiles <= c.vershik.samples,
                       "vershik.profiles must lie in 0..samples");
  sos::detail::require(c.vershik.curve_points >= 2, "vershik.curve_points must be at least 2");
  for (double k : c.vershik.monolayer_k) sos::detail::require(k > 0.0, "vershik.monolayer_k must be positive");
  sos::detail::require(c.oracle.n >= 1 && c.oracle.n <= 3, "oracle.n must lie in 1..3");
  sos::detail::require(c.oracle.h_min <= 0 && c.oracle.h_max >= 0 && c.oracle.h_min <= c.oracle.h_max,
                       "oracle: [h_min, h_max] must contain the boundary height 0");
  sos::detail::require(c.oracle.beta > 0.0 && c.oracle.lambda >= 0.0, "oracle: beta > 0, lambda >= 0 required");
  sos::detail::require(c.oracle.samples >= 1 && c.oracle.thin >= 1 && c.oracle.burn_in >= 0,
                       "oracle: samples, thin must be positive and burn_in nonnegative");
  sos::detail::require(c.oracle.partition_max_n >= 1 && c.oracle.partition_max_n <= 30,
                       "oracle.partition_max_n must lie in 1..30");
  sos::detail::require(c.oracle.partition_draws >= 1, "oracle.partition_draws must be positive");
  c.resolved = std::move(doc);
  return c;
}

// Output ----------------------------------------------------------------------

/// Shortest round-trip decimal form; identical across runs and platforms.
inline std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

template <class T>
std::string num(T x) requires std::is_integral_v<T> {
  return std::to_string(x);
}

/// CSV table with a schema comment line and a config comment line.
class Csv {
 public:
  Csv(const std::string& schema, const json& config, std::vector<std::string> columns) {
    out_ << "# schema: " << schema << "/" << kSchemaVersion << "\n";
    out_ << "# config: " << config.dump() << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
    out_ << "\n";
  }

  template <class... Cells>
  void row(const Cells&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
    out_ << "\n";
  }

  std::string str() const { return out_.str(); }

 private:
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(bool b) { return b ? "1" : "0"; }
  static std::string cell(double x) { return num(x); }
  template <class T>
  static std::string cell(T x) requires std::is_integral_v<T> {
    return std::to_string(x);
  }

  std::ostringstream out_;
};

class OutputDir {
 public:
  explicit OutputDir(fs::path root) : root_(std::move(root)) {
    std::error_code ec;
    fs::create_directories(root_, ec);
    if (ec) throw IoError("cannot create output directory " + root_.string() + ": " + ec.message());
  }

  void write(const std::string& name, const std::string& content) const {
    std::ofstream f(root_ / name, std::ios::binary);
    f << content;
    if (!f) throw IoError("cannot write " + (root_ / name).string());
  }

  void write_json(const std::string& name, const json& j) const { write(name, j.dump(2) + "\n"); }

  const fs::path& root() const { return root_; }

 private:
  fs::path root_;
};

inline json with_header(const std::string& schema, const ExperimentConfig& c, json body) {
  json j;
  j["schema"] = schema + "/" + std::to_string(kSchemaVersion);
  j["config"] = c.resolved;
  for (auto& [k, v] : body.items()) j[k] = std::move(v);
  return j;
}

// Statistics helpers ----------------------------------------------------------

/// Nearest-rank quantile of a sample (q in (0, 1]).
template <class T>
T quantile(std::vector<T> xs, double q) {
  sos::detail::require(!xs.empty(), "quantile: empty sample");
  std::sort(xs.begin(), xs.end());
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(xs.size())));
  rank = std::clamp<std::size_t>(rank, 1, xs.size());
  return xs[rank - 1];
}

/// Distinct, reproducible per-size seed derived from the base seed (splitmix64).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct CommandResult {
  bool passed = true;
  json summary;
};

// simulate --------------------------------------------------------------------

struct SampleAnalysis {
  std::optional<FacetReport> facet;
  int max_deviation = 0;
  std::vector<Hair> hairs;
};

inline SampleAnalysis analyze_field(const HeightField& f, const ModelParams& p) {
  SampleAnalysis a;
  if (!facet_level(f, p.a)) return a;
  a.facet = facet_report(f, p);
  a.max_deviation = max_deviation_in_f2(f, p);
  a.hairs = extract_hairs(f, p);
  return a;
}

inline std::vector<std::string> sample_columns() {
  return {"sweep", "energy", "volume", "level", "f1_area", "f2_area", "e2_area",
          "small_volume", "large_volume", "max_deviation", "up_hairs", "down_hairs", "max_hair"};
}

inline void sample_row(Csv& csv, std::int64_t sweep, const HeightField& f, std::int64_t v,
                       const SampleAnalysis& a) {
  int up = 0, down = 0;
  for (const auto& h : a.hairs) (h.direction == HairDirection::Up ? up : down) += 1;
  if (!a.facet) {
    csv.row(sweep, energy(f), v, "", "", "", "", "", "", "", "", "", "");
    return;
  }
  const auto& r = *a.facet;
  csv.row(sweep, energy(f), v, r.level, r.f1_area, r.f2_area, r.e2_area, r.small_volume, r.large_volume,
          a.max_deviation, up, down, max_hair_length(a.hairs));
}

inline void hair_rows(Csv& csv, std::int64_t sweep, const SampleAnalysis& a) {
  for (const auto& h : a.hairs)
    csv.row(sweep, to_string(h.direction), h.length, h.contours.front().interior_area);
}

inline CommandResult cmd_simulate(const ExperimentConfig& c, const OutputDir& out) {
  CommandResult res;
  json runs = json::array();
  std::vector<std::pair<int, int>> q99;  // (N, 99th percentile of max deviation)
  bool second_facet = true, localization = true;

  for (std::size_t idx = 0; idx < c.sampler.sizes.size(); ++idx) {
    const int n = c.sampler.sizes[idx];
    SamplerConfig cfg;
    cfg.params = c.model;
    cfg.sweeps = c.sampler.sweeps;
    cfg.burn_in = c.sampler.burn_in;
    cfg.thin = c.sampler.thin;
    cfg.seed = derive_seed(c.sampler.seed, static_cast<std::uint64_t>(n));
    const auto [lo, hi] = default_height_bounds(c.model.lambda, n);
    cfg.height_floor = c.sampler.height_floor.value_or(lo);
    cfg.height_ceiling = c.sampler.height_ceiling.value_or(hi);

    const std::string tag = "N" + std::to_string(n);
    Csv samples("sos-samples", c.resolved, sample_columns());
    Csv hairs("sos-hairs", c.resolved, {"sweep", "direction", "length", "first_area"});
    std::ostringstream chain, fields;
    chain << json{{"schema", "sos-chain/" + std::to_string(kSchemaVersion)}, {"config", c.resolved}, {"n", n},
                  {"seed", cfg.seed}}.dump()
          << "\n";
    if (c.sampler.write_fields)
      fields << json{{"schema", "sos-fields/" + std::to_string(kSchemaVersion)}, {"config", c.resolved},
                     {"n", n}}.dump()
             << "\n";

    std::int64_t count = 0, big_f2 = 0, degenerate = 0, bad_level = 0;
    int level_lo = std::numeric_limits<int>::max(), level_hi = std::numeric_limits<int>::min();
    std::vector<int> devs;
    std::vector<std::int64_t> f1s;
    int longest = 0;
    const double f2_need = (1.0 - c.model.a) * static_cast<double>(n) * n;
    const int level_max = static_cast<int>(std::floor(2.0 * c.model.lambda * n));

    const SweepStats stats = for_each_sample(cfg, n, [&](const HeightField& f, std::int64_t s, std::int64_t v) {
      ++count;
      const SampleAnalysis a = analyze_field(f, c.model);
      sample_row(samples, s, f, v, a);
      hair_rows(hairs, s, a);
      json rec{{"sweep", s}, {"energy", energy(f)}, {"volume", v}, {"field_ref", nullptr}};
      if (c.sampler.write_fields) {
        rec["field_ref"] = "fields_" + tag + ".ndjson:" + std::to_string(count + 1);
        fields << json{{"sweep", s}, {"field", f}}.dump() << "\n";
      }
      chain << rec.dump() << "\n";
      if (!a.facet) {
        ++degenerate;
        devs.push_back(std::numeric_limits<int>::max());
        return;
      }
      const auto& r = *a.facet;
      if (static_cast<double>(r.f2_area) >= f2_need) ++big_f2;
      if (r.level < c.checks.level_min || r.level > level_max) ++bad_level;
      level_lo = std::min(level_lo, r.level);
      level_hi = std::max(level_hi, r.level);
      devs.push_back(a.max_deviation);
      f1s.push_back(r.f1_area);
      longest = std::max(longest, max_hair_length(a.hairs));
    });

    out.write("samples_" + tag + ".csv", samples.str());
    out.write("hairs_" + tag + ".csv", hairs.str());
    out.write("chain_" + tag + ".ndjson", chain.str());
    if (c.sampler.write_fields) out.write("fields_" + tag + ".ndjson", fields.str());

    json run{{"n", n}, {"seed", cfg.seed}, {"height_floor", *cfg.height_floor},
             {"height_ceiling", *cfg.height_ceiling}, {"samples", count}, {"degenerate", degenerate},
             {"proposals", stats.proposals}, {"accepted", stats.accepted},
             {"uphill_accepted", stats.uphill_accepted}, {"rejected_constraint", stats.rejected_constraint},
             {"rejected_bounds", stats.rejected_bounds}};
    if (count > 0) {
      const double frac = static_cast<double>(big_f2) / static_cast<double>(count);
      run["f2_fraction"] = frac;
      run["level_violations"] = bad_level + degenerate;
      second_facet = second_facet && degenerate == 0 && frac >= c.checks.f2_fraction_min;
      localization = localization && bad_level + degenerate == 0;
      if (!f1s.empty()) {
        run["median_f1"] = quantile(f1s, 0.5);
        run["level_min"] = level_lo;
        run["level_max"] = level_hi;
      }
      const int p99 = quantile(devs, 0.99);
      run["deviation_quantiles"] = {{"q50", quantile(devs, 0.5)}, {"q90", quantile(devs, 0.9)},
                                    {"q99", p99}, {"max", quantile(devs, 1.0)}};
      run["max_hair_length"] = longest;
      q99.emplace_back(n, p99);
    } else {
      second_facet = localization = false;
    }
    runs.push_back(run);
  }

  std::sort(q99.begin(), q99.end());
  bool nondecreasing = true;
  double fitted_c = 0.0;
  for (std::size_t i = 0; i < q99.size(); ++i) {
    if (i > 0 && q99[i].second < q99[i - 1].second) nondecreasing = false;
    fitted_c = std::max(fitted_c, q99[i].second / std::log(static_cast<double>(q99[i].first)));
  }
  const bool no_hairs = !q99.empty() && nondecreasing && fitted_c <= c.checks.hair_c_max;
  res.passed = second_facet && localization && no_hairs;
  res.summary = with_header("sos-simulate-summary", c,
                            {{"runs", runs},
                             {"checks",
                              {{"second_facet", {{"pass", second_facet}, {"threshold", c.checks.f2_fraction_min}}},
                               {"localization", {{"pass", localization}, {"level_min", c.checks.level_min}}},
                               {"no_hairs",
                                {{"pass", no_hairs}, {"fitted_c", fitted_c},
                                 {"q99_nondecreasing", nondecreasing}, {"c_max", c.checks.hair_c_max}}}}},
                             {"passed", res.passed}});
  out.write_json("summary.json", res.summary);
  return res;
}

// analyze ---------------------------------------------------------------------

/// Reads fields from an NDJSON file written by simulate (one {"sweep", "field"}
/// record per line after the header) or from a single grid file.
inline std::vector<std::pair<std::int64_t, HeightField>> load_fields(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<std::pair<std::int64_t, HeightField>> out;
  if (path.extension() == ".ndjson") {
    std::string line;
    std::int64_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded()) throw ContractViolation(path.string() + ":" + std::to_string(lineno) + ": bad JSON");
      if (j.contains("schema")) continue;
      try {
        out.emplace_back(j.at("sweep").get<std::int64_t>(), j.at("field").get<HeightField>());
      } catch (const json::exception& e) {
        throw ContractViolation(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
      }
    }
  } else {
    out.emplace_back(0, read_grid(in, 0));
  }
  return out;
}

inline CommandResult cmd_analyze(const ExperimentConfig& c, const OutputDir& out) {
  sos::detail::require(c.input.has_value(), "analyze: an input file is required");
  const auto fields = load_fields(*c.input);
  Csv samples("sos-samples", c.resolved, sample_columns());
  Csv hairs("sos-hairs", c.resolved, {"sweep", "direction", "length", "first_area"});
  std::int64_t degenerate = 0;
  for (const auto& [s, f] : fields) {
    const auto a = analyze_field(f, c.model);
    degenerate += a.facet ? 0 : 1;
    sample_row(samples, s, f, volume(f), a);
    hair_rows(hairs, s, a);
  }
  out.write("analysis.csv", samples.str());
  out.write("hairs.csv", hairs.str());
  CommandResult res;
  res.summary = with_header("sos-analyze-summary", c,
                            {{"input", *c.input}, {"fields", fields.size()}, {"degenerate", degenerate},
                             {"passed", true}});
  out.write_json("summary.json", res.summary);
  return res;
}

// hairs -----------------------------------------------------------------------

inline CommandResult cmd_hairs(const ExperimentConfig& c, const OutputDir& out) {
  CommandResult res;
  json tables = json::array();
  double worst = 0.0;
  for (int n : c.scales.sizes) {
    const auto t = scale_table(n, c.model.a, c.c1(), c.scales.c2);
    const double ln_n = std::log(static_cast<double>(n));
    const double rhs = std::sqrt(c.model.a / 2.0) * c.scales.c2 * ln_n;
    Csv csv("sos-scales", c.resolved, {"r", "v_r", "h_r", "large_regime", "identity_lhs", "identity_rhs", "rel_err"});
    for (std::size_t r = 0; r < t.v_r.size(); ++r) {
      const bool large = static_cast<double>(r) >= t.r_prime;
      if (large && r + 1 < t.v_r.size()) {
        const double lhs = std::sqrt(t.v_r[r + 1]) * t.h_r[r];
        const double err = std::abs(lhs - rhs) / rhs;
        worst = std::max(worst, err);
        csv.row(static_cast<int>(r), t.v_r[r], t.h_r[r], large, lhs, rhs, err);
      } else {
        csv.row(static_cast<int>(r), t.v_r[r], t.h_r[r], large, "", "", "");
      }
    }
    out.write("scales_N" + std::to_string(n) + ".csv", csv.str());
    tables.push_back({{"n", n}, {"r_max", t.r_max}, {"r_prime", t.r_prime}, {"h_sum", t.h_sum},
                      {"c3", t.c3}, {"h_at_r_prime", t.h_at_r_prime}});
  }
  const bool identity = worst <= 1e-9;
  json summary{{"scales", tables}, {"c1", c.c1()}, {"c2", c.scales.c2},
               {"checks", {{"identity", {{"pass", identity}, {"max_rel_err", worst}}}}}};

  if (c.input) {
    const auto fields = load_fields(*c.input);
    Csv csv("sos-hairs", c.resolved, {"sweep", "direction", "length", "first_area"});
    int longest = 0;
    for (const auto& [s, f] : fields) {
      const auto a = analyze_field(f, c.model);
      hair_rows(csv, s, a);
      longest = std::max(longest, max_hair_length(a.hairs));
    }
    out.write("hairs.csv", csv.str());
    summary["input"] = *c.input;
    summary["max_hair_length"] = longest;
  }
  res.passed = identity;
  summary["passed"] = res.passed;
  res.summary = with_header("sos-hairs-summary", c, summary);
  out.write_json("summary.json", res.summary);
  return res;
}

// isoperimetry ----------------------------------------------------------------

inline CommandResult cmd_isoperimetry(const ExperimentConfig& c, const OutputDir& out) {
  const auto& ic = c.isoperimetry;
  const PolyominoOracle oracle(ic.oracle_max);
  Csv table("sos-perimeter", c.resolved, {"v", "L", "r", "p", "oracle_p", "bounds_ok"});
  bool oracle_equal = true;
  for (std::int64_t v = 1; v <= std::max<std::int64_t>(ic.table_max, ic.oracle_max); ++v) {
    const auto [l, r] = iso_decompose(v);
    const auto p = min_perimeter(v);
    if (v <= ic.oracle_max) {
      const int q = oracle.min_perimeter(static_cast<int>(v));
      oracle_equal = oracle_equal && q == p;
      table.row(v, l, r, p, q, sqrt_bounds_check(v));
    } else {
      table.row(v, l, r, p, "", sqrt_bounds_check(v));
    }
  }
  out.write("perimeter.csv", table.str());

  std::int64_t violations = 0;
  json first_violation = nullptr;
  for (std::int64_t v = 1; v <= ic.scan_max; ++v)
    if (!sqrt_bounds_check(v)) {
      if (violations++ == 0) first_violation = v;
    }

  Csv transfer("sos-transfer", c.resolved,
               {"n", "rho", "step", "triples", "negative", "nonpositive", "min_gain", "kappa", "worst_gain_v1",
                "worst_gain_v2", "worst_gain_d", "worst_kappa_v1", "worst_kappa_v2", "worst_kappa_d"});
  bool transfer_ok = true;
  json certs = json::array();
  for (int n : ic.transfer_sizes) {
    const auto cert = certify_transfer(n, ic.rho);
    const bool ok = cert.min_gain > 0 && cert.kappa > ic.kappa_min;
    transfer_ok = transfer_ok && ok;
    transfer.row(n, ic.rho, cert.step, cert.triples, cert.negative, cert.nonpositive, cert.min_gain, cert.kappa,
                 cert.worst_gain.v1, cert.worst_gain.v2, cert.worst_gain.d, cert.worst_kappa.v1,
                 cert.worst_kappa.v2, cert.worst_kappa.d);
    certs.push_back({{"n", n}, {"triples", cert.triples}, {"negative", cert.negative},
                     {"min_gain", cert.min_gain}, {"kappa", cert.kappa}, {"pass", ok}});
  }
  out.write("transfer.csv", transfer.str());

  // Negative control: tiny droplets outside the size hypotheses.
  const DropletTriple control{4, 4, 1, ic.transfer_sizes.front(), ic.rho};
  const bool flagged = !control.hypotheses_hold();
  const auto control_gain = raw_transfer_gain(control.v1, control.v2, control.d);

  CommandResult res;
  res.passed = oracle_equal && violations == 0 && transfer_ok && flagged;
  res.summary = with_header(
      "sos-isoperimetry-summary", c,
      {{"checks",
        {{"oracle_equal", {{"pass", oracle_equal}, {"max_v", ic.oracle_max}}},
         {"sqrt_bounds", {{"pass", violations == 0}, {"scan_max", ic.scan_max}, {"violations", violations},
                          {"first_violation", first_violation}}},
         {"transfer", {{"pass", transfer_ok}, {"kappa_min", ic.kappa_min}, {"certificates", certs}}},
         {"negative_control",
          {{"v1", control.v1}, {"v2", control.v2}, {"d", control.d}, {"gain", control_gain},
           {"hypotheses_hold", control.hypotheses_hold()}, {"flagged", flagged}}}}},
       {"passed", res.passed}});
  out.write_json("summary.json", res.summary);
  return res;
}

// vershik ---------------------------------------------------------------------

inline CommandResult cmd_vershik(const ExperimentConfig& c, const OutputDir& out) {
  using Big = boost::multiprecision::cpp_bin_float_50;
  const auto& vc = c.vershik;

  Csv curve("sos-vershik-curve", c.resolved, {"u", "v"});
  const double u_lo = 0.02, u_hi = 6.0;
  for (int i = 0; i < vc.curve_points; ++i) {
    const double u = u_lo + (u_hi - u_lo) * i / (vc.curve_points - 1);
    curve.row(u, vershik_curve(u));
  }
  out.write("curve.csv", curve.str());

  json means = json::array();
  std::vector<std::pair<int, double>> mean_by_n;
  for (int n : vc.sizes) {
    Rng rng(derive_seed(vc.seed, static_cast<std::uint64_t>(n)));
    Csv dev("sos-vershik-deviation", c.resolved, {"sample", "deviation", "rows", "largest_part"});
    Csv prof("sos-vershik-profile", c.resolved, {"sample", "x", "y"});
    double sum = 0.0;
    for (int i = 0; i < vc.samples; ++i) {
      const auto d = sample_partition(n, rng);
      const double e = profile_deviation(d);
      sum += e;
      dev.row(i, e, d.parts.size(), d.parts.front());
      if (i < vc.profiles) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(d.size));
        for (std::size_t r = 0; r < d.parts.size(); ++r) {
          prof.row(i, d.parts[r] * scale, static_cast<double>(r) * scale);
          prof.row(i, d.parts[r] * scale, static_cast<double>(r + 1) * scale);
        }
      }
    }
    const double mean = sum / vc.samples;
    mean_by_n.emplace_back(n, mean);
    means.push_back({{"n", n}, {"samples", vc.samples}, {"mean_deviation", mean}});
    out.write("deviation_n" + std::to_string(n) + ".csv", dev.str());
    if (vc.profiles > 0) out.write("profile_n" + std::to_string(n) + ".csv", prof.str());
  }
  std::sort(mean_by_n.begin(), mean_by_n.end());
  const bool converging = mean_by_n.size() < 2 || mean_by_n.back().second < mean_by_n.front().second;
  const bool small_enough = mean_by_n.back().second < vc.mean_max;

  const double sym = vershik_symmetric_point();
  const double sym_err = std::abs(sym - std::sqrt(6.0) / boost::math::constants::pi<double>() * std::log(2.0));
  const bool symmetric = sym_err <= 1e-12 && std::abs(vershik_curve(sym) - sym) <= 1e-12;

  Csv mono("sos-monolayer", c.resolved, {"k", "x", "residual", "ratio_to_leading_order"});
  const Big cbig = monolayer_constant<Big>();
  bool residual_ok = true, monotone = true;
  double prev_x = 0.0, last_ratio = 0.0, worst_residual = 0.0;
  std::vector<double> ks = vc.monolayer_k;
  std::sort(ks.begin(), ks.end());
  for (double k : ks) {
    const Big kb = k;
    const Big x = solve_monolayer_x<Big>(kb);
    const double residual = static_cast<double>(abs(monolayer_residual<Big>(kb, x)));
    const double ratio = static_cast<double>(x / boost::multiprecision::cbrt(kb * kb) * boost::multiprecision::cbrt(cbig));
    worst_residual = std::max(worst_residual, residual);
    residual_ok = residual_ok && residual < vc.residual_max;
    monotone = monotone && static_cast<double>(x) > prev_x;
    prev_x = static_cast<double>(x);
    last_ratio = ratio;
    mono.row(k, static_cast<double>(x), residual, ratio);
  }
  out.write("monolayer.csv", mono.str());
  const bool ratio_ok = ks.empty() || std::abs(last_ratio - 1.0) <= vc.ratio_tol;

  CommandResult res;
  res.passed = converging && small_enough && symmetric && residual_ok && monotone && ratio_ok;
  res.summary = with_header(
      "sos-vershik-summary", c,
      {{"deviation", means},
       {"monolayer_constant", static_cast<double>(cbig)},
       {"zeta3", static_cast<double>(zeta3<Big>())},
       {"symmetric_point", sym},
       {"checks",
        {{"converging", {{"pass", converging}}},
         {"mean_at_largest_n", {{"pass", small_enough}, {"max", vc.mean_max}}},
         {"symmetric_point", {{"pass", symmetric}, {"abs_err", sym_err}}},
         {"monolayer_residual", {{"pass", residual_ok}, {"max_residual", worst_residual}, {"tol", vc.residual_max}}},
         {"monolayer_monotone", {{"pass", monotone}}},
         {"monolayer_ratio", {{"pass", ratio_ok}, {"ratio_at_largest_k", last_ratio}, {"tol", vc.ratio_tol}}}}},
       {"passed", res.passed}});
  out.write_json("summary.json", res.summary);
  return res;
}

// oracle ----------------------------------------------------------------------

inline std::string parts_string(const YoungDiagram& d) {
  std::string s;
  for (std::size_t i = 0; i < d.parts.size(); ++i) s += (i ? " " : "") + std::to_string(d.parts[i]);
  return s;
}

inline CommandResult cmd_oracle(const ExperimentConfig& c, const OutputDir& out) {
  const auto& oc = c.oracle;
  const ExactDistribution exact(oc.n, oc.h_min, oc.h_max, oc.beta, oc.lambda);

  SamplerConfig cfg;
  cfg.params.beta = oc.beta;
  cfg.params.lambda = oc.lambda;
  cfg.sweeps = oc.burn_in + oc.samples * oc.thin;
  cfg.burn_in = oc.burn_in;
  cfg.thin = oc.thin;
  cfg.seed = oc.seed;
  cfg.height_floor = oc.h_min;
  cfg.height_ceiling = oc.h_max;
  std::vector<std::uint64_t> counts(exact.size(), 0);
  std::uint64_t outside = 0;
  // The chain starts flat at ceil(lambda n), which must lie in the cube.
  for_each_sample(cfg, oc.n, [&](const HeightField& f, std::int64_t, std::int64_t) {
    if (const auto i = exact.index_of(f)) ++counts[static_cast<std::size_t>(*i)];
    else ++outside;
  });
  const double tv = total_variation(exact, counts, outside, static_cast<std::uint64_t>(oc.samples));

  const SiteKernel kernel(cfg.params, oc.n, oc.h_min, oc.h_max);
  double balance = 0.0, stationarity = 0.0;
  markov::Matrix sweep;
  for (int s = 0; s < oc.n * oc.n; ++s) {
    const auto p = markov::site_transition_matrix(exact, kernel, s);
    balance = std::max(balance, markov::detailed_balance_defect(exact, p));
    sweep = s == 0 ? p : markov::multiply(sweep, p);
  }
  stationarity = markov::stationarity_defect(exact, sweep);

  Csv gibbs("sos-gibbs", c.resolved, {"state", "heights", "volume", "exact", "empirical"});
  for (std::uint64_t i = 0; i < exact.size(); ++i) {
    if (exact[i] == 0.0 && counts[i] == 0) continue;
    const auto f = exact.state(i);
    std::string h;
    for (std::size_t s = 0; s < f.size(); ++s) h += (s ? " " : "") + std::to_string(f[s]);
    gibbs.row(i, h, volume(f), exact[i], static_cast<double>(counts[i]) / static_cast<double>(oc.samples));
  }
  out.write("gibbs.csv", gibbs.str());

  Csv parts("sos-partition-uniformity", c.resolved, {"n", "partition", "count", "frequency", "expected", "abs_dev"});
  double worst_dev = 0.0;
  for (int n = 1; n <= oc.partition_max_n; ++n) {
    Rng rng(derive_seed(oc.seed, static_cast<std::uint64_t>(n) + 1000));
    const auto all = enumerate_partitions(n);
    std::map<YoungDiagram, std::int64_t> freq;
    for (const auto& d : all) freq[d] = 0;
    for (std::int64_t i = 0; i < oc.partition_draws; ++i) ++freq[sample_partition(n, rng)];
    const double expected = 1.0 / static_cast<double>(all.size());
    for (const auto& d : all) {
      const double f = static_cast<double>(freq[d]) / static_cast<double>(oc.partition_draws);
      worst_dev = std::max(worst_dev, std::abs(f - expected));
      parts.row(n, parts_string(d), freq[d], f, expected, std::abs(f - expected));
    }
  }
  out.write("partitions.csv", parts.str());

  CommandResult res;
  const bool tv_ok = tv < oc.tv_max;
  const bool balance_ok = balance <= oc.balance_tol && stationarity <= oc.balance_tol;
  const bool uniform_ok = worst_dev < oc.partition_tol;
  res.passed = tv_ok && balance_ok && uniform_ok;
  res.summary = with_header(
      "sos-oracle-summary", c,
      {{"states", exact.size()},
       {"checks",
        {{"total_variation", {{"pass", tv_ok}, {"value", tv}, {"outside", outside}, {"max", oc.tv_max}}},
         {"detailed_balance",
          {{"pass", balance_ok}, {"defect", balance}, {"stationarity_defect", stationarity}, {"tol", oc.balance_tol}}},
         {"partition_uniformity", {{"pass", uniform_ok}, {"max_abs_dev", worst_dev}, {"tol", oc.partition_tol}}}}},
       {"passed", res.passed}});
  out.write_json("summary.json", res.summary);
  return res;
}

}  // namespace sos::experiment
