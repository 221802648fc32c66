#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sos/experiment.hpp"

namespace {

namespace ex = sos::experiment;

constexpr const char* kVersion = "1.0.0";

enum Exit { kOk = 0, kInvalid = 1, kChecksFailed = 2 };

struct Common {
  std::string config_path;
  std::string out_dir = "runs/latest";
  std::vector<std::string> sets;
  std::vector<int> sizes;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> sweeps;
  std::string input;
  bool no_checks = false;
};

ex::json load_file(const std::string& path) {
  if (path.empty()) return nullptr;
  std::ifstream in(path);
  if (!in) throw sos::ContractViolation("cannot read config file " + path);
  ex::json j = ex::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw sos::ContractViolation("config file " + path + " is not valid JSON");
  return j;
}

/// Shorthand flags become overrides applied after any --set.
std::vector<std::string> overrides_for(const std::string& command, const Common& c) {
  std::vector<std::string> o = c.sets;
  const std::string section = command == "vershik" ? "vershik"
                              : command == "hairs" ? "scales"
                              : command == "isoperimetry" ? "isoperimetry"
                              : command == "oracle" ? "oracle"
                                                    : "sampler";
  if (!c.sizes.empty()) {
    const std::string key = section == "isoperimetry" ? "isoperimetry.transfer_sizes" : section + ".sizes";
    o.push_back(key + "=" + ex::json(c.sizes).dump());
  }
  if (c.seed) {
    if (section == "sampler" || section == "vershik" || section == "oracle")
      o.push_back(section + ".seed=" + std::to_string(*c.seed));
  }
  if (c.sweeps) o.push_back("sampler.sweeps=" + std::to_string(*c.sweeps));
  if (!c.input.empty()) o.push_back("input=" + ex::json(c.input).dump());
  if (c.no_checks) o.push_back("checks.enforce=false");
  return o;
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

int run(const std::string& command, const Common& common, const std::vector<std::string>& argv) {
  const std::string started = utc_now();
  const auto cfg = ex::resolve_config(load_file(common.config_path), overrides_for(command, common));
  const ex::OutputDir out(common.out_dir);
  out.write_json("config.json", cfg.resolved);

  ex::CommandResult result;
  if (command == "simulate") result = ex::cmd_simulate(cfg, out);
  else if (command == "analyze") result = ex::cmd_analyze(cfg, out);
  else if (command == "hairs") result = ex::cmd_hairs(cfg, out);
  else if (command == "isoperimetry") result = ex::cmd_isoperimetry(cfg, out);
  else if (command == "vershik") result = ex::cmd_vershik(cfg, out);
  else result = ex::cmd_oracle(cfg, out);

  out.write_json("metadata.json", {{"command", command},
                                   {"argv", argv},
                                   {"version", kVersion},
                                   {"schema_version", ex::kSchemaVersion},
                                   {"started_utc", started},
                                   {"finished_utc", utc_now()},
                                   {"passed", result.passed}});
  std::cout << command << ": " << (result.passed ? "checks passed" : "checks FAILED") << " -> "
            << out.root().string() << "\n";
  if (!result.passed && cfg.checks.enforce) return kChecksFailed;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Volume-constrained SOS crystal: sampling, facets, hairs and zero-temperature shapes"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  Common common;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"simulate", "Run Metropolis chains and record facet and hair statistics"},
      {"analyze", "Re-run facet and hair analysis on stored fields"},
      {"isoperimetry", "Minimal perimeters, polyomino oracle, square-root bounds, droplet transfer"},
      {"hairs", "Scale tables and hair reports"},
      {"vershik", "Random partitions against the limit curve; monolayer equation"},
      {"oracle", "Sampler against the exact Gibbs table; partition sampler uniformity"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("-c,--config", common.config_path, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("-o,--out", common.out_dir, "Output directory");
    sub->add_option("--set", common.sets, "Override a config value, e.g. --set model.beta=2.5");
    sub->add_option("-n,--sizes", common.sizes, "Box sides or partition sizes for this command");
    sub->add_option("--seed", common.seed, "Base RNG seed");
    sub->add_flag("--no-checks", common.no_checks, "Report checks without failing the exit code");
    if (name == "simulate") sub->add_option("--sweeps", common.sweeps, "Total sweeps per chain");
    if (name == "analyze" || name == "hairs")
      sub->add_option("-i,--input", common.input, "Fields file (.ndjson from simulate, or a grid file)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  std::string command;
  for (const auto* sub : app.get_subcommands()) command = sub->get_name();
  const std::vector<std::string> args(argv, argv + argc);
  try {
    return run(command, common, args);
  } catch (const sos::ContractViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const ex::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  }
}
