#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "hslpp/lpp.hpp"
#include "hslpp/rng.hpp"

namespace hslpp {

using Json = nlohmann::json;

inline constexpr const char* kCodeVersion = "0.1.0";

// Subcommand names in the order the CLI lists them.
const std::vector<std::string>& experiment_names();

// Every key an experiment accepts, with its default value; the type of the default is the key's type.
Json default_config(const std::string& experiment);

struct ExperimentConfig {
  std::string experiment;
  Json values;  // all keys, resolved

  std::uint64_t seed() const { return values.at("seed").get<std::uint64_t>(); }
  std::string out_dir() const { return values.at("out_dir").get<std::string>(); }
  double tol() const { return values.at("tol").get<double>(); }
  int jobs() const { return values.at("jobs").get<int>(); }
  template <class T>
  T get(const std::string& key) const {
    return values.at(key).get<T>();
  }
  // CRC-32 of the canonical dump, as 8 hex digits.
  std::string hash() const;
};

// Layers, later wins: defaults, config file, HSLPP_<KEY> environment variables, explicit overrides.
// Unknown keys and type mismatches raise ParameterError naming the key and the layer.
ExperimentConfig resolve_config(const std::string& experiment, const Json& file,
                                const std::map<std::string, std::string>& env, const Json& overrides);
// HSLPP_* variables of the current process.
std::map<std::string, std::string> environment_overrides();
// Reads a JSON object; IoError carries the path.
Json read_config_file(const std::string& path);
// "key=value" with the value parsed as JSON when possible, else kept as a string.
std::pair<std::string, Json> parse_assignment(const std::string& kv);

struct CheckResult {
  int id = 0;
  std::string name;
  bool pass = false;
  Json numbers = Json::object();
  double seconds = 0;
};

struct RunManifest {
  std::string experiment, config_hash, code_version = kCodeVersion;
  std::uint64_t seed = 0;
  double wall_clock_seconds = 0;
  Json config;
  std::vector<CheckResult> checks;
  std::vector<std::string> files;
  bool all_pass() const;
  Json to_json() const;
};

struct CommandResult {
  Json summary = Json::object();
  RunManifest manifest;
};

CommandResult cmd_simulate_lpp(const ExperimentConfig& cfg);
CommandResult cmd_simulate_schur(const ExperimentConfig& cfg);
CommandResult cmd_gibbs_verify(const ExperimentConfig& cfg);
CommandResult cmd_partition_fn(const ExperimentConfig& cfg);
CommandResult cmd_kernel_eval(const ExperimentConfig& cfg);
CommandResult cmd_kernel_converge(const ExperimentConfig& cfg);
CommandResult cmd_brownian_limit(const ExperimentConfig& cfg);
CommandResult cmd_pinned_origin(const ExperimentConfig& cfg);
CommandResult cmd_verify_all(const ExperimentConfig& cfg);
// Dispatch on cfg.experiment; writes manifest.json into the output directory.
CommandResult run_experiment(const ExperimentConfig& cfg);

// Replica r draws from Rng(derive_seed(seed, r)), so the result does not depend on jobs.
template <class R, class F>
std::vector<R> replicate(long n, std::uint64_t seed, int jobs, F&& f) {
  std::vector<R> out(n > 0 ? n : 0);
  auto work = [&](long first) {
    for (long r = first; r < n; r += jobs) {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
      out[r] = f(r, rng);
    }
  };
  if (jobs <= 1 || n < 2) {
    jobs = 1;
    work(0);
    return out;
  }
  std::vector<std::thread> pool;
  for (int j = 0; j < jobs; ++j) pool.emplace_back(work, j);
  for (auto& t : pool) t.join();
  return out;
}

// Archive reader that prefixes failures with the path.
std::vector<DiscreteLineEnsemble> load_archive(const std::string& path, int N, double q, double c);

struct Criterion {
  int id;
  std::string name;
  std::function<CheckResult(std::uint64_t seed, int jobs)> run;
};
const std::vector<Criterion>& acceptance_criteria();
// Runs the selected criteria (all when ids is empty), printing one PASS/FAIL line each to log.
std::vector<CheckResult> run_acceptance(const std::vector<int>& ids, std::uint64_t seed, int jobs, std::ostream* log);
std::string format_check(const CheckResult& r);

}  // namespace hslpp
