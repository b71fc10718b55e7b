#include <CLI11.hpp>
#include <iostream>

#include "hslpp/experiments.hpp"

using namespace hslpp;

int main(int argc, char** argv) {
  CLI::App app{"Half-space last passage percolation experiments"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  double tol = 0;
  int jobs = 0;
  std::vector<std::string> sets;
  bool print_defaults = false;

  for (const auto& name : experiment_names()) {
    CLI::App* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "master seed");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--tol", tol, "numerical tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--set", sets, "override a config key, key=value (repeatable)");
    sub->add_flag("--print-defaults", print_defaults, "print the default config and exit");
  }
  CLI11_PARSE(app, argc, argv);
  const std::string experiment = app.get_subcommands().front()->get_name();
  const CLI::App* sub = app.get_subcommands().front();

  try {
    if (print_defaults) {
      std::cout << default_config(experiment).dump(2) << '\n';
      return 0;
    }
    Json overrides = Json::object();
    for (const auto& kv : sets) {
      auto [k, v] = parse_assignment(kv);
      overrides[k] = v;
    }
    if (sub->count("--seed")) overrides["seed"] = seed;
    if (sub->count("--out")) overrides["out_dir"] = out_dir;
    if (sub->count("--tol")) overrides["tol"] = tol;
    if (sub->count("--jobs")) overrides["jobs"] = jobs;
    const Json file = config_path.empty() ? Json() : read_config_file(config_path);
    const ExperimentConfig cfg = resolve_config(experiment, file, environment_overrides(), overrides);
    const CommandResult res = run_experiment(cfg);
    std::cout << res.summary.dump(2) << '\n';
    for (const auto& c : res.manifest.checks)
      if (experiment != "verify-all") std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << '\n';
    std::cout << "manifest: " << cfg.out_dir() << "/manifest.json\n";
    return res.manifest.all_pass() ? 0 : 1;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "parameter error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
}
