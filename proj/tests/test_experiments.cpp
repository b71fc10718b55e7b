#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hslpp/experiments.hpp"

using namespace hslpp;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hslpp_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

ExperimentConfig config(const std::string& exp, const fs::path& out, Json over) {
  over["out_dir"] = out.string();
  return resolve_config(exp, Json(), {}, over);
}

}  // namespace

TEST_CASE("config layers: defaults, file, environment, overrides") {
  const Json file = {{"N", 40}, {"q", 0.3}, {"samples", 7}};
  const std::map<std::string, std::string> env = {{"HSLPP_Q", "0.35"}, {"HSLPP_OUT_DIR", "123"}, {"HSLPP_UNRELATED", "x"}};
  ExperimentConfig cfg = resolve_config("simulate-lpp", file, env, {{"samples", 3}});
  CHECK(cfg.get<int>("N") == 40);
  CHECK(cfg.get<double>("q") == 0.35);
  CHECK(cfg.out_dir() == "123");
  CHECK(cfg.get<long>("samples") == 3);
  CHECK(cfg.get<double>("c") == 1.4);
  CHECK(cfg.seed() == 1);

  CHECK_THROWS_AS(resolve_config("simulate-lpp", {{"Nn", 3}}, {}, Json()), ParameterError);
  CHECK_THROWS_AS(resolve_config("simulate-lpp", {{"N", 2.5}}, {}, Json()), ParameterError);
  CHECK_THROWS_AS(resolve_config("simulate-lpp", Json(), {{"HSLPP_N", "many"}}, Json()), ParameterError);
  CHECK_THROWS_AS(resolve_config("simulate-lpp", {{"experiment", "kernel-eval"}}, {}, Json()), ParameterError);
  CHECK_THROWS_AS(resolve_config("simulate-lpp", Json(), {}, {{"jobs", 0}}), ParameterError);
  CHECK_THROWS_AS(resolve_config("no-such-thing", Json(), {}, Json()), ParameterError);
  // Integers are accepted where reals are expected, not the other way round.
  CHECK(resolve_config("simulate-lpp", {{"q", 0}}, {}, Json()).get<double>("q") == 0.0);
}

TEST_CASE("config hash and assignments") {
  ExperimentConfig a = resolve_config("partition-fn", Json(), {}, Json());
  ExperimentConfig b = resolve_config("partition-fn", Json(), {}, Json());
  ExperimentConfig c = resolve_config("partition-fn", Json(), {}, {{"T1", 2}});
  CHECK(a.hash() == b.hash());
  CHECK(a.hash() != c.hash());
  CHECK(a.hash().size() == 8);

  auto [k, v] = parse_assignment("points=[[1,2,3,4]]");
  CHECK(k == "points");
  CHECK(v.is_array());
  CHECK(parse_assignment("regime=bulk").second == "bulk");
  CHECK_THROWS_AS(parse_assignment("novalue"), ParameterError);
  CHECK_THROWS_AS(read_config_file("/nonexistent/cfg.json"), IoError);
}

TEST_CASE("replicas do not depend on the number of threads") {
  auto f = [](long r, Rng& rng) { return static_cast<double>(rng() % 1000) + r; };
  CHECK(replicate<double>(50, 9, 1, f) == replicate<double>(50, 9, 4, f));
  CHECK(replicate<double>(0, 9, 4, f).empty());
}

TEST_CASE("fixed seed gives byte-identical archives") {
  const Json over = {{"N", 30}, {"samples", 6}, {"c", 0.8}};
  const fs::path a = scratch("det_a"), b = scratch("det_b"), c = scratch("det_c");
  Json o2 = over;
  o2["jobs"] = 3;
  run_experiment(config("simulate-lpp", a, over));
  run_experiment(config("simulate-lpp", b, over));
  run_experiment(config("simulate-lpp", c, o2));
  CHECK(slurp(a / "curves.csv") == slurp(b / "curves.csv"));
  CHECK(slurp(a / "curves.csv") == slurp(c / "curves.csv"));
  CHECK(slurp(a / "scaled.csv") == slurp(c / "scaled.csv"));

  const Json m = Json::parse(slurp(a / "manifest.json"));
  for (const char* key : {"config_hash", "seed", "code_version", "wall_clock_seconds", "checks", "config", "files"})
    CHECK(m.contains(key));
  CHECK(m["config"]["N"] == 30);

  // The archive reads back.
  const auto ens = load_archive((a / "curves.csv").string(), 30, 0.5, 0.8);
  CHECK(ens.size() == 6);
}

TEST_CASE("zero samples give an empty archive") {
  const fs::path d = scratch("zero");
  CommandResult r = run_experiment(config("simulate-lpp", d, {{"N", 10}, {"samples", 0}}));
  CHECK(slurp(d / "curves.csv") == "sample_id,index,time,value\n");
  CHECK(r.summary["separation_fraction"].is_null());
  CHECK(load_archive((d / "curves.csv").string(), 10, 0.5, 1.4).empty());
}

TEST_CASE("curve separation above the critical point and pinning below it") {
  const fs::path d = scratch("sep");
  CommandResult hi = run_experiment(config("simulate-lpp", d, {{"N", 500}, {"samples", 100}, {"c", 1.4}, {"depth", 2}}));
  CHECK(hi.summary["separation_fraction"].get<double>() >= 0.95);
  CommandResult lo = run_experiment(config("simulate-lpp", d, {{"N", 500}, {"samples", 100}, {"c", 0.8}, {"depth", 2}}));
  CHECK(lo.summary["median_scaled_gap_t0"].get<double>() < 0.5);
}

TEST_CASE("corrupted archive fails with its path") {
  const fs::path d = scratch("corrupt");
  fs::create_directories(d);
  const fs::path bad = d / "bad.csv";
  std::ofstream(bad) << "sample_id,index,time,value\n0,1,0,5\n0,1,x,6\n";
  Json over = {{"archives", {{{"path", bad.string()}, {"N", 2}, {"q", 0.5}, {"c", 0.0}}}}, {"criteria", {1}}};
  try {
    run_experiment(config("verify-all", d / "out", over));
    FAIL("expected an IO error");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find(bad.string()) != std::string::npos);
  }
  CHECK_THROWS_AS(load_archive((d / "missing.csv").string(), 2, 0.5, 0.0), IoError);
}

TEST_CASE("verify-all runs a selected criterion and records it") {
  const fs::path d = scratch("verify");
  CommandResult r = run_experiment(config("verify-all", d, {{"criteria", {1, 9}}}));
  REQUIRE(r.manifest.checks.size() == 2);
  CHECK(r.manifest.checks[0].id == 1);
  CHECK(r.manifest.all_pass());
  CHECK(fs::exists(d / "manifest.json"));
}

TEST_CASE("kernel evaluation records") {
  const fs::path d = scratch("keval");
  run_experiment(config("kernel-eval", d, Json::object()));
  const Json recs = Json::parse(slurp(d / "kernel.json"));
  REQUIRE(recs.size() == 1);
  for (const char* key : {"regime", "params", "points", "tol", "value_re", "value_im", "err"}) CHECK(recs[0].contains(key));
  // One-point function of the exact kernel, cross-checked in the kernel tests.
  CHECK(recs[0]["value_re"][1].get<double>() == doctest::Approx(0.4374700130304).epsilon(1e-9));
  CHECK_THROWS_AS(run_experiment(config("kernel-eval", d, {{"points", {{0.5, 0.0, 1.0, 0.0}}}})), ParameterError);
  CHECK_THROWS_AS(run_experiment(config("kernel-eval", d, {{"regime", "sideways"}})), ParameterError);
}

TEST_CASE("kernel convergence table") {
  const fs::path d = scratch("kconv");
  CommandResult empty = run_experiment(config("kernel-converge", d, {{"points", Json::array()}}));
  CHECK(slurp(d / "kernel_converge.csv") == "point,N,s,x,t,y,component,prelimit,limit,error\n");
  CHECK(empty.manifest.checks.empty());
  CommandResult r = run_experiment(config("kernel-converge", d, {{"Ns", {50, 200}}}));
  CHECK(r.manifest.checks.size() == 5);
  CHECK(r.manifest.all_pass());
}

TEST_CASE("Brownian limit guards") {
  const fs::path d = scratch("bm");
  CHECK_THROWS_AS(run_experiment(config("brownian-limit", d, {{"c", 0.8}})), ParameterError);
  CommandResult r = run_experiment(
      config("brownian-limit", d, {{"N", 20}, {"samples", 40}, {"t_grid", {0.0, 1.0, 7.5, 9.0}}}));
  CHECK(r.summary["out_of_window"] == Json({7.5, 9.0}));
  CHECK(r.summary["table"].size() == 2);
}

TEST_CASE("partition function command") {
  const fs::path d = scratch("pf");
  CommandResult r = run_experiment(config("partition-fn", d, Json::object()));
  CHECK(r.summary["enumeration"].get<double>() == doctest::Approx(13.0 / 6.0).epsilon(1e-12));
  CHECK(r.manifest.all_pass());
}
