#include "hslpp/experiments.hpp"

#include <algorithm>
#include <boost/crc.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "hslpp/bridges.hpp"
#include "hslpp/continuum.hpp"
#include "hslpp/kernels.hpp"
#include "hslpp/partition_fn.hpp"
#include "hslpp/pfaffian.hpp"
#include "hslpp/schur.hpp"
#include "hslpp/stats.hpp"

extern char** environ;

namespace hslpp {

namespace fs = std::filesystem;

namespace {

const Json& common_defaults() {
  static const Json j = {{"seed", 1}, {"out_dir", "hslpp_out"}, {"tol", 1e-10}, {"jobs", 1}};
  return j;
}

const std::map<std::string, Json>& experiment_defaults() {
  static const std::map<std::string, Json> m = {
      {"simulate-lpp",
       {{"q", 0.5}, {"c", 1.4}, {"N", 500}, {"M", -1}, {"samples", 100}, {"depth", 5}, {"plot_curves", 3},
        {"plot_points", 65}}},
      {"simulate-schur",
       {{"q", 0.4}, {"c", 0.7}, {"N", 3}, {"M", 2}, {"samples", 20000}, {"slice", -1}, {"x_lo", -3}, {"x_hi", 2},
        {"exact", true}, {"z_max", 4.0}}},
      {"gibbs-verify",
       {{"q", 0.4}, {"c", 0.7}, {"N", 2}, {"M", 1}, {"k", 1}, {"T", 1}, {"samples", 200000}, {"min_hits", 20000},
        {"tv_max", 0.05}}},
      {"partition-fn",
       {{"q", 0.5}, {"c", 0.8}, {"T1", 1}, {"y1", 1}, {"y2", 0}, {"trunc", 2000}, {"enumerate_depth", 200},
        {"rel_tol", 1e-8}}},
      {"kernel-eval",
       {{"regime", "geo"}, {"q", 0.4}, {"c", 0.7}, {"N", 3}, {"points", Json::array({Json::array({2.0, -1.0, 2.0, -1.0})})}}},
      {"kernel-converge",
       {{"regime", "bulk"}, {"q", 0.5}, {"c", 0.8}, {"Ns", {50, 200, 800}},
        {"points", Json::array({Json::array({1.0, 0.0, 1.5, 0.3})})}}},
      {"brownian-limit",
       {{"q", 0.5}, {"c", 1.4}, {"N", 200}, {"samples", 2000}, {"t_grid", {0.0, 2.0, 4.0}}, {"margin", 1.0},
        {"var_lo", 0.85}, {"var_hi", 1.15}, {"mean_ratio", 0.1}}},
      {"pinned-origin",
       {{"q", 0.5}, {"c", 0.3}, {"b", 1.0}, {"y1", 1.0}, {"y2", -1.0}, {"d_sweep", {100.0, 400.0}},
        {"samples", 100000}, {"reference_samples", 100000}, {"steps", 2}, {"gap_tv_max", 0.05},
        {"var_rel", 0.15}}},
      {"verify-all", {{"criteria", Json::array()}, {"archives", Json::array()}}},
  };
  return m;
}

bool same_kind(const Json& def, const Json& v) {
  if (def.is_number_integer()) return v.is_number_integer();
  if (def.is_number_float()) return v.is_number();
  if (def.is_boolean()) return v.is_boolean();
  if (def.is_string()) return v.is_string();
  if (def.is_object()) return v.is_object();
  if (def.is_array()) {
    if (!v.is_array()) return false;
    if (def.empty()) return true;
    for (const auto& e : v)
      if (!same_kind(def[0], e)) return false;
    return true;
  }
  return false;
}

void apply_layer(Json& into, const Json& layer, const std::string& what) {
  if (!layer.is_object()) throw ParameterError(what + ": expected a JSON object");
  for (const auto& [k, v] : layer.items()) {
    if (k == "experiment") continue;
    if (!into.contains(k)) throw ParameterError(what + ": unknown key '" + k + "'");
    if (!same_kind(into[k], v)) throw ParameterError(what + ": key '" + k + "' expects " + into[k].type_name());
    into[k] = v;
  }
}

std::string upper(std::string s) {
  for (char& ch : s) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  return s;
}

struct OutputDir {
  fs::path dir;
  std::vector<std::string>* files;

  OutputDir(const std::string& d, std::vector<std::string>* f) : dir(d), files(f) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError(dir.string() + ": " + ec.message());
  }
  std::ofstream open(const std::string& name) {
    const fs::path p = dir / name;
    std::ofstream os(p);
    if (!os) throw IoError(p.string() + ": cannot open for writing");
    os.precision(17);
    files->push_back(name);
    return os;
  }
  void json(const std::string& name, const Json& j) { open(name) << j.dump(2) << '\n'; }
};

CheckResult check(const std::string& name, bool pass, Json numbers) {
  CheckResult r;
  r.name = name;
  r.pass = pass;
  r.numbers = std::move(numbers);
  return r;
}

void require(bool ok, const std::string& why) {
  if (!ok) throw ParameterError(why);
}

std::string num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

double median(std::vector<double> v) {
  if (v.empty()) return NAN;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Json kernel_json(const KernelValue2x2& v) {
  return {{"value_re", {v.k11.real(), v.k12.real(), v.k21.real(), v.k22.real()}},
          {"value_im", {v.k11.imag(), v.k12.imag(), v.k21.imag(), v.k22.imag()}},
          {"err", v.err}};
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {"simulate-lpp",   "simulate-schur", "gibbs-verify",
                                                 "partition-fn",   "kernel-eval",    "kernel-converge",
                                                 "brownian-limit", "pinned-origin",  "verify-all"};
  return names;
}

Json default_config(const std::string& experiment) {
  auto it = experiment_defaults().find(experiment);
  if (it == experiment_defaults().end()) throw ParameterError("unknown experiment '" + experiment + "'");
  Json j = common_defaults();
  j.update(it->second);
  return j;
}

std::string ExperimentConfig::hash() const {
  const std::string s = Json{{"experiment", experiment}, {"values", values}}.dump();
  boost::crc_32_type crc;
  crc.process_bytes(s.data(), s.size());
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", crc.checksum());
  return buf;
}

ExperimentConfig resolve_config(const std::string& experiment, const Json& file,
                                const std::map<std::string, std::string>& env, const Json& overrides) {
  ExperimentConfig cfg{experiment, default_config(experiment)};
  if (file.is_object() && file.contains("experiment") && file["experiment"] != experiment)
    throw ParameterError("config file is for experiment " + file["experiment"].dump());
  if (!file.is_null()) apply_layer(cfg.values, file, "config file");
  Json from_env = Json::object();
  for (const auto& [k, raw] : cfg.values.items()) {
    auto it = env.find("HSLPP_" + upper(k));
    if (it == env.end()) continue;
    Json v = raw.is_string() ? Json(it->second) : Json::parse(it->second, nullptr, false);
    if (v.is_discarded()) v = it->second;
    from_env[k] = v;
  }
  apply_layer(cfg.values, from_env, "environment");
  if (!overrides.is_null()) apply_layer(cfg.values, overrides, "command line");

  require(cfg.values["seed"].is_number_unsigned() || cfg.values["seed"].get<long long>() >= 0, "seed must be nonnegative");
  require(cfg.jobs() >= 1, "jobs must be at least 1");
  require(cfg.tol() > 0, "tol must be positive");
  return cfg;
}

std::map<std::string, std::string> environment_overrides() {
  std::map<std::string, std::string> out;
  for (char** e = environ; e && *e; ++e) {
    const std::string s = *e;
    const auto eq = s.find('=');
    if (eq != std::string::npos && s.rfind("HSLPP_", 0) == 0) out[s.substr(0, eq)] = s.substr(eq + 1);
  }
  return out;
}

Json read_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError(path + ": cannot open");
  Json j = Json::parse(is, nullptr, false);
  if (j.is_discarded()) throw IoError(path + ": not valid JSON");
  if (!j.is_object()) throw IoError(path + ": expected a JSON object");
  return j;
}

std::pair<std::string, Json> parse_assignment(const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) throw ParameterError("expected key=value, got '" + kv + "'");
  const std::string value = kv.substr(eq + 1);
  Json v = Json::parse(value, nullptr, false);
  if (v.is_discarded()) v = value;
  return {kv.substr(0, eq), v};
}

bool RunManifest::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

Json RunManifest::to_json() const {
  Json cs = Json::array();
  for (const auto& c : checks) {
    Json j{{"name", c.name}, {"pass", c.pass}, {"numbers", c.numbers}};
    if (c.id) j["id"] = c.id;
    if (c.seconds > 0) j["seconds"] = c.seconds;
    cs.push_back(j);
  }
  return {{"experiment", experiment},         {"config_hash", config_hash}, {"seed", seed},
          {"code_version", code_version},     {"wall_clock_seconds", wall_clock_seconds},
          {"all_pass", all_pass()},           {"checks", cs},              {"config", config},
          {"files", files}};
}

std::vector<DiscreteLineEnsemble> load_archive(const std::string& path, int N, double q, double c) {
  std::ifstream is(path);
  if (!is) throw IoError(path + ": cannot open");
  return read_archive_csv(is, path, N, q, c);
}

// ---- commands ----

CommandResult cmd_simulate_lpp(const ExperimentConfig& cfg) {
  CommandResult res;
  const int N = cfg.get<int>("N"), depth = cfg.get<int>("depth");
  const long samples = cfg.get<long>("samples");
  const ModelParams p{cfg.get<double>("q"), cfg.get<double>("c")};
  p.validate();
  require(N >= 1, "N must be positive");
  require(samples >= 0, "samples must be nonnegative");
  require(depth >= 2, "depth must be at least 2");
  const double n13 = std::cbrt(double(N)), n23 = n13 * n13;
  int M = cfg.get<int>("M");
  if (M < 0) M = static_cast<int>(std::ceil(n23));

  auto ens = replicate<DiscreteLineEnsemble>(samples, cfg.seed(), cfg.jobs(), [&](long, Rng& rng) {
    return lambda_process(sample_weights(N + M, N, p, rng), N, M, depth);
  });

  OutputDir out(cfg.out_dir(), &res.manifest.files);
  {
    auto os = out.open("curves.csv");
    write_archive_csv(os, ens);
  }

  ScalingConstantsBulk kb(p.q);
  const int npts = std::max(2, cfg.get<int>("plot_points"));
  const int ncurves = std::min(cfg.get<int>("plot_curves"), depth);
  std::vector<double> grid(npts);
  for (int a = 0; a < npts; ++a) grid[a] = M / n23 * a / (npts - 1);
  {
    auto os = out.open("scaled.csv");
    os << "sample_id,index,time,value\n";
    for (std::size_t s = 0; s < ens.size(); ++s) {
      auto sc = rescale_bulk(ens[s], N, kb, grid, ncurves);
      for (int i = 0; i < ncurves; ++i)
        for (int a = 0; a < npts; ++a) os << s << ',' << i + 1 << ',' << grid[a] << ',' << sc[i][a] << '\n';
    }
  }

  // Separation over [0, N^{2/3}] and the scaled gap at time 0.
  const int T = std::min(M, static_cast<int>(std::floor(n23)));
  long separated = 0;
  std::vector<double> gaps;
  // Curves are lambda_i, stored as lambda_i - i.
  for (const auto& e : ens) {
    auto lam = [&](int i, int t) { return e.value(i, t) + i; };
    long lo1 = lam(1, 0), hi2 = lam(2, 0);
    for (int t = 0; t <= T; ++t) {
      lo1 = std::min(lo1, lam(1, t));
      hi2 = std::max(hi2, lam(2, t));
    }
    separated += lo1 > hi2;
    gaps.push_back(double(lam(1, 0) - lam(2, 0)) / (kb.sigma * n13));
  }
  res.summary = {{"samples", samples},
                 {"M", M},
                 {"separation_window", T},
                 {"separation_fraction", samples ? Json(double(separated) / samples) : Json()},
                 {"median_scaled_gap_t0", samples ? Json(median(gaps)) : Json()}};
  return res;
}

CommandResult cmd_simulate_schur(const ExperimentConfig& cfg) {
  CommandResult res;
  const int N = cfg.get<int>("N"), M = cfg.get<int>("M");
  const long samples = cfg.get<long>("samples");
  const ModelParams p{cfg.get<double>("q"), cfg.get<double>("c")};
  p.validate();
  require(N >= 1 && M >= 0, "need N >= 1 and M >= 0");
  require(samples >= 0, "samples must be nonnegative");
  int slice = cfg.get<int>("slice");
  if (slice < 0) slice = M;
  require(slice <= M, "slice beyond M");
  const long x_lo = cfg.get<long>("x_lo"), x_hi = cfg.get<long>("x_hi");
  require(x_lo <= x_hi, "x_lo must not exceed x_hi");
  require(x_lo >= -N, "sites below -N are always occupied; x_lo must be at least -N");

  auto ens = replicate<DiscreteLineEnsemble>(samples, cfg.seed(), cfg.jobs(), [&](long, Rng& rng) {
    return as_line_ensemble(sample_schur_process(N, M, p, rng));
  });
  OutputDir out(cfg.out_dir(), &res.manifest.files);
  {
    auto os = out.open("curves.csv");
    write_archive_csv(os, ens);
  }
  if (samples < 2) {
    res.summary = {{"samples", samples}, {"rows", 0}};
    return res;
  }
  PointStats st = empirical_point_stats(ens, {LatticeSlice::raw(slice)}, {Window{double(x_lo), double(x_hi + 1)}});
  const WindowStats& w = st.windows.at(0);
  std::vector<StatRow> rows;
  double zmax = 0;
  for (long n = w.n_lo; n < w.n_hi; ++n) {
    StatRow r{double(slice), std::to_string(n), w.density[n - w.n_lo].estimate, w.density[n - w.n_lo].se, {}};
    if (cfg.get<bool>("exact")) r.exact = kernel_geo(slice, n, slice, n, p.q, p.c, N, {cfg.tol(), 1.0, true}).k12.real();
    if (auto z = r.z()) zmax = std::max(zmax, std::abs(*z));
    rows.push_back(r);
  }
  {
    auto os = out.open("stats.csv");
    write_stats_csv(os, rows);
  }
  res.summary = {{"samples", samples}, {"rows", rows.size()}, {"max_abs_z", zmax}};
  if (cfg.get<bool>("exact"))
    res.manifest.checks.push_back(
        check("one-point densities against the exact kernel", zmax < cfg.get<double>("z_max"), {{"max_abs_z", zmax}}));
  return res;
}

CommandResult cmd_gibbs_verify(const ExperimentConfig& cfg) {
  CommandResult res;
  Rng rng(cfg.seed());
  const ModelParams p{cfg.get<double>("q"), cfg.get<double>("c")};
  GibbsReport rep = gibbs_consistency_check(cfg.get<int>("N"), cfg.get<int>("M"), p, cfg.get<int>("k"),
                                            cfg.get<int>("T"), cfg.get<long>("samples"), cfg.get<long>("min_hits"), rng);
  const double tv_max = cfg.get<double>("tv_max");
  Json classes = Json::array();
  double worst = 0;
  for (const auto& c : rep.classes) {
    classes.push_back({{"boundary", c.boundary}, {"hits", c.hits}, {"tv", c.tv}});
    worst = std::max(worst, c.tv);
  }
  OutputDir out(cfg.out_dir(), &res.manifest.files);
  out.json("gibbs.json", {{"classes", classes}, {"warnings", rep.warnings}});
  res.summary = {{"classes", rep.classes.size()}, {"worst_tv", worst}, {"warnings", rep.warnings}};
  res.manifest.checks.push_back(check("conditional laws match the interacting ensemble",
                                      !rep.classes.empty() && worst < tv_max,
                                      {{"classes", rep.classes.size()}, {"worst_tv", worst}, {"tv_max", tv_max}}));
  return res;
}

CommandResult cmd_partition_fn(const ExperimentConfig& cfg) {
  CommandResult res;
  const int T1 = cfg.get<int>("T1");
  const long y1 = cfg.get<long>("y1"), y2 = cfg.get<long>("y2");
  const double q = cfg.get<double>("q"), c = cfg.get<double>("c"), rel = cfg.get<double>("rel_tol");
  const SeriesValue s = partition_fn_series(T1, y1, y2, q, c, cfg.get<long>("trunc"));
  const cplx z = partition_fn_contour(T1, y1, y2, q, c);
  Json j{{"series", s.value}, {"series_tail_bound", s.tail_bound}, {"series_terms", s.terms},
         {"contour_re", z.real()}, {"contour_im", z.imag()}};
  const double err = std::abs(z - s.value) / s.value;
  res.manifest.checks.push_back(check("contour equals series", err < rel, {{"rel_err", err}, {"rel_tol", rel}}));
  if (c < 1) {
    const cplx lz = log_partition_fn_merged(T1, y1, y2, q, c);
    j["merged_log_re"] = lz.real();
    const double e2 = std::abs(std::exp(lz) - s.value) / s.value;
    res.manifest.checks.push_back(check("merged contour equals series", e2 < rel, {{"rel_err", e2}, {"rel_tol", rel}}));
  }
  if (const long depth = cfg.get<long>("enumerate_depth"); depth > 0) {
    const double e = partition_fn_enumerate(T1, y1, y2, q, c, depth);
    j["enumeration"] = e;
    j["enumeration_depth"] = depth;
  }
  OutputDir out(cfg.out_dir(), &res.manifest.files);
  out.json("partition_fn.json", j);
  res.summary = j;
  return res;
}

CommandResult cmd_kernel_eval(const ExperimentConfig& cfg) {
  CommandResult res;
  const std::string regime = cfg.get<std::string>("regime");
  const double q = cfg.get<double>("q"), c = cfg.get<double>("c"), tol = cfg.tol();
  const int N = cfg.get<int>("N");
  const Json points = cfg.values.at("points");
  Json params{{"q", q}, {"c", c}, {"N", N}};
  std::function<Json(double, double, double, double)> eval;

  auto integral = [](double v) {
    if (v != std::floor(v)) throw ParameterError("the exact kernel needs integer times and coordinates");
    return static_cast<long>(v);
  };
  if (regime == "geo") {
    eval = [&](double s, double x, double t, double y) {
      return kernel_json(kernel_geo(int(integral(s)), integral(x), int(integral(t)), integral(y), q, c, N, {tol}));
    };
  } else if (regime == "bulk") {
    auto K = std::make_shared<BulkKernelN>(q, c, N, tol);
    eval = [K](double s, double x, double t, double y) {
      const long xs = K->snap(s, x), yt = K->snap(t, y);
      Json j = kernel_json(K->at_lattice(s, xs, t, yt));
      j["snapped"] = {s, K->x_of(s, xs), t, K->x_of(t, yt)};
      return j;
    };
  } else if (regime == "edge") {
    auto K = std::make_shared<EdgeKernelN>(q, c, N, 5 * std::numbers::pi / 16, 0.0, tol);
    eval = [K](double s, double x, double t, double y) {
      const long xs = K->snap(s, x), yt = K->snap(t, y);
      Json j = kernel_json(K->at_lattice(s, xs, t, yt));
      j["snapped"] = {s, K->x_of(s, xs), t, K->x_of(t, yt)};
      return j;
    };
  } else if (regime == "bulk-limit") {
    ScalingConstantsBulk k(q);
    BulkLimitKernel L{k.f1, k.sigma1, tol};
    params = {{"q", q}};
    eval = [L](double s, double x, double t, double y) { return kernel_json(L(s, x, t, y)); };
  } else if (regime == "hs-limit") {
    params = Json::object();
    eval = [tol](double s, double x, double t, double y) { return kernel_json(kernel_hs_inf(s, x, t, y, tol)); };
  } else if (regime == "brownian") {
    params = Json::object();
    eval = [](double s, double x, double t, double y) {
      KernelValue2x2 v{};
      v.k12 = kernel_BM(s, x, t, y);
      return kernel_json(v);
    };
  } else {
    throw ParameterError("unknown regime '" + regime + "'");
  }

  Json records = Json::array();
  for (const auto& pt : points) {
    require(pt.size() == 4, "each point is [s, x, t, y]");
    const double s = pt[0], x = pt[1], t = pt[2], y = pt[3];
    Json r{{"regime", regime}, {"params", params}, {"points", pt}, {"tol", tol}};
    r.update(eval(s, x, t, y));
    records.push_back(r);
  }
  OutputDir out(cfg.out_dir(), &res.manifest.files);
  out.json("kernel.json", records);
  res.summary = {{"records", records.size()}};
  return res;
}

CommandResult cmd_kernel_converge(const ExperimentConfig& cfg) {
  CommandResult res;
  const std::string regime = cfg.get<std::string>("regime");
  const double q = cfg.get<double>("q"), c = cfg.get<double>("c"), tol = cfg.tol();
  const auto Ns = cfg.get<std::vector<int>>("Ns");
  const Json points = cfg.values.at("points");
  require(regime == "bulk" || regime == "edge", "regime must be bulk or edge");
  for (const auto& pt : points) require(pt.size() == 4, "each point is [s, x, t, y]");

  struct Row {
    std::size_t point;
    int N;
    double s, x, t, y;
    std::string component;
    double prelimit, limit;
  };
  std::vector<Row> rows;
  for (int N : Ns) {
    if (regime == "bulk") {
      BulkKernelN K(q, c, N, tol);
      BulkLimitKernel L{K.k.f1, K.k.sigma1, tol};
      const double sc = (1 - c) * (1 - c) * K.k.sigma1 * K.k.sigma1 * std::pow(N, 2.0 / 3.0);
      for (std::size_t i = 0; i < points.size(); ++i) {
        const double s = points[i][0], t = points[i][2];
        const long xs = K.snap(s, points[i][1].get<double>()), yt = K.snap(t, points[i][3].get<double>());
        const double x = K.x_of(s, xs), y = K.x_of(t, yt);
        const BulkPieces a = K.pieces(s, xs, t, yt), b = L.pieces(s, x, t, y);
        const std::pair<const char*, std::pair<cplx, cplx>> comps[] = {{"I11", {a.I11 / sc, b.I11}},
                                                                       {"I12", {a.I12, b.I12}},
                                                                       {"I22", {a.I22 * sc, b.I22}},
                                                                       {"R12", {a.R12, b.R12}},
                                                                       {"R22", {a.R22 * sc, b.R22}}};
        for (const auto& [name, v] : comps) rows.push_back({i, N, s, x, t, y, name, v.first.real(), v.second.real()});
      }
    } else {
      EdgeKernelN K(q, c, N, 5 * std::numbers::pi / 16, 0.0, tol);
      for (std::size_t i = 0; i < points.size(); ++i) {
        const double s = points[i][0], t = points[i][2];
        const long xs = K.snap(s, points[i][1].get<double>()), yt = K.snap(t, points[i][3].get<double>());
        const double x = K.x_of(s, xs), y = K.x_of(t, yt);
        const KernelValue2x2 v = K.at_lattice(s, xs, t, yt);
        const double bm = kernel_BM(K.k.kappa_bar - s, x, K.k.kappa_bar - t, y).real();
        rows.push_back({i, N, s, x, t, y, "K11", std::abs(v.k11), 0.0});
        rows.push_back({i, N, s, x, t, y, "K12", v.k12.real(), bm});
        rows.push_back({i, N, s, x, t, y, "K22", std::abs(v.k22), 0.0});
      }
    }
  }
  OutputDir out(cfg.out_dir(), &res.manifest.files);
  {
    auto os = out.open("kernel_converge.csv");
    os << "point,N,s,x,t,y,component,prelimit,limit,error\n";
    for (const auto& r : rows)
      os << r.point << ',' << r.N << ',' << r.s << ',' << r.x << ',' << r.t << ',' << r.y << ',' << r.component << ','
         << r.prelimit << ',' << r.limit << ',' << std::abs(r.prelimit - r.limit) << '\n';
  }
  // Errors per (point, component) in N order.
  std::map<std::pair<std::size_t, std::string>, std::vector<double>> errs;
  for (const auto& r : rows) errs[{r.point, r.component}].push_back(std::abs(r.prelimit - r.limit));
  for (const auto& [key, e] : errs) {
    bool dec = true;
    for (std::size_t k = 1; k < e.size(); ++k) dec = dec && e[k] < e[k - 1];
    const bool vanishing = *std::max_element(e.begin(), e.end()) < 1e-12;
    res.manifest.checks.push_back(check("point " + std::to_string(key.first) + " " + key.second + " error decreases",
                                        dec || vanishing, {{"errors", e}}));
  }
  res.summary = {{"rows", rows.size()}};
  return res;
}

CommandResult cmd_brownian_limit(const ExperimentConfig& cfg) {
  CommandResult res;
  const double q = cfg.get<double>("q"), c = cfg.get<double>("c");
  ModelParams{q, c}.validate();
  if (!(c > 1 && c * q < 1)) throw ParameterError("the Brownian regime needs 1 < c < 1/q");
  const int N = cfg.get<int>("N");
  const long samples = cfg.get<long>("samples");
  require(N >= 1 && samples >= 2, "need N >= 1 and at least two samples");
  const ScalingConstantsEdge k(q, c);
  const double margin = cfg.get<double>("margin");
  const auto grid = cfg.get<std::vector<double>>("t_grid");

  std::vector<double> in, out_of_window;
  for (double t : grid) {
    require(t >= 0, "times must be nonnegative");
    (t < k.kappa_bar - margin ? in : out_of_window).push_back(t);
  }
  std::vector<int> idx;
  for (double t : in) idx.push_back(static_cast<int>(std::lround(t * N)));
  const int M = idx.empty() ? 0 : *std::max_element(idx.begin(), idx.end());

  // The top curve is the last passage time, so one table per sample serves every t.
  auto vals = replicate<std::vector<double>>(samples, cfg.seed(), cfg.jobs(), [&](long, Rng& rng) {
    const WeightArray W = sample_weights(N + M, N, ModelParams{q, c}, rng);
    const std::vector<long> G = lpp_g1_table(W, N + M, N);
    std::vector<double> v;
    for (int ti : idx) v.push_back(scale_top_value(double(G[std::size_t(N + ti) * (N + 1) + N]), ti, N, k));
    return v;
  });

  OutputDir out(cfg.out_dir(), &res.manifest.files);
  auto os = out.open("brownian.csv");
  os << "t,mean,var,var_over_window,var_over_window_se,abs_mean_over_sd,in_window\n";
  const double lo = cfg.get<double>("var_lo"), hi = cfg.get<double>("var_hi"), mr = cfg.get<double>("mean_ratio");
  Json table = Json::array();
  std::vector<std::vector<double>> cols(in.size());
  for (std::size_t a = 0; a < in.size(); ++a) {
    for (const auto& v : vals) cols[a].push_back(v[a]);
    const Moments m = moments(cols[a]);
    const double w = k.kappa_bar - in[a], ratio = m.var / w, ms = std::abs(m.mean) / std::sqrt(m.var);
    os << in[a] << ',' << m.mean << ',' << m.var << ',' << ratio << ',' << m.var_se / w << ',' << ms << ",1\n";
    table.push_back({{"t", in[a]}, {"mean", m.mean}, {"var", m.var}, {"var_over_window", ratio}, {"abs_mean_over_sd", ms}});
    res.manifest.checks.push_back(check("variance at t=" + num(in[a]), ratio >= lo && ratio <= hi,
                                        {{"ratio", ratio}, {"se", m.var_se / w}, {"lo", lo}, {"hi", hi}}));
    res.manifest.checks.push_back(check("centring at t=" + num(in[a]), ms < mr, {{"abs_mean_over_sd", ms}}));
  }
  for (double t : out_of_window) os << t << ",,,,,,0\n";

  // Increments over disjoint intervals in reverse time are uncorrelated.
  Json incr = Json::array();
  for (std::size_t a = 0; a + 2 < in.size(); ++a) {
    std::vector<double> d1, d2;
    for (long s = 0; s < samples; ++s) {
      d1.push_back(cols[a][s] - cols[a + 1][s]);
      d2.push_back(cols[a + 1][s] - cols[a + 2][s]);
    }
    const double r = pearson_correlation(d1, d2), bound = 4 / std::sqrt(double(samples));
    incr.push_back({{"t", {in[a], in[a + 1], in[a + 2]}}, {"correlation", r}});
    res.manifest.checks.push_back(check("increment correlation", std::abs(r) < bound, {{"correlation", r}, {"bound", bound}}));
  }
  res.summary = {{"kappa_bar", k.kappa_bar}, {"table", table}, {"increments", incr}, {"out_of_window", out_of_window}};
  return res;
}

CommandResult cmd_pinned_origin(const ExperimentConfig& cfg) {
  CommandResult res;
  PinnedCheckConfig pc;
  pc.q = cfg.get<double>("q");
  pc.c = cfg.get<double>("c");
  pc.b = cfg.get<double>("b");
  pc.y1 = cfg.get<double>("y1");
  pc.y2 = cfg.get<double>("y2");
  pc.d_sweep = cfg.get<std::vector<double>>("d_sweep");
  pc.samples = cfg.get<long>("samples");
  pc.reference_samples = cfg.get<long>("reference_samples");
  pc.steps = cfg.get<int>("steps");
  require(!pc.d_sweep.empty(), "d_sweep must not be empty");
  Rng rng(cfg.seed());
  const PinnedCheckReport rep = discrete_to_pinned_check(pc, rng);

  OutputDir out(cfg.out_dir(), &res.manifest.files);
  auto os = out.open("pinned_origin.csv");
  os << "d,T,m,gap_tv,origin_var,origin_var_se,origin_mean,origin_mean_se,ks_origin,ks_mid1,ks_mid2,mid_mean,mid_mean_se\n";
  for (const auto& r : rep.rows)
    os << r.d << ',' << r.T << ',' << r.m << ',' << r.gap_tv << ',' << r.origin_var << ',' << r.origin_var_se << ','
       << r.origin_mean << ',' << r.origin_mean_se << ',' << r.ks_origin << ',' << r.ks_mid1 << ',' << r.ks_mid2 << ','
       << r.mid_mean << ',' << r.mid_mean_se << '\n';
  const PinnedCheckRow& last = rep.rows.back();
  const double tv_max = cfg.get<double>("gap_tv_max"), vr = cfg.get<double>("var_rel");
  const double rel = std::abs(last.origin_var / (pc.b / 2) - 1);
  res.manifest.checks.push_back(check("gap law", last.gap_tv < tv_max, {{"d", last.d}, {"tv", last.gap_tv}}));
  res.manifest.checks.push_back(
      check("origin variance", rel < vr, {{"d", last.d}, {"var", last.origin_var}, {"rel_dev", rel}}));
  if (rep.rows.size() >= 2) {
    const double se = std::hypot(rep.extrapolated_mid_mean_se, rep.ref_mid_mean_se);
    const double z = (rep.extrapolated_mid_mean - rep.ref_mid_mean) / se;
    res.manifest.checks.push_back(check("midpoint mean, extrapolated", std::abs(z) < 3,
                                        {{"extrapolated", rep.extrapolated_mid_mean},
                                         {"reference", rep.ref_mid_mean},
                                         {"z", z}}));
  }
  res.summary = {{"rows", rep.rows.size()},
                 {"reference_mid_mean", rep.ref_mid_mean},
                 {"extrapolated_mid_mean", rep.extrapolated_mid_mean}};
  return res;
}

CommandResult cmd_verify_all(const ExperimentConfig& cfg) {
  CommandResult res;
  for (const auto& a : cfg.values.at("archives")) {
    if (!a.is_object() || !a.contains("path")) throw ParameterError("archives entries need a path");
    const std::string path = a["path"];
    const auto e = load_archive(path, a.value("N", 1), a.value("q", 0.5), a.value("c", 0.0));
    res.manifest.checks.push_back(check("archive " + path, true, {{"samples", e.size()}}));
  }
  const auto ids = cfg.get<std::vector<int>>("criteria");
  const auto results = run_acceptance(ids, cfg.seed(), cfg.jobs(), &std::cout);
  for (const auto& r : results) res.manifest.checks.push_back(r);
  OutputDir out(cfg.out_dir(), &res.manifest.files);
  long passed = 0;
  for (const auto& r : results) passed += r.pass;
  res.summary = {{"criteria", results.size()}, {"passed", passed}};
  return res;
}

CommandResult run_experiment(const ExperimentConfig& cfg) {
  static const std::map<std::string, CommandResult (*)(const ExperimentConfig&)> table = {
      {"simulate-lpp", cmd_simulate_lpp},     {"simulate-schur", cmd_simulate_schur},
      {"gibbs-verify", cmd_gibbs_verify},     {"partition-fn", cmd_partition_fn},
      {"kernel-eval", cmd_kernel_eval},       {"kernel-converge", cmd_kernel_converge},
      {"brownian-limit", cmd_brownian_limit}, {"pinned-origin", cmd_pinned_origin},
      {"verify-all", cmd_verify_all}};
  auto it = table.find(cfg.experiment);
  if (it == table.end()) throw ParameterError("unknown experiment '" + cfg.experiment + "'");
  const auto t0 = std::chrono::steady_clock::now();
  CommandResult res = it->second(cfg);
  RunManifest& m = res.manifest;
  m.experiment = cfg.experiment;
  m.config_hash = cfg.hash();
  m.seed = cfg.seed();
  m.config = cfg.values;
  m.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  OutputDir out(cfg.out_dir(), &m.files);
  m.files.push_back("manifest.json");
  Json j = m.to_json();
  j["summary"] = res.summary;
  const fs::path p = out.dir / "manifest.json";
  std::ofstream os(p);
  if (!os) throw IoError(p.string() + ": cannot open for writing");
  os << j.dump(2) << '\n';
  return res;
}

}  // namespace hslpp
