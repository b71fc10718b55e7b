#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "hslpp/bridges.hpp"
#include "hslpp/continuum.hpp"
#include "hslpp/experiments.hpp"
#include "hslpp/kernels.hpp"
#include "hslpp/partition_fn.hpp"
#include "hslpp/pfaffian.hpp"
#include "hslpp/phase.hpp"
#include "hslpp/schur.hpp"
#include "hslpp/stats.hpp"

namespace hslpp {

namespace {

bool has_particle(const Partition& l, long x, int n) {
  for (int i = 1; i <= n; ++i)
    if (part(l, i - 1) - i == x) return true;
  return false;
}

CheckResult rsk_exactness(std::uint64_t seed, int) {
  Rng rng(seed);
  std::uniform_int_distribution<long> d(0, 4);
  long arrays = 0, mismatches = 0;
  for (int m = 1; m <= 12; ++m)
    for (int n = 1; m * n <= 12; ++n)
      for (int rep = 0; rep < 50; ++rep, ++arrays) {
        WeightArray W(m, n);
        for (int i = 1; i <= m; ++i)
          for (int j = 1; j <= n; ++j) W(i, j) = d(rng);
        const Partition lam = rsk_shape(W, m, n);
        long pre = 0;
        for (int k = 1; k <= std::min(m, n); ++k) {
          pre += part(lam, k - 1);
          mismatches += pre != lpp_gk_bruteforce(W, m, n, k);
        }
      }
  return {0, "", mismatches == 0, {{"arrays", arrays}, {"mismatches", mismatches}}};
}

CheckResult schur_identity(std::uint64_t seed, int jobs) {
  const int N = 2, M = 1;
  const double q = 0.3, c = 0.6;
  const long samples = 100000, cutoff = 40;
  std::map<std::vector<Partition>, double> law;
  double mass = 0;
  enumerate_schur_support(N, M, q, c, cutoff, [&](const std::vector<Partition>& l, double w) {
    law[l] += w;
    mass += w;
  });
  for (auto& [k, v] : law) v /= mass;
  auto draws = replicate<std::vector<Partition>>(samples, seed, jobs, [&](long, Rng& rng) {
    return sample_schur_process(N, M, ModelParams{q, c}, rng).lambdas;
  });
  std::map<std::vector<Partition>, long> counts;
  long outside = 0;
  for (auto& d : draws) {
    if (law.count(d))
      ++counts[d];
    else
      ++outside;
  }
  const double tv = tv_distance(law, counts);
  return {0, "", tv < 0.02, {{"tv", tv}, {"support", law.size()}, {"outside_cutoff", outside}}};
}

CheckResult kernel_monte_carlo(std::uint64_t seed, int jobs) {
  const int N = 3, M = 2;
  const double q = 0.4, c = 0.7;
  const long samples = 100000;
  const KernelFn K = geo_kernel_fn(q, c, N);
  struct Pt {
    int u;
    long x;
  };
  const std::vector<Pt> singles = {{0, -1}, {0, -2}, {0, -3}, {1, -1}, {1, -2},
                                   {1, -3}, {2, 0},  {2, -1}, {2, -2}, {2, -3}};
  const std::vector<std::pair<Pt, Pt>> pairs = {{{2, -1}, {2, 0}}, {{2, -2}, {2, 1}}, {{1, -1}, {2, 1}}};
  auto seqs = replicate<std::vector<Partition>>(samples, seed, jobs, [&](long, Rng& rng) {
    return sample_schur_process(N, M, ModelParams{q, c}, rng).lambdas;
  });
  double zmax = 0;
  Json rows = Json::array();
  auto test = [&](const std::vector<SpacePoint>& pts, long hits) {
    const Correlation r = correlation_fn(pts, K);
    const double emp = double(hits) / samples, sd = std::sqrt(std::max(r.value * (1 - r.value), 1e-12) / samples);
    const double z = (emp - r.value) / sd;
    zmax = std::max(zmax, std::abs(z));
    rows.push_back({{"points", pts.size()}, {"exact", r.value}, {"empirical", emp}, {"z", z}});
  };
  for (const auto& p : singles) {
    long h = 0;
    for (const auto& l : seqs) h += has_particle(l[p.u], p.x, N);
    test({{double(p.u), double(p.x)}}, h);
  }
  for (const auto& [a, b] : pairs) {
    long h = 0;
    for (const auto& l : seqs) h += has_particle(l[a.u], a.x, N) && has_particle(l[b.u], b.x, N);
    test({{double(a.u), double(a.x)}, {double(b.u), double(b.x)}}, h);
  }
  return {0, "", zmax < 3, {{"max_abs_z", zmax}, {"rows", rows}}};
}

CheckResult partition_identity(std::uint64_t, int) {
  double worst = 0;
  long cases = 0;
  for (int T = 1; T <= 6; ++T)
    for (long gap = 0; gap <= 5; ++gap)
      for (double q : {0.2, 0.5, 0.8})
        for (double c : {0.0, 0.5, 0.9, 1.5}) {
          if (c * q >= 1) continue;
          const double s = partition_fn_series(T, gap, 0, q, c, 2000).value;
          worst = std::max(worst, std::abs(partition_fn_contour(T, gap, 0, q, c) - s) / s);
          ++cases;
        }
  const double z = partition_fn_enumerate(1, 1, 0, 0.5, 0.8, 200);
  const double ze = std::abs(z - 13.0 / 6.0) / (13.0 / 6.0);
  return {0, "", worst < 1e-8 && ze < 1e-12, {{"cases", cases}, {"worst_rel_err", worst}, {"enumerated", z}}};
}

CheckResult origin_statistics(std::uint64_t seed, int) {
  PinnedCheckConfig cfg;
  cfg.q = 0.5;
  cfg.c = 0.3;
  cfg.b = 1.0;
  cfg.d_sweep = {400};
  Rng rng(seed);
  const PinnedCheckReport rep = discrete_to_pinned_check(cfg, rng);
  const PinnedCheckRow& r = rep.rows.at(0);
  const double rel = std::abs(r.origin_var / (cfg.b / 2) - 1);
  return {0, "", r.gap_tv < 0.05 && rel < 0.15,
          {{"T", r.T}, {"gap_tv", r.gap_tv}, {"origin_var", r.origin_var}, {"rel_dev", rel}}};
}

CheckResult monotone_coupling(std::uint64_t seed, int) {
  Rng rng(seed);
  BridgeSpec top{0, 10, {8, 5, 2}, {15, 11, 7}, std::nullopt, std::nullopt};
  BridgeSpec bot{0, 10, {6, 5, 0}, {14, 9, 7}, std::nullopt, std::nullopt};
  const CouplingReport rep = monotone_coupled_chains(top, bot, 3, 1000000, rng);

  // Stationarity on a small two-curve space: the uniform law over all admissible configurations.
  BridgeSpec sp{0, 4, {1, 0}, {4, 2}, std::nullopt, std::nullopt};
  std::vector<Paths> states;
  Paths Q(2, std::vector<long>(5));
  Q[0][0] = 1, Q[1][0] = 0, Q[0][4] = 4, Q[1][4] = 2;
  for (long a = 0; a < 5 * 5 * 5 * 5 * 5 * 5; ++a) {
    long r = a;
    for (int i = 0; i < 2; ++i)
      for (int s = 1; s <= 3; ++s) Q[i][s] = r % 5, r /= 5;
    if (satisfies(sp, Q)) states.push_back(Q);
  }
  std::sort(states.begin(), states.end());
  Paths X = maximal_state(sp);
  std::vector<double> counts(states.size(), 0);
  std::uniform_int_distribution<int> di(0, 1), ds(1, 3);
  for (int n = 0; n < 1000; ++n) heat_bath_update(sp, X, di(rng), ds(rng), uniform01(rng));
  for (int n = 0; n < 60000; ++n) {
    for (int r = 0; r < 12; ++r) heat_bath_update(sp, X, di(rng), ds(rng), uniform01(rng));
    counts[std::lower_bound(states.begin(), states.end(), X) - states.begin()] += 1;
  }
  const ChiSquare chi = chi_square_test(counts, std::vector<double>(states.size(), 1.0));
  return {0, "",
          rep.ordering_violations == 0 && rep.shift_violations == 0 && rep.steps >= 1000000 && chi.p_value > 1e-3,
          {{"updates", rep.steps},
           {"ordering_violations", rep.ordering_violations},
           {"shift_violations", rep.shift_violations},
           {"states", states.size()},
           {"chi2_p", chi.p_value}}};
}

CheckResult bulk_convergence(std::uint64_t, int) {
  const double q = 0.5;
  bool ok = true;
  Json out = Json::object();
  for (double c : {0.8, 1.3}) {
    std::array<double, 5> prev;
    prev.fill(INFINITY);
    Json rows = Json::array();
    for (int N : {50, 200, 800}) {
      BulkKernelN K(q, c, N);
      BulkLimitKernel L{K.k.f1, K.k.sigma1};
      const long xs = K.snap(1, 0), yt = K.snap(1.5, 0.3);
      const BulkPieces a = K.pieces(1, xs, 1.5, yt), b = L.pieces(1, K.x_of(1, xs), 1.5, K.x_of(1.5, yt));
      const double sc = (1 - c) * (1 - c) * K.k.sigma1 * K.k.sigma1 * std::pow(N, 2.0 / 3.0);
      const std::array<double, 5> e{std::abs(a.I11 / sc - b.I11), std::abs(a.I12 - b.I12), std::abs(a.I22 * sc - b.I22),
                                    std::abs(a.R12 - b.R12), std::abs(a.R22 * sc - b.R22)};
      for (int i = 0; i < 5; ++i) ok = ok && e[i] < prev[i];
      prev = e;
      rows.push_back({{"N", N}, {"I11", e[0]}, {"I12", e[1]}, {"I22", e[2]}, {"R12", e[3]}, {"R22", e[4]}});
    }
    out["c=" + std::to_string(c).substr(0, 3)] = rows;
  }
  return {0, "", ok, out};
}

CheckResult edge_convergence(std::uint64_t, int) {
  const double q = 0.5, c = 1.4;
  const ScalingConstantsEdge k(q, c);
  bool ok = true;
  Json out = Json::array();
  for (auto [s, x, t, y] : {std::tuple{0.0, 0.0, 1.0, 0.5}, {0.5, 0.2, 2.0, -0.4}, {1.0, 0.3, 1.0, -0.2}}) {
    double p12 = INFINITY, p11 = INFINITY, p22 = INFINITY;
    Json rows = Json::array();
    for (int N : {100, 400, 1600}) {
      EdgeKernelN E(q, c, N);
      const long xs = E.snap(s, x), yt = E.snap(t, y);
      const KernelValue2x2 v = E.at_lattice(s, xs, t, yt);
      const double e12 = std::abs(v.k12 - kernel_BM(k.kappa_bar - s, E.x_of(s, xs), k.kappa_bar - t, E.x_of(t, yt)));
      const double e11 = std::abs(v.k11), e22 = std::abs(v.k22);
      ok = ok && e12 < p12 && e11 < p11 && e22 < p22;
      p12 = e12, p11 = e11, p22 = e22;
      rows.push_back({{"N", N}, {"K12_err", e12}, {"K11", e11}, {"K22", e22}});
    }
    out.push_back({{"point", {s, x, t, y}}, {"rows", rows}});
  }
  return {0, "", ok, {{"points", out}}};
}

CheckResult phase_checks(std::uint64_t, int) {
  long checks = 0, failed = 0;
  Json bad = Json::array();
  for (double q : {0.3, 0.5, 0.7}) {
    for (const auto& ch : bulk_phase_diagnostics(q).checks) {
      ++checks;
      if (!ch.ok) ++failed, bad.push_back({{"q", q}, {"name", ch.name}, {"value", ch.value}});
    }
    for (double c : {1.1, 1.4}) {
      if (c * q >= 1) continue;
      const ScalingConstantsEdge k(q, c);
      const auto rep = phase_diagnostics(q, c, {0, k.kappa_bar / 4, k.kappa_bar / 2, 3 * k.kappa_bar / 4});
      checks += static_cast<long>(rep.checks.size());
      for (const auto& v : rep.violations())
        ++failed, bad.push_back({{"q", q}, {"c", c}, {"kappa", v.kappa}, {"name", v.name}, {"value", v.value}});
    }
  }
  return {0, "", checks > 0 && failed == 0, {{"checks", checks}, {"failed", failed}, {"violations", bad}}};
}

CheckResult brownian_limit(std::uint64_t seed, int jobs) {
  const double q = 0.5, c = 1.4;
  const int N = 200, M = 4 * N;
  const long samples = 2000;
  const ScalingConstantsEdge k(q, c);
  const std::vector<int> ts = {0, 2, 4};
  auto vals = replicate<std::vector<double>>(samples, seed, jobs, [&](long, Rng& rng) {
    const std::vector<long> G = lpp_g1_table(sample_weights(N + M, N, ModelParams{q, c}, rng), N + M, N);
    std::vector<double> v;
    for (int t : ts) v.push_back(scale_top_value(double(G[std::size_t(N + t * N) * (N + 1) + N]), t * N, N, k));
    return v;
  });
  bool ok = true;
  Json rows = Json::array();
  for (std::size_t a = 0; a < ts.size(); ++a) {
    std::vector<double> col;
    for (const auto& v : vals) col.push_back(v[a]);
    const Moments m = moments(col);
    const double ratio = m.var / (k.kappa_bar - ts[a]), ms = std::abs(m.mean) / std::sqrt(m.var);
    ok = ok && ratio >= 0.85 && ratio <= 1.15 && ms < 0.1;
    rows.push_back({{"t", ts[a]}, {"var_ratio", ratio}, {"abs_mean_over_sd", ms}});
  }
  return {0, "", ok, {{"kappa_bar", k.kappa_bar}, {"rows", rows}}};
}

CheckResult tail_moments(std::uint64_t, int) {
  double worst = 0;
  for (auto [reg, c, a] : {std::tuple{Regime::bulk, 0.8, 0.0}, {Regime::bulk, 1.4, 0.5}, {Regime::edge, 1.4, 0.0},
                           {Regime::edge, 1.4, 1.5}}) {
    const double m = expected_count_tail(reg, 0.5, c, 50, 0.5, a).total;
    const double d = expected_count_direct(reg, 0.5, c, 50, 0.5, a);
    worst = std::max(worst, std::abs(m - d) / std::abs(d));
  }
  const ScalingConstantsEdge k(0.5, 1.4);
  const double kap = 0.5;
  std::vector<double> dev;
  for (int N : {100, 400}) {
    const double a = (k.h1(kap) - k.h2(kap)) * std::sqrt(N) / k.sigma2 + 1;
    dev.push_back(std::abs(expected_count_tail(Regime::edge, 0.5, 1.4, N, kap, a).total - 1));
  }
  return {0, "", worst < 1e-6 && dev[1] < dev[0], {{"worst_rel_err", worst}, {"threshold_deviation", dev}}};
}

CheckResult continuum_samplers(std::uint64_t seed, int) {
  Rng rng(seed);
  // Bessel bridge one-point law at b/2, exact on a two-step grid.
  const double b = 1.0, y = 1.2, vmax = 4.0;
  const int bins = 40;
  std::vector<double> counts(bins + 1, 0.0), probs(bins + 1, 0.0);
  for (int s = 0; s < 100000; ++s) {
    const double v = sample_bessel_bridge(b, y, TimeGrid::on(b, 2), rng).v[1];
    counts[std::min(bins, static_cast<int>(v / vmax * bins))] += 1;
  }
  double covered = 0;
  for (int j = 0; j < bins; ++j) {
    probs[j] = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        [&](double v) { return bessel_bridge_density(b, y, b / 2, v); }, j * vmax / bins, (j + 1) * vmax / bins, 12,
        1e-12);
    covered += probs[j];
  }
  probs[bins] = std::max(0.0, 1 - covered);
  const ChiSquare chi = chi_square_test(counts, probs);

  // Pinned pair origin moments.
  const double bp = 2.0, y1 = 1.5, y2 = -0.5;
  std::vector<double> origin;
  for (int s = 0; s < 20000; ++s) origin.push_back(sample_pinned_pair(bp, y1, y2, TimeGrid::on(bp, 64), rng).Q1.front());
  const Moments m = moments(origin);
  const double zm = (m.mean - (y1 + y2) / 2) / m.mean_se, zv = (m.var - bp / 2) / m.var_se;

  // Pinned ensembles over a floor avoid on every grid point.
  const TimeGrid grid = TimeGrid::on(1.0, 64);
  GridPath floor{grid, std::vector<double>(grid.size())};
  for (int j = 0; j < grid.size(); ++j) floor.v[j] = -2.0 + 0.5 * grid.time(j);
  long bad = 0;
  for (int s = 0; s < 500; ++s)
    bad += !pinned_avoidance_holds(sample_pinned_ensemble(1.0, {1.0, 0.5, 0.0, -0.5}, floor, grid, rng).curves, floor);
  return {0, "", chi.p_value > 1e-3 && std::abs(zm) < 3 && std::abs(zv) < 3 && bad == 0,
          {{"bessel_chi2_p", chi.p_value}, {"pair_mean_z", zm}, {"pair_var_z", zv}, {"avoidance_failures", bad}}};
}

CheckResult r22_closed_form(std::uint64_t seed, int) {
  Rng rng(seed);
  const ScalingConstantsBulk k(0.5);
  const BulkLimitKernel L{k.f1, k.sigma1};
  double worst_closed = 0, worst_conj = 0;
  bool ok = true;
  for (int i = 0; i < 5; ++i) {
    const double s = 0.2 + 1.5 * uniform01(rng), t = 0.2 + 1.5 * uniform01(rng);
    const double x = -1 + 2 * uniform01(rng), y = -1 + 2 * uniform01(rng);
    const double e = std::abs(L.R22_contour(s, x, t, y) - L.R22_closed(s, x, t, y));
    worst_closed = std::max(worst_closed, e);
    ok = ok && e < 1e-8;
    const KernelValue2x2 a = L(s, x, t, y), b = L.via_half_space(s, x, t, y);
    const double tol = 10 * (a.err + b.err) + 1e-10;
    const double d = std::max({std::abs(a.k11 - b.k11), std::abs(a.k12 - b.k12), std::abs(a.k21 - b.k21),
                               std::abs(a.k22 - b.k22)});
    worst_conj = std::max(worst_conj, d / tol);
    ok = ok && d < tol;
  }
  return {0, "", ok, {{"closed_form_max_err", worst_closed}, {"conjugation_max_err_over_tol", worst_conj}}};
}

}  // namespace

const std::vector<Criterion>& acceptance_criteria() {
  static const std::vector<Criterion> list = {
      {1, "RSK prefix sums equal brute-force path maxima", rsk_exactness},
      {2, "LPP shapes follow the Schur process law", schur_identity},
      {3, "exact kernel against Monte Carlo correlations", kernel_monte_carlo},
      {4, "partition function: contour equals series", partition_identity},
      {5, "origin statistics of the interacting pair", origin_statistics},
      {6, "monotone coupling and stationarity", monotone_coupling},
      {7, "bulk kernel convergence", bulk_convergence},
      {8, "edge kernel convergence", edge_convergence},
      {9, "steepest-descent diagnostics", phase_checks},
      {10, "Brownian top-curve limit", brownian_limit},
      {11, "tail moment identities", tail_moments},
      {12, "continuum samplers", continuum_samplers},
      {13, "closed form and half-space conjugation of the limit kernel", r22_closed_form},
  };
  return list;
}

std::string format_check(const CheckResult& r) {
  std::ostringstream os;
  os << (r.pass ? "PASS" : "FAIL") << " criterion " << r.id << ": " << r.name << " (" << std::fixed
     << std::setprecision(1) << r.seconds << " s) " << r.numbers.dump();
  return os.str();
}

std::vector<CheckResult> run_acceptance(const std::vector<int>& ids, std::uint64_t seed, int jobs, std::ostream* log) {
  std::vector<CheckResult> out;
  for (const auto& c : acceptance_criteria()) {
    if (!ids.empty() && std::find(ids.begin(), ids.end(), c.id) == ids.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    CheckResult r;
    try {
      r = c.run(derive_seed(seed, 1000 + c.id), jobs);
    } catch (const std::exception& e) {
      r.pass = false;
      r.numbers = {{"error", e.what()}};
    }
    r.id = c.id;
    r.name = c.name;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (log) *log << format_check(r) << std::endl;
    out.push_back(r);
  }
  return out;
}

}  // namespace hslpp
