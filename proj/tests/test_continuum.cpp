#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

#include "hslpp/continuum.hpp"
#include "hslpp/stats.hpp"

using namespace hslpp;

namespace {

double integrate(const std::function<double(double)>& f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 12, 1e-12);
}

}  // namespace

TEST_CASE("Brownian bridge endpoints and variance") {
  Rng rng(1);
  const TimeGrid grid{1.0, 3.0, 64};
  std::vector<double> mid;
  for (int s = 0; s < 20000; ++s) {
    GridPath p = sample_brownian_bridge(1.0, 3.0, 0.5, -2.0, grid, rng);
    CHECK(p.front() == 0.5);
    CHECK(p.back() == -2.0);
    mid.push_back(p.v[32]);
  }
  const Moments m = moments(mid);
  CHECK(std::abs(m.mean - (-0.75)) < 3 * m.mean_se);
  CHECK(std::abs(m.var - 0.5) < 3 * m.var_se);
  CHECK_THROWS_AS(sample_brownian_bridge(2.0, 2.0, 0, 0, TimeGrid{2.0, 2.0, 4}, rng), std::domain_error);
  CHECK_THROWS_AS(sample_brownian_bridge(0.0, 1.0, 0, 0, TimeGrid{0.0, 2.0, 4}, rng), std::domain_error);
}

TEST_CASE("Brownian bridge covariance s(b - t)/b") {
  Rng rng(2);
  const double b = 2.0;
  const TimeGrid grid = TimeGrid::on(b, 8);
  const int n = 40000;
  const std::vector<std::pair<int, int>> pairs = {{1, 4}, {2, 6}, {3, 7}, {4, 4}};
  std::vector<std::vector<double>> paths;
  for (int s = 0; s < n; ++s) paths.push_back(sample_brownian_bridge(0, b, 0, 0, grid, rng).v);
  for (auto [i, j] : pairs) {
    const double s_ = grid.time(i), t = grid.time(j);
    const double exact = s_ * (b - t) / b;
    double acc = 0;
    for (auto& p : paths) acc += p[i] * p[j];
    const double est = acc / n;
    const double vi = s_ * (b - s_) / b, vj = t * (b - t) / b;
    const double se = std::sqrt((vi * vj + exact * exact) / n);
    CAPTURE(i);
    CAPTURE(j);
    CHECK(std::abs(est - exact) < 3 * se);
  }
}

TEST_CASE("Bessel bridge is positive inside and hits its endpoints") {
  Rng rng(3);
  const TimeGrid grid = TimeGrid::on(1.5, 32);
  for (int s = 0; s < 10000; ++s) {
    GridPath v = sample_bessel_bridge(1.5, 0.7, grid, rng);
    CHECK(v.front() == 0.0);
    CHECK(v.back() == 0.7);
    for (int k = 1; k < grid.steps; ++k) REQUIRE(v.v[k] > 0);
  }
  CHECK_THROWS_AS(sample_bessel_bridge(1.0, 0.0, TimeGrid::on(1.0, 4), rng), std::domain_error);
  CHECK_THROWS_AS(sample_bessel_bridge(-1.0, 1.0, TimeGrid::on(1.0, 4), rng), std::domain_error);
}

TEST_CASE("Bessel bridge density integrates to one") {
  for (double y : {0.3, 1.0, 2.5})
    for (double t : {0.2, 0.5, 0.9}) {
      const double mass = integrate([&](double v) { return bessel_bridge_density(1.0, y, t, v); }, 0, 20);
      CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("Bessel bridge one-point law at b/2 against the density") {
  Rng rng(4);
  const double b = 1.0, y = 1.2, t = 0.5;
  const TimeGrid grid = TimeGrid::on(b, 2);  // the law at b/2 is exact on this grid
  const int bins = 40;
  const double vmax = 4.0;
  std::vector<double> counts(bins + 1, 0.0), probs(bins + 1, 0.0);
  for (int s = 0; s < 100000; ++s) {
    const double v = sample_bessel_bridge(b, y, grid, rng).v[1];
    counts[std::min(bins, static_cast<int>(v / vmax * bins))] += 1;
  }
  double covered = 0;
  for (int k = 0; k < bins; ++k) {
    probs[k] = integrate([&](double v) { return bessel_bridge_density(b, y, t, v); }, k * vmax / bins,
                         (k + 1) * vmax / bins);
    covered += probs[k];
  }
  probs[bins] = std::max(0.0, 1 - covered);
  const ChiSquare r = chi_square_test(counts, probs);
  CAPTURE(r.statistic);
  CHECK(r.p_value > 1e-3);
}

TEST_CASE("Bessel bridge with a far endpoint is nearly linear") {
  Rng rng(5);
  const double y = 60.0;
  std::vector<double> mid;
  for (int s = 0; s < 2000; ++s) mid.push_back(sample_bessel_bridge(1.0, y, TimeGrid::on(1.0, 16), rng).v[8]);
  CHECK(std::abs(moments(mid).mean - y / 2) < 0.05 * y / 2);
}

TEST_CASE("pinned pair: pinning, endpoints, ordering and origin moments") {
  Rng rng(6);
  const double b = 2.0, y1 = 1.5, y2 = -0.5;
  const TimeGrid grid = TimeGrid::on(b, 64);
  std::vector<double> origin;
  for (int s = 0; s < 20000; ++s) {
    PinnedPairSample p = sample_pinned_pair(b, y1, y2, grid, rng);
    REQUIRE(p.Q1.front() == p.Q2.front());
    REQUIRE(p.Q1.back() == y1);
    REQUIRE(p.Q2.back() == y2);
    for (int k = 0; k < grid.size(); ++k) REQUIRE(p.Q1.v[k] >= p.Q2.v[k]);
    origin.push_back(p.Q1.front());
  }
  const Moments m = moments(origin);
  CHECK(std::abs(m.mean - (y1 + y2) / 2) < 3 * m.mean_se);
  CHECK(std::abs(m.var - b / 2) < 3 * m.var_se);
  CHECK_THROWS_AS(sample_pinned_pair(b, y2, y1, grid, rng), std::domain_error);
}

TEST_CASE("pinned pair origin variance is stable under grid refinement") {
  Rng rng(7);
  const double b = 1.0;
  auto var_on = [&](int steps) {
    std::vector<double> o;
    for (int s = 0; s < 20000; ++s) o.push_back(sample_pinned_pair(b, 1.0, 0.0, TimeGrid::on(b, steps), rng).Q1.front());
    return moments(o);
  };
  const Moments coarse = var_on(256), fine = var_on(512);
  CHECK(std::abs(coarse.var - fine.var) < 2 * std::hypot(coarse.var_se, fine.var_se));
}

TEST_CASE("pinned ensembles") {
  Rng rng(8);
  const double b = 1.0;
  const TimeGrid grid = TimeGrid::on(b, 64);
  for (int s = 0; s < 200; ++s) CHECK(sample_pinned_ensemble(b, {1.0, 0.0}, std::nullopt, grid, rng).tries == 1);

  // Widely separated pairs rarely interact.
  long tries = 0;
  for (int s = 0; s < 1000; ++s) {
    PinnedEnsembleSample e = sample_pinned_ensemble(b, {20.0, 19.0, 0.0, -1.0}, std::nullopt, grid, rng);
    tries += e.tries;
    REQUIRE(pinned_avoidance_holds(e.curves, std::nullopt));
  }
  CHECK(1000.0 / tries > 0.99);

  // Close pairs over a floor: every accepted sample avoids on the grid.
  GridPath floor{grid, std::vector<double>(grid.size())};
  for (int k = 0; k < grid.size(); ++k) floor.v[k] = -2.0 + 0.5 * grid.time(k);
  for (int s = 0; s < 200; ++s) {
    PinnedEnsembleSample e = sample_pinned_ensemble(b, {1.0, 0.5, 0.0, -0.5}, floor, grid, rng);
    REQUIRE(e.curves.size() == 4);
    CHECK(pinned_avoidance_holds(e.curves, floor));
    CHECK(e.curves[1].back() == 0.5);
    CHECK(e.curves[2].front() <= e.curves[1].front());
  }

  // A floor that rises far above the curves cannot be avoided.
  GridPath wall{grid, std::vector<double>(grid.size(), 50.0)};
  wall.v.back() = -5.0;
  try {
    sample_pinned_ensemble(b, {1.0, 0.0}, wall, grid, rng, 50);
    FAIL("expected rejection exhaustion");
  } catch (const RejectionExhausted& e) {
    CHECK(e.rate == 0.0);
  }
  CHECK_THROWS_AS(sample_pinned_ensemble(b, {1.0, 0.0, 0.5}, std::nullopt, grid, rng), std::domain_error);
  CHECK_THROWS_AS(sample_pinned_ensemble(b, {0.0, 1.0}, std::nullopt, grid, rng), std::domain_error);
  GridPath high{grid, std::vector<double>(grid.size(), 2.0)};
  CHECK_THROWS_AS(sample_pinned_ensemble(b, {1.0, 0.0}, high, grid, rng), std::domain_error);
}

TEST_CASE("interacting pair approaches the pinned pair") {
  Rng rng(9);
  PinnedCheckConfig cfg;  // q = 0.5, c = 0.3, b = 1, y = (1, -1), d in {100, 400}
  const PinnedCheckReport rep = discrete_to_pinned_check(cfg, rng);
  REQUIRE(rep.rows.size() == 2);
  const auto& lo = rep.rows[0];
  const auto& hi = rep.rows[1];
  CHECK(hi.T == 400);
  CHECK(hi.gap_tv < 0.05);
  CHECK(std::abs(hi.origin_var - cfg.b / 2) < 0.15 * cfg.b / 2);
  const int decreasing = (lo.ks_origin > hi.ks_origin) + (lo.ks_mid1 > hi.ks_mid1) + (lo.ks_mid2 > hi.ks_mid2);
  CHECK(decreasing >= 2);
  CHECK(std::abs(rep.extrapolated_mid_mean - rep.ref_mid_mean) <
        3 * std::hypot(rep.extrapolated_mid_mean_se, rep.ref_mid_mean_se));

  PinnedCheckConfig bad = cfg;
  bad.c = 1.2;
  CHECK_THROWS_AS(discrete_to_pinned_check(bad, rng), std::domain_error);
}

TEST_CASE("origin gap law for a strongly attracting boundary") {
  Rng rng(10);
  PinnedCheckConfig cfg;
  cfg.c = 0.8;
  cfg.d_sweep = {400};
  cfg.samples = 100000;
  cfg.reference_samples = 2000;
  CHECK(discrete_to_pinned_check(cfg, rng).rows[0].gap_tv < 0.05);
}
