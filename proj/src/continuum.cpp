#include "hslpp/continuum.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

#include "hslpp/partition_fn.hpp"
#include "hslpp/stats.hpp"

namespace hslpp {

namespace {

void check_grid(const TimeGrid& g, double a, double b) {
  if (g.steps < 1) throw std::domain_error("grid needs at least one step");
  if (std::abs(g.t0 - a) > 1e-12 * std::max(1.0, std::abs(a)) || std::abs(g.t1 - b) > 1e-12 * std::max(1.0, std::abs(b)))
    throw std::domain_error("grid does not span the interval");
}

double heat(double t, double x) { return std::exp(-x * x / (2 * t)) / std::sqrt(2 * std::numbers::pi * t); }

}  // namespace

GridPath sample_brownian_bridge(double a, double b, double x, double y, const TimeGrid& grid, Rng& rng) {
  if (!(a < b)) throw std::domain_error("bridge interval must have a < b");
  check_grid(grid, a, b);
  GridPath p{grid, std::vector<double>(grid.size())};
  p.v[0] = x;
  for (int k = 0; k + 1 < grid.steps; ++k) {
    const double t = grid.time(k), dt = grid.time(k + 1) - t, rest = b - t;
    const double mean = p.v[k] + (y - p.v[k]) * dt / rest;
    const double var = dt * (rest - dt) / rest;
    p.v[k + 1] = mean + std::sqrt(var) * normal(rng);
  }
  p.v[grid.steps] = y;
  return p;
}

GridPath sample_reverse_bm(double y, const TimeGrid& grid, Rng& rng) {
  check_grid(grid, grid.t0, grid.t1);
  GridPath p{grid, std::vector<double>(grid.size())};
  p.v[grid.steps] = y;
  for (int k = grid.steps; k > 0; --k) p.v[k - 1] = p.v[k] + std::sqrt(grid.time(k) - grid.time(k - 1)) * normal(rng);
  return p;
}

GridPath sample_bessel_bridge(double b, double y, const TimeGrid& grid, Rng& rng) {
  if (!(b > 0) || !(y > 0)) throw std::domain_error("Bessel bridge needs b > 0 and y > 0");
  GridPath w1 = sample_brownian_bridge(0, b, 0, y, grid, rng);
  GridPath w2 = sample_brownian_bridge(0, b, 0, 0, grid, rng);
  GridPath w3 = sample_brownian_bridge(0, b, 0, 0, grid, rng);
  GridPath out{grid, std::vector<double>(grid.size())};
  for (int k = 0; k < grid.size(); ++k) out.v[k] = std::hypot(w1.v[k], w2.v[k], w3.v[k]);
  out.v[0] = 0;
  out.v[grid.steps] = y;
  return out;
}

double bessel_bridge_density(double b, double y, double t, double v) {
  if (!(t > 0 && t < b)) throw std::domain_error("density time must lie in (0,b)");
  if (v <= 0) return 0;
  const double s = b - t;
  return (b / t) * (v / y) * heat(t, v) / heat(b, y) * (heat(s, v - y) - heat(s, v + y));
}

PinnedPairSample sample_pinned_pair(double b, double y1, double y2, const TimeGrid& grid, Rng& rng) {
  if (!(b > 0) || !(y1 > y2)) throw std::domain_error("pinned pair needs b > 0 and y1 > y2");
  check_grid(grid, 0, b);
  const double r = std::numbers::sqrt2 / 2;
  GridPath U = sample_reverse_bm(r * (y1 + y2), grid, rng);
  GridPath V = sample_bessel_bridge(b, r * (y1 - y2), grid, rng);
  PinnedPairSample s{{grid, std::vector<double>(grid.size())}, {grid, std::vector<double>(grid.size())}, y1, y2};
  for (int k = 0; k < grid.size(); ++k) {
    s.Q1.v[k] = r * (U.v[k] + V.v[k]);
    s.Q2.v[k] = r * (U.v[k] - V.v[k]);
  }
  s.Q2.v[0] = s.Q1.v[0];
  s.Q1.v[grid.steps] = y1;
  s.Q2.v[grid.steps] = y2;
  return s;
}

bool pinned_avoidance_holds(const std::vector<GridPath>& curves, const std::optional<GridPath>& g) {
  const std::size_t n = curves.size();
  for (std::size_t i = 1; i < n; i += 2) {
    const GridPath* below = i + 1 < n ? &curves[i + 1] : (g ? &*g : nullptr);
    if (!below) continue;
    for (std::size_t k = 0; k < curves[i].v.size(); ++k)
      if (!(curves[i].v[k] > below->v[k])) return false;
  }
  return true;
}

PinnedEnsembleSample sample_pinned_ensemble(double b, const std::vector<double>& y, const std::optional<GridPath>& g,
                                            const TimeGrid& grid, Rng& rng, long max_tries) {
  if (y.empty() || y.size() % 2) throw std::domain_error("need an even, positive number of boundary values");
  for (std::size_t i = 1; i < y.size(); ++i)
    if (!(y[i - 1] > y[i])) throw std::domain_error("boundary values must be strictly decreasing");
  if (g) {
    if (g->grid.steps != grid.steps || g->v.size() != static_cast<std::size_t>(grid.size()))
      throw std::domain_error("floor must live on the sampling grid");
    if (!(g->back() < y.back())) throw std::domain_error("floor must end below the lowest curve");
  }
  PinnedEnsembleSample out;
  for (out.tries = 1; out.tries <= max_tries; ++out.tries) {
    out.curves.clear();
    for (std::size_t i = 0; i < y.size(); i += 2) {
      PinnedPairSample p = sample_pinned_pair(b, y[i], y[i + 1], grid, rng);
      out.curves.push_back(std::move(p.Q1));
      out.curves.push_back(std::move(p.Q2));
    }
    if (pinned_avoidance_holds(out.curves, g)) return out;
  }
  throw RejectionExhausted("no avoiding sample in " + std::to_string(max_tries) + " tries", 0.0);
}

PinnedCheckReport discrete_to_pinned_check(const PinnedCheckConfig& cfg, Rng& rng) {
  if (!(cfg.c >= 0 && cfg.c < 1)) throw std::domain_error("the pinned limit needs c in [0,1)");
  if (cfg.samples < 2 || cfg.reference_samples < 2) throw std::domain_error("need at least two samples");
  if (cfg.steps % 2) throw std::domain_error("reference grid must contain b/2");
  PinnedCheckReport rep;
  rep.config = cfg;

  // Continuum reference at b/2.
  const TimeGrid grid = TimeGrid::on(cfg.b, cfg.steps);
  std::vector<double> ref1, ref2, ref_mid;
  for (long s = 0; s < cfg.reference_samples; ++s) {
    PinnedPairSample p = sample_pinned_pair(cfg.b, cfg.y1, cfg.y2, grid, rng);
    const double a = p.Q1.v[cfg.steps / 2], z = p.Q2.v[cfg.steps / 2];
    ref1.push_back(a);
    ref2.push_back(z);
    ref_mid.push_back(0.5 * (a + z));
  }
  const Moments rm = moments(ref_mid);
  rep.ref_mid_mean = rm.mean;
  rep.ref_mid_mean_se = rm.mean_se;

  const double centre = 0.5 * (cfg.y1 + cfg.y2);
  const double sd0 = std::sqrt(cfg.b / 2);
  auto normal_cdf = [&](double x) { return 0.5 * std::erfc(-(x - centre) / (sd0 * std::numbers::sqrt2)); };

  for (double d : cfg.d_sweep) {
    PairScaling ps(cfg.q, cfg.c, cfg.b, d, cfg.y1, cfg.y2);
    PinnedCheckRow row;
    row.d = d;
    row.T = ps.T;
    row.m = static_cast<int>(std::lround(cfg.b * d / 2));
    const double scale = ps.sigma * std::sqrt(d);

    OriginLaw origin(ps.T, ps.Y1, ps.Y2, cfg.q, cfg.c);
    std::map<long, long> gaps;
    std::vector<double> l1, mid0;
    for (long s = 0; s < cfg.samples; ++s) {
      auto [x1, x2] = origin.sample(rng);
      ++gaps[x1 - x2];
      l1.push_back(x1 / scale);
      mid0.push_back(0.5 * (x1 + x2) / scale - centre);
    }
    std::map<long, double> law;
    for (long k = 0;; ++k) {
      const double pk = (1 - cfg.c) * (1 - cfg.c) * (k + 1) * std::pow(cfg.c, double(k));
      if (pk < 1e-16 || (cfg.c == 0 && k > 0)) break;
      law[k] = pk;
    }
    row.gap_tv = tv_distance(law, gaps);
    const Moments m0 = moments(mid0);
    row.origin_mean = m0.mean;
    row.origin_mean_se = m0.mean_se;
    row.origin_var = m0.var;
    row.origin_var_se = m0.var_se;
    row.ks_origin = ks_statistic(l1, normal_cdf);

    SliceLaw slice(ps.T, row.m, ps.Y1, ps.Y2, cfg.q, cfg.c);
    std::vector<double> s1, s2, mid;
    for (long s = 0; s < cfg.samples; ++s) {
      auto [a, z] = slice.sample(rng);
      s1.push_back((a - ps.p * row.m) / scale);
      s2.push_back((z - ps.p * row.m) / scale);
      mid.push_back(0.5 * (s1.back() + s2.back()));
    }
    row.ks_mid1 = ks_two_sample(s1, ref1);
    row.ks_mid2 = ks_two_sample(s2, ref2);
    const Moments mm = moments(mid);
    row.mid_mean = mm.mean;
    row.mid_mean_se = mm.mean_se;
    rep.rows.push_back(row);
  }
  if (rep.rows.size() >= 2) {
    const auto& a = rep.rows[rep.rows.size() - 2];
    const auto& z = rep.rows.back();
    const double ra = std::sqrt(a.d), rz = std::sqrt(z.d);
    rep.extrapolated_mid_mean = (rz * z.mid_mean - ra * a.mid_mean) / (rz - ra);
    rep.extrapolated_mid_mean_se = std::hypot(rz * z.mid_mean_se, ra * a.mid_mean_se) / (rz - ra);
  }
  return rep;
}

}  // namespace hslpp
