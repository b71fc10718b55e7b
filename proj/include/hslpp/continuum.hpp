#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "hslpp/rng.hpp"

namespace hslpp {

struct RejectionExhausted : std::runtime_error {
  double rate;  // accepted / tried
  RejectionExhausted(const std::string& what, double r) : std::runtime_error(what), rate(r) {}
};

// Uniform grid t0 + k (t1 - t0)/steps, k = 0..steps.
struct TimeGrid {
  double t0 = 0, t1 = 1;
  int steps = 512;

  double step() const { return (t1 - t0) / steps; }
  double time(int k) const { return k == steps ? t1 : t0 + k * step(); }
  int size() const { return steps + 1; }
  static TimeGrid on(double b, int steps = 512) { return {0.0, b, steps}; }
};

struct GridPath {
  TimeGrid grid;
  std::vector<double> v;

  double at_index(int k) const { return v[k]; }
  double front() const { return v.front(); }
  double back() const { return v.back(); }
};

// Exact bridge from (a, x) to (b, y) by sequential Gaussian conditioning; the endpoints are set exactly.
GridPath sample_brownian_bridge(double a, double b, double x, double y, const TimeGrid& grid, Rng& rng);

// Zero-drift reverse Brownian motion on the grid with U(t1) = y.
GridPath sample_reverse_bm(double y, const TimeGrid& grid, Rng& rng);

// Norm of three independent bridges from 0 to (y, 0, 0) on [0, b].
GridPath sample_bessel_bridge(double b, double y, const TimeGrid& grid, Rng& rng);

// One-point density of the 3D Bessel bridge to y at time b, evaluated at time t in (0, b).
double bessel_bridge_density(double b, double y, double t, double v);

struct PinnedPairSample {
  GridPath Q1, Q2;
  double y1, y2;
};

PinnedPairSample sample_pinned_pair(double b, double y1, double y2, const TimeGrid& grid, Rng& rng);

struct PinnedEnsembleSample {
  std::vector<GridPath> curves;  // 2k curves, top first
  long tries = 0;
  double acceptance_rate() const { return tries ? 1.0 / tries : 0.0; }
};

// k independent pinned pairs conditioned on B_{2i} > B_{2i+1} on the grid, with B_{2k+1} = g (absent: no floor).
PinnedEnsembleSample sample_pinned_ensemble(double b, const std::vector<double>& y, const std::optional<GridPath>& g,
                                            const TimeGrid& grid, Rng& rng, long max_tries = 100000);

bool pinned_avoidance_holds(const std::vector<GridPath>& curves, const std::optional<GridPath>& g);

// Interacting pair against the pinned pair along a sweep of scales d.
struct PinnedCheckConfig {
  double q = 0.5, c = 0.3, b = 1.0;
  double y1 = 1.0, y2 = -1.0;
  std::vector<double> d_sweep{100, 400};
  long samples = 100000;
  long reference_samples = 100000;
  int steps = 2;  // reference grid; the marginals at 0 and b/2 are exact on any grid containing them
};

struct PinnedCheckRow {
  double d = 0;
  int T = 0, m = 0;          // horizon and the lattice time of b/2
  double gap_tv = 0;         // time-0 gap against (1-c)^2 (k+1) c^k
  double origin_var = 0;     // variance of the scaled (L1(0)+L2(0))/2
  double origin_var_se = 0;
  double origin_mean = 0;    // scaled (L1(0)+L2(0))/2 minus (y1+y2)/2
  double origin_mean_se = 0;
  double ks_origin = 0;      // scaled L1(0) against N((y1+y2)/2, b/2)
  double ks_mid1 = 0, ks_mid2 = 0;  // scaled L_i at b/2 against the pinned-pair reference
  double mid_mean = 0, mid_mean_se = 0;  // scaled (L1+L2)/2 at b/2
};

struct PinnedCheckReport {
  PinnedCheckConfig config;
  double ref_mid_mean = 0, ref_mid_mean_se = 0;
  std::vector<PinnedCheckRow> rows;
  // Midpoint mean from the last two scales with the d^{-1/2} lattice correction removed.
  double extrapolated_mid_mean = 0, extrapolated_mid_mean_se = 0;
};

PinnedCheckReport discrete_to_pinned_check(const PinnedCheckConfig& cfg, Rng& rng);

}  // namespace hslpp
