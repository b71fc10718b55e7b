#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <complex>
#include <stdexcept>
#include <vector>

#include "hslpp/rng.hpp"

namespace hslpp {

using cplx = std::complex<double>;
using BigInt = boost::multiprecision::cpp_int;

struct AccuracyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ContourPlacementError : std::domain_error {
  using std::domain_error::domain_error;
};

// h_r = binom(T + r - 1, r), zero for r < 0.
BigInt h_exact(int T, long r);
// Two-path interlacing bridge count from (x1,x2) at time 0 to (y1,y2) at time T.
BigInt jacobi_trudi_count(int T, long x1, long x2, long y1, long y2);
// Same count by explicit path enumeration (small T only).
long brute_pair_count(int T, long x1, long x2, long y1, long y2);

// log h_r for r in [0, rmax], fixed T.
class LogH {
 public:
  LogH(int T, long rmax);
  double operator()(long r) const { return r < 0 ? -INFINITY : v_[r]; }
  long rmax() const { return static_cast<long>(v_.size()) - 1; }

 private:
  std::vector<double> v_;
};

// log of the two-path count; -inf when the count vanishes.
double log_pair_count(const LogH& h, long a, long b, long c, long d);

struct SeriesValue {
  double value;
  double tail_bound;
  long terms;
};
SeriesValue partition_fn_series(int T1, long y1, long y2, double q, double c, long trunc, double rel_tol = 1e-12);

// Two-circle contour form with radii placed between the admissible limits.
cplx partition_fn_contour(int T1, long y1, long y2, cplx qhat, cplx chat);

// Merged contour on |u| = |qhat|; returns log Z as a complex logarithm.
cplx log_partition_fn_merged(int T1, long y1, long y2, cplx qhat, cplx chat);

// Direct sum over left endpoints with counts by enumeration, x2 >= y2 - depth.
double partition_fn_enumerate(int T1, long y1, long y2, double q, double c, long depth);

struct PairScaling {
  double q, c, b, d;
  int T;
  double p, sigma;
  long Y1, Y2;
  // T = ceil(b d); Y_i = round(p T + sigma sqrt(d) y_i).
  PairScaling(double q, double c, double b, double d, double y1, double y2);
};

// E exp(i s U + i t V) for the centred origin statistics of the interacting pair.
cplx characteristic_ratio(const PairScaling& ps, double s, double t);
cplx characteristic_limit(const PairScaling& ps, double s, double t);

// Exact law of the time-0 values (B1(0), B2(0)) of one interacting pair.
class OriginLaw {
 public:
  OriginLaw(int T, long y1, long y2, double q, double c, double tail = 1e-15);
  std::pair<long, long> sample(Rng& rng) const;
  double prob(long x1, long x2) const;
  double mass_covered() const { return covered_; }

 private:
  long y1_, y2_;
  std::vector<long> x1_, x2_;
  std::vector<double> cdf_;
  double covered_ = 1.0;
};

// Exact law of (B1(m), B2(m)) at an intermediate time m.
class SliceLaw {
 public:
  SliceLaw(int T, int m, long y1, long y2, double q, double c, double tail = 1e-14);
  std::pair<long, long> sample(Rng& rng) const;

 private:
  std::vector<long> v1_, v2_;
  std::vector<double> cdf_;
};

}  // namespace hslpp
