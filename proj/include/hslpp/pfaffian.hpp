#pragma once

#include <Eigen/Dense>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hslpp/kernels.hpp"

namespace hslpp {

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;

// Returns (A - A^T)/2 after checking |A + A^T| <= tol * max|A|; shape errors for odd or non-square input.
CMatrix skew_symmetrize(const CMatrix& A, double tol = 1e-10);

// Pf(A) = exp(log_abs) * phase; zero is flagged separately.
struct LogPfaffian {
  double log_abs = 0;
  cplx phase = 1;
  bool zero = false;
  cplx value() const { return zero ? cplx(0) : phase * std::exp(log_abs); }
};

// Skew elimination with row/column pivoting; dimensions up to 64.
LogPfaffian log_pfaffian(const CMatrix& A);
// Same, with the result checked against det(A).
cplx pfaffian(const CMatrix& A);
double pfaffian(const RMatrix& A);
// Expansion along the first row; dimensions up to 8.
cplx pfaffian_recursive(const CMatrix& A);

// A point (slice, x) in the coordinates the kernel evaluator expects.
struct SpacePoint {
  double slice = 0;
  double x = 0;
};

using KernelFn = std::function<KernelValue2x2(const SpacePoint&, const SpacePoint&)>;

struct Correlation {
  double value = 0;
  double err = 0;  // first-order propagation of the kernel errors
};

// Pfaffian of the 2k x 2k matrix with blocks K(p_i; p_j).
Correlation correlation_fn(const std::vector<SpacePoint>& points, const KernelFn& K);
CMatrix correlation_matrix(const std::vector<SpacePoint>& points, const KernelFn& K,
                           std::vector<double>* entry_err = nullptr);

// Kernel evaluators: the exact kernel at integer (time, particle coordinate), and the prelimit kernels
// at scaled coordinates snapped to their lattices.
KernelFn geo_kernel_fn(double q, double c, int N, double tol = 1e-13);
KernelFn bulk_kernel_fn(const BulkKernelN& K);
KernelFn edge_kernel_fn(const EdgeKernelN& K);

// Lattice a*n + b of one slice, n the particle coordinate lambda_i - i at curve time index t.
struct LatticeSlice {
  double label = 0;  // scaled time reported in tables
  int t = 0;
  double a = 1, b = 0;

  double point(long n) const { return a * static_cast<double>(n) + b; }
  // Smallest n with point(n) >= x.
  long first_at_or_above(double x) const;
  // Exact membership: n when x lies on the lattice within rel_tol of a.
  std::optional<long> index_of(double x, double rel_tol = 1e-9) const;

  static LatticeSlice raw(int t);
  static LatticeSlice bulk(const BulkKernelN& K, double s);
  static LatticeSlice edge(const EdgeKernelN& K, double kappa);
};

// Half-open window [lo, hi) in scaled coordinates.
struct Window {
  double lo, hi;
};

struct PointEstimate {
  double estimate = 0, se = 0;
};

struct WindowStats {
  std::size_t slice = 0, window = 0;
  long n_lo = 0, n_hi = 0;           // lattice indices covered, [n_lo, n_hi)
  PointEstimate count;               // mean number of particles in the window
  std::vector<PointEstimate> density;  // per lattice site n_lo..n_hi-1
};

struct PairQuery {
  std::size_t slice1;
  long n1;
  std::size_t slice2;
  long n2;
};

struct PointStats {
  long samples = 0;
  std::vector<WindowStats> windows;
  std::vector<PointEstimate> pairs;
};

// Jackknife estimate of the mean of per-sample values.
PointEstimate jackknife_mean(const std::vector<double>& values);

PointStats empirical_point_stats(const std::vector<DiscreteLineEnsemble>& samples, const std::vector<LatticeSlice>& slices,
                                 const std::vector<Window>& windows, const std::vector<PairQuery>& pairs = {});

// Number of particles at or above scaled level a on one slice, per sample.
std::vector<double> tail_counts(const std::vector<DiscreteLineEnsemble>& samples, const LatticeSlice& slice, double a);

struct StatRow {
  double slice = 0;
  std::string x;  // a point or a window "[lo,hi)"
  double estimate = 0, se = 0;
  std::optional<double> exact;
  std::optional<double> z() const;
};

// Columns slice,x,estimate,stderr,exact,z; missing exact values are left empty.
void write_stats_csv(std::ostream& os, const std::vector<StatRow>& rows);

}  // namespace hslpp
