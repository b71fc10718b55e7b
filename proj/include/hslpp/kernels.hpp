#pragma once

#include <array>

#include <numbers>

#include "hslpp/contour.hpp"
#include "hslpp/lpp.hpp"

namespace hslpp {

struct KernelValue2x2 {
  cplx k11, k12, k21, k22;
  double err = 0;                   // total error estimate
  std::array<double, 4> entry_err{};  // per entry, filled by the exact kernel
};

// Integral and residue parts of the bulk kernels; the swapped pieces have the two points exchanged.
struct BulkPieces {
  cplx I11, I12, I12_swapped, I22, R12, R12_swapped, R22;
  double err = 0;
  KernelValue2x2 assemble() const;
};

// ---- exact kernel of the Schur process (particles at lambda_i - i) ----

struct GeoKernelOptions {
  double tol = 1e-13;
  // Multiplies the gaps between each radius and its nearest constraint; 1 gives the default placement.
  double radius_scale = 1.0;
  bool k12_only = false;  // skip the other three entries
};

KernelValue2x2 kernel_geo(int Mu, long x, int Mv, long y, double q, double c, int N, const GeoKernelOptions& opt = {});

// ---- prelimit kernels on the scaled lattices ----

enum class ContourPolicy { strict, adaptive };

class BulkKernelN {
 public:
  BulkKernelN(double q, double c, int N, double tol = 1e-10, ContourPolicy policy = ContourPolicy::adaptive);

  int T(double s) const;
  double xtilde(double s, double x) const;  // unrounded lattice coordinate
  long snap(double s, double x) const;      // nearest lattice coordinate
  long ceil_index(double s, double a) const;
  double x_of(double s, long xt) const;

  KernelValue2x2 at(double s, double x, double t, double y) const;  // x, y snapped to the lattice
  KernelValue2x2 at_lattice(double s, long xt, double t, long yt) const;
  BulkPieces pieces(double s, long xt, double t, long yt) const;
  // The conjugated exact kernel at the same lattice points.
  KernelValue2x2 from_geo(double s, long xt, double t, long yt) const;

  // Tail moment pieces at slice s for points at or above lattice coordinate at.
  double tail_U(double s, long at, double* err = nullptr) const;
  double tail_V(double s, long at, double* err = nullptr) const;
  // Diagonal K12 entry alone.
  double density(double s, long xt) const;

  bool uses_fallback() const { return fallback_; }
  const ComplexContour& gamma_plus() const { return gp_; }
  const ComplexContour& gamma_minus() const { return gm_; }
  static bool default_contours_feasible(double q, double c, int N);

  const ScalingConstantsBulk k;
  const double q, c;
  const int N;

 private:
  double tol_;
  bool fallback_ = false;
  double ap_ = 0, am_ = 0;
  ComplexContour gp_, gm_;
  cplx LS(cplx z, int T, long xt) const;
  QuadRule rule(const ComplexContour& g, int T, long xt, int sign) const;
};

class EdgeKernelN {
 public:
  EdgeKernelN(double q, double c, int N, double theta = 5 * std::numbers::pi / 16, double R = 0.0, double tol = 1e-10);

  int M(double s) const;
  double xtilde(double s, double x) const;
  long snap(double s, double x) const;
  long ceil_index(double s, double a) const;
  double x_of(double s, long xt) const;

  KernelValue2x2 at(double s, double x, double t, double y) const;
  KernelValue2x2 at_lattice(double s, long xt, double t, long yt) const;
  KernelValue2x2 from_geo(double s, long xt, double t, long yt) const;

  double tail_U(double s, long at, double* err = nullptr) const;
  double tail_V(double s, long at, double* err = nullptr) const;
  // Diagonal K12 entry alone.
  double density(double s, long xt) const;

  // Nesting of the contours at slice s for this N.
  bool feasible(double s) const;

  const ScalingConstantsEdge k;
  const double q, c;
  const int N;
  const double theta, R;

 private:
  double tol_;
  ComplexContour Gamma(double s) const;
  ComplexContour gamma(double s) const;
  ComplexContour gamma_tilde() const;
  bool deep_level(double s, long at) const;
  std::pair<ComplexContour, ComplexContour> tail_contours(double s, long at) const;
  cplx LE(cplx z, double s, long xt) const;  // normalised to vanish at z = c
  double LEc(double s, long xt) const;       // the normalisation
  QuadRule rule(const ComplexContour& g, double s, long xt, int sign) const;
};

KernelValue2x2 kernel_N_bulk(double s, double x, double t, double y, double q, double c, int N);
KernelValue2x2 kernel_N_edge(double s, double x, double t, double y, double q, double c, int N,
                             double theta = 5 * std::numbers::pi / 16, double R = 0.0);

// ---- limiting kernels ----

KernelValue2x2 kernel_hs_inf(double s, double x, double t, double y, double tol = 1e-11);
// Closed-form residue parts of the half-space kernel.
double hs_R12(double s, double x, double t, double y);
double hs_R22(double s, double x, double t, double y);

struct BulkLimitKernel {
  double f1, sigma1, tol = 1e-11;
  KernelValue2x2 operator()(double s, double x, double t, double y) const;
  BulkPieces pieces(double s, double x, double t, double y) const;
  cplx R22_contour(double s, double x, double t, double y) const;
  double R22_closed(double s, double x, double t, double y) const;
  // The same kernel assembled from the half-space kernel under the time-space change and conjugation.
  KernelValue2x2 via_half_space(double s, double x, double t, double y) const;
};

KernelValue2x2 kernel_limit_bulk(double s, double x, double t, double y, double f1, double sigma1);

cplx kernel_BM(double s, double x, double t, double y);

// ---- expected number of points above a level ----

enum class Regime { edge, bulk };

struct TailMoment {
  double U, V, total, err;
  long lattice_start;  // lattice coordinate of the first counted point
};

TailMoment expected_count_tail(Regime regime, double q, double c, int N, double slice, double a, double tol = 1e-10);
// Oracle: direct lattice sum of the exact one-point function with a geometric tail cutoff.
double expected_count_direct(Regime regime, double q, double c, int N, double slice, double a);

}  // namespace hslpp
