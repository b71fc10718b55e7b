#pragma once

#include <string>
#include <vector>

#include "hslpp/lpp.hpp"
#include "hslpp/partition_fn.hpp"

namespace hslpp {

// Phase functions of the bulk scaling; principal logarithms throughout.
struct BulkPhase {
  ScalingConstantsBulk k;
  explicit BulkPhase(double q) : k(q) {}
  cplx S1(cplx z) const;
  cplx G1(cplx z) const;
};

struct EdgePhase {
  ScalingConstantsEdge k;
  EdgePhase(double q, double c) : k(q, c) {}
  cplx S1(cplx z, double kappa) const;
  cplx S2(cplx z, double kappa) const;
  cplx S1bar(cplx z, double kappa) const;
  cplx S2bar(cplx z, double kappa) const;
  cplx G2(cplx z) const;
  cplx G2bar(cplx z) const;
  cplx S1hat(cplx z, double kappa_hat) const;
  cplx S2hat(cplx z, double kappa_hat) const;
  double kappa_hat0() const;
};

struct PhaseCheck {
  std::string name;
  double kappa;
  double value, expected, tolerance;
  bool ok;
};

struct PhaseReport {
  std::vector<PhaseCheck> checks;
  bool all_ok() const;
  std::vector<PhaseCheck> violations() const;
};

// Finite-difference and sign checks of the edge phase functions on a kappa grid.
PhaseReport phase_diagnostics(double q, double c, const std::vector<double>& kappas, double theta = 5 * 3.14159265358979323846 / 16,
                              double R = 0.0, double h = 1e-4);

// Checks of the bulk phase: S1(1) = 0 and the cubic Taylor behaviour near 1 (log-log slope of the remainder).
PhaseReport bulk_phase_diagnostics(double q);

}  // namespace hslpp
