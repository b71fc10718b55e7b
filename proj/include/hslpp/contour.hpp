#pragma once

#include <complex>
#include <functional>
#include <stdexcept>
#include <variant>
#include <vector>

#include "hslpp/partition_fn.hpp"

namespace hslpp {

struct QuadratureError : std::runtime_error {
  cplx partial;
  QuadratureError(const std::string& what, cplx p) : std::runtime_error(what), partial(p) {}
};

struct Segment {
  cplx a, b;
};
// Circular arc traversed from angle theta0 to theta1 (theta1 < theta0 means clockwise).
struct Arc {
  cplx center;
  double radius, theta0, theta1;
};
// Half-line origin + s*dir, s >= 0. Inbound rays run from infinity toward the origin.
struct Ray {
  cplx origin, dir;
  bool inbound;
};
using ContourPiece = std::variant<Segment, Arc, Ray>;

class ComplexContour {
 public:
  ComplexContour() = default;
  explicit ComplexContour(std::vector<ContourPiece> pieces) : pieces_(std::move(pieces)) {}

  const std::vector<ContourPiece>& pieces() const { return pieces_; }
  ComplexContour reversed() const;
  // End-to-start gaps larger than tol between consecutive finite pieces.
  bool connected(double tol = 1e-12) const;
  double distance_to(cplx p) const;

  static ComplexContour circle(double r, cplx center = 0.0);
  // z + |s| e^{sgn(s) i phi}, from z + inf e^{-i phi} to z + inf e^{i phi}.
  static ComplexContour wedge(cplx z, double phi);
  // Two segments of length len from z at angles -phi, +phi, closed by the
  // counterclockwise arc of the zero-centred circle through their far ends.
  static ComplexContour closed_wedge(cplx z, double phi, double len);
  // The keyhole-like contour: segments from the x-centred radius-r circle out to
  // the zero-centred radius-R circle at angles -theta, +theta, plus the arc.
  static ComplexContour edge_contour(double x, double theta, double R, double r);

 private:
  std::vector<ContourPiece> pieces_;
};

struct QuadResult {
  cplx value;
  double error;
};

using ComplexFn = std::function<cplx(cplx)>;

// Adaptive Gauss-Kronrod (7/15) over each piece; poles closer than 1e-6 to the contour are rejected.
QuadResult integrate_contour(const ComplexFn& f, const ComplexContour& c, double tol,
                             const std::vector<cplx>& poles = {});

// Nodes with Kronrod and embedded Gauss weights (dz already folded in), reusable
// across integrands that share the resolution needs of the probe function.
struct QuadRule {
  std::vector<cplx> z, wk, wg;
  std::size_t size() const { return z.size(); }
};
QuadRule build_rule(const ComplexContour& c, const ComplexFn& probe, double tol, int min_splits = 4);
// Trapezoid rule on a full circle, doubled until the probe integral settles.
QuadRule circle_rule(double r, const ComplexFn& probe, double tol, cplx center = 0.0);

QuadResult apply_rule(const QuadRule& r, const ComplexFn& f);
// Sum over the product rule of a(z_i) b(w_j) h(z_i, w_j).
QuadResult apply_rule2(const QuadRule& rz, const std::vector<cplx>& a, const QuadRule& rw,
                       const std::vector<cplx>& b, const std::function<cplx(cplx, cplx)>& h);

void check_poles(const ComplexContour& c, const std::vector<cplx>& poles);

}  // namespace hslpp
