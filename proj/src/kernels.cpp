#include "hslpp/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hslpp {

namespace {

using std::log;
using std::numbers::pi;
const cplx I2PI(0, 2 * pi);
const cplx I2PI2 = I2PI * I2PI;

std::vector<cplx> eval_on(const QuadRule& r, const ComplexFn& f) {
  std::vector<cplx> v(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) v[i] = f(r.z[i]);
  return v;
}

constexpr int kGrid = 40;

// Grid radius in (lo, hi) with the log of the peak modulus of g on that circle.
std::vector<std::pair<double, double>> peak_profile(double lo, double hi, const std::function<cplx(cplx)>& g) {
  std::vector<std::pair<double, double>> out;
  for (int i = 1; i < kGrid; ++i) {
    const double r = lo + (hi - lo) * i / kGrid;
    double peak = 0;
    for (int k = 0; k < 64; ++k) peak = std::max(peak, std::abs(g(std::polar(r, 2 * pi * (k + 0.5) / 64))));
    out.emplace_back(r, std::log(peak) + std::log(r));
  }
  return out;
}

double stretch(double r, double lo, double hi, double scale) {
  const double s = lo + (r - lo) * scale;
  return s < hi ? s : 0.5 * (r + hi);
}

double best_radius(double lo, double hi, const std::function<cplx(cplx)>& g, double scale) {
  auto prof = peak_profile(lo, hi, g);
  auto it = std::min_element(prof.begin(), prof.end(), [](auto& a, auto& b) { return a.second < b.second; });
  return stretch(it->first, lo, hi, scale);
}

// Nested pair of radii; the cost adds the log peaks and the log of the inverse gap.
std::pair<double, double> best_nested(double zlo, double zhi, const std::function<cplx(cplx)>& a, double wlo, double whi,
                                      const std::function<cplx(cplx)>& b, bool w_inside, double scale) {
  auto pz = peak_profile(zlo, zhi, a), pw = peak_profile(wlo, whi, b);
  double best = INFINITY;
  std::pair<double, double> out{0.5 * (zlo + zhi), 0.5 * (wlo + whi)};
  for (auto& [rz, cz] : pz)
    for (auto& [rw, cw] : pw) {
      const double gap = w_inside ? rz - rw : rw - rz;
      if (gap <= 0) continue;
      const double cost = cz + cw - std::log(gap);
      if (cost < best) {
        best = cost;
        out = {rz, rw};
      }
    }
  if (!std::isfinite(best)) throw ContourPlacementError("no nested radii");
  // Perturb both radii toward or away from the constraints, keeping them nested.
  double rz = stretch(out.first, zlo, zhi, scale), rw = stretch(out.second, wlo, whi, scale);
  if (w_inside ? rw >= rz : rz >= rw) return out;
  return {rz, rw};
}

// log of the power factors shared by the exact kernel: (1-q/z)^A (1-qz)^B z^C.
cplx logpow(cplx z, double q, long A, long B, long C) {
  return double(A) * log(1.0 - q / z) + double(B) * log(1.0 - q * z) + double(C) * log(z);
}

}  // namespace

// For c > 1 the circles that must enclose c are pulled inside it and the residue at c is added back.
KernelValue2x2 kernel_geo(int Mu, long x, int Mv, long y, double q, double c, int N, const GeoKernelOptions& opt) {
  if (!(q > 0 && q < 1) || !(c >= 0)) throw ParameterError("need q in (0,1) and c >= 0");
  if (c * q >= 1) throw ContourPlacementError("no admissible radii when c >= 1/q");
  if (c == 1) throw ParameterError("exact kernel evaluated for c != 1");
  const double tol = opt.tol, sc = opt.radius_scale;
  const double qi = 1 / q;
  const bool big_c = c > 1;
  KernelValue2x2 out;
  auto circle = [&](double r, const ComplexFn& f) {
    QuadResult v = apply_rule(circle_rule(r, f, tol), f);
    return QuadResult{v.value / I2PI, v.error / (2 * pi)};
  };

  // K11: both variables on C_{r1}, r1 in (1, 1/q).
  if (!opt.k12_only) {
    auto a = [&](cplx z, long xx, int M) { return (1.0 - c / z) * std::exp(logpow(z, q, M + N, -N, -xx)) / (z * z - 1.0); };
    const double r1z = best_radius(1, qi, [&](cplx z) { return a(z, x, Mu); }, sc);
    const double r1w = best_radius(1, qi, [&](cplx z) { return a(z, y, Mv); }, sc);
    QuadRule rz = circle_rule(r1z, [&](cplx z) { return a(z, x, Mu) / (z * r1w - 1.0); }, tol);
    QuadRule rw = circle_rule(r1w, [&](cplx w) { return a(w, y, Mv) / (w * r1z - 1.0); }, tol);
    auto A = eval_on(rz, [&](cplx z) { return a(z, x, Mu); });
    auto B = eval_on(rw, [&](cplx w) { return a(w, y, Mv); });
    auto v = apply_rule2(rz, A, rw, B, [](cplx z, cplx w) { return (z - w) / (z * w - 1.0); });
    out.k11 = v.value / I2PI2;
    out.entry_err[0] = v.error / (4 * pi * pi);
  }
  // K12 with nested circles; K21 is minus K12 with the arguments exchanged.
  auto k12 = [&](int Mu_, long x_, int Mv_, long y_) {
    auto A = [&](cplx z) { return std::exp(logpow(z, q, Mu_ + N, -N, -x_ - 1)) / (z * z - 1.0); };
    auto a = [&](cplx z) { return (z - c) * A(z); };
    auto Bc = [&](cplx w) { return std::exp(logpow(w, q, -Mv_ - N, N, y_)); };
    auto b = [&](cplx w) { return Bc(w) / (w - c); };
    const bool w_inside = Mu_ >= Mv_;
    std::pair<double, double> r;
    if (!big_c)
      r = w_inside ? best_nested(1.0, qi, a, std::max(c, q), qi, b, true, sc)
                   : best_nested(1.0, qi, a, 1.0, 2 * qi, b, false, sc);
    else
      r = w_inside ? best_nested(1.0, qi, a, q, c, b, true, sc) : best_nested(1.0, c, a, 1.0, c, b, false, sc);
    const auto [rz, rw] = r;
    QuadRule Rz = circle_rule(rz, [&](cplx z) { return a(z) / (z - rw); }, tol);
    QuadRule Rw = circle_rule(rw, [&](cplx w) { return b(w) / (rz - w); }, tol);
    auto v = apply_rule2(Rz, eval_on(Rz, a), Rw, eval_on(Rw, b),
                         [](cplx z, cplx w) { return (z * w - 1.0) / (z - w); });
    QuadResult res{v.value / I2PI2, v.error / (4 * pi * pi)};
    if (big_c) {
      auto e = circle(rz, [&](cplx z) { return (z * c - 1.0) * A(z); });
      const cplx bc = Bc(c);
      res.value += bc * e.value;
      res.error += std::abs(bc) * e.error;
    }
    return res;
  };
  {
    auto v = k12(Mu, x, Mv, y);
    out.k12 = v.value;
    out.entry_err[1] = v.error;
    if (!opt.k12_only) {
      auto u = k12(Mv, y, Mu, x);
      out.k21 = -u.value;
      out.entry_err[2] = u.error;
    }
  }
  // K22: circles outside max(c, q, 1), or between 1 and c plus residues when c > 1.
  if (!opt.k12_only) {
    auto A = [&](cplx z, long xx, int M) { return std::exp(logpow(z, q, -M - N, N, xx)); };
    auto a = [&](cplx z, long xx, int M) { return A(z, xx, M) / (z - c); };
    const double lo = big_c ? 1.0 : std::max(q, 1.0);
    const double hi = big_c ? c : lo + qi;
    const double r2z = best_radius(lo, hi, [&](cplx z) { return a(z, x, Mu); }, sc);
    const double r2w = best_radius(lo, hi, [&](cplx z) { return a(z, y, Mv); }, sc);
    QuadRule rz = circle_rule(r2z, [&](cplx z) { return a(z, x, Mu) / (z * r2w - 1.0); }, tol);
    QuadRule rw = circle_rule(r2w, [&](cplx w) { return a(w, y, Mv) / (w * r2z - 1.0); }, tol);
    auto v = apply_rule2(rz, eval_on(rz, [&](cplx z) { return a(z, x, Mu); }), rw,
                         eval_on(rw, [&](cplx w) { return a(w, y, Mv); }),
                         [](cplx z, cplx w) { return (z - w) / (z * w - 1.0); });
    out.k22 = v.value / I2PI2;
    out.entry_err[3] = v.error / (4 * pi * pi);
    if (big_c) {
      auto ez = circle(r2z, [&](cplx z) { return A(z, x, Mu) / (c * z - 1.0); });
      auto ew = circle(r2w, [&](cplx w) { return A(w, y, Mv) / (c * w - 1.0); });
      const cplx Ac = A(c, x, Mu), Bc = A(c, y, Mv);
      out.k22 += Bc * ez.value - Ac * ew.value;
      out.entry_err[3] += std::abs(Bc) * ez.error + std::abs(Ac) * ew.error;
    }
  }
  for (double e : out.entry_err) out.err += e;
  return out;
}

// ---------------- bulk prelimit kernel ----------------

namespace {

// Applies a diagonal conjugation to the exact kernel, entry errors included.
KernelValue2x2 conjugate(KernelValue2x2 g, const std::array<double, 4>& f) {
  g.k11 *= f[0];
  g.k12 *= f[1];
  g.k21 *= f[2];
  g.k22 *= f[3];
  g.err = 0;
  for (int i = 0; i < 4; ++i) {
    g.entry_err[i] *= f[i];
    g.err += g.entry_err[i];
  }
  return g;
}

}  // namespace

bool BulkKernelN::default_contours_feasible(double q, double c, int N) {
  const double a = std::pow(N, -1.0 / 3.0);
  const double hi = c > 1 ? std::min(1 / q, c) : 1 / q;
  const double lo = std::max(q, c < 1 ? c : 1 / c);
  return 1 + a < hi && 1 - a > lo;
}

BulkKernelN::BulkKernelN(double q_, double c_, int N_, double tol, ContourPolicy policy)
    : k(q_), q(q_), c(c_), N(N_), tol_(tol) {
  if (c == 1) throw ParameterError("bulk kernel requires c != 1");
  if (!(c >= 0 && c * q < 1)) throw ParameterError("need c in [0,1/q)");
  if (N < 1) throw ParameterError("N must be positive");
  const double a = std::pow(N, -1.0 / 3.0), len = std::pow(N, -1.0 / 12.0);
  const double hi = c > 1 ? std::min(1 / q, c) : 1 / q;
  const double lo = std::max(q, c < 1 ? c : 1 / c);
  double ap = a, am = a;
  if (!default_contours_feasible(q, c, N)) {
    if (policy == ContourPolicy::strict) throw ContourPlacementError("N too small for the bulk contours");
    fallback_ = true;
    ap = std::min(a, 0.5 * (hi - 1));
    am = std::min(a, 0.5 * (1 - lo));
  }
  ap_ = ap;
  am_ = am;
  gp_ = ComplexContour::closed_wedge(1 + ap, pi / 3, len);
  gm_ = ComplexContour::closed_wedge(1 - am, 2 * pi / 3, len);
}

int BulkKernelN::T(double s) const { return static_cast<int>(std::floor(s * std::pow(N, 2.0 / 3.0) + 1e-9)); }

double BulkKernelN::xtilde(double s, double x) const {
  return k.h1 * N + k.p1 * T(s) + k.sigma1 * std::cbrt(double(N)) * x;
}
long BulkKernelN::snap(double s, double x) const { return std::lround(xtilde(s, x)); }
long BulkKernelN::ceil_index(double s, double a) const { return static_cast<long>(std::ceil(xtilde(s, a) - 1e-9)); }
double BulkKernelN::x_of(double s, long xt) const {
  return (xt - k.h1 * N - k.p1 * T(s)) / (k.sigma1 * std::cbrt(double(N)));
}

cplx BulkKernelN::LS(cplx z, int T_, long xt) const {
  return double(N + T_) * log(1.0 - q / z) - double(N) * log(1.0 - q * z) - double(xt) * log(z) -
         double(T_) * std::log(1 - q);
}

QuadRule BulkKernelN::rule(const ComplexContour& g, int T_, long xt, int sign) const {
  // The probe also sees the nearby singularities of the rational factors.
  std::vector<double> near;
  if (sign > 0) {
    near = {1.0, 1 - am_};
    if (c > 1) near.push_back(c);
  } else {
    near = {1.0, 1 + ap_};
    if (c < 1) near.push_back(c);
  }
  return build_rule(
      g,
      [&](cplx z) {
        cplx v = std::exp(double(sign) * LS(z, T_, xt));
        for (double p : near) v /= (z - p);
        return v;
      },
      tol_, 4);
}

KernelValue2x2 BulkKernelN::at(double s, double x, double t, double y) const {
  return at_lattice(s, snap(s, x), t, snap(t, y));
}

KernelValue2x2 BulkKernelN::at_lattice(double s, long xs, double t, long yt) const { return pieces(s, xs, t, yt).assemble(); }

BulkPieces BulkKernelN::pieces(double s, long xs, double t, long yt) const {
  const int Ts = T(s), Tt = T(t);
  const double n13 = std::cbrt(double(N)), s1 = k.sigma1;
  const QuadRule ps = rule(gp_, Ts, xs, 1), pt = rule(gp_, Tt, yt, 1);
  const QuadRule ms = rule(gm_, Ts, xs, -1), mt = rule(gm_, Tt, yt, -1);
  auto Ap = [&](const QuadRule& r, int T_, long xx) { return eval_on(r, [&](cplx z) { return std::exp(LS(z, T_, xx)); }); };
  auto Am = [&](const QuadRule& r, int T_, long xx) { return eval_on(r, [&](cplx z) { return std::exp(-LS(z, T_, xx)); }); };
  const auto Aps = Ap(ps, Ts, xs), Apt = Ap(pt, Tt, yt), Ams = Am(ms, Ts, xs), Amt = Am(mt, Tt, yt);
  BulkPieces out;
  double err = 0;

  auto v11 = apply_rule2(ps, Aps, pt, Apt, [&](cplx z, cplx w) {
    return 4 * s1 * s1 * n13 * n13 * (z - w) * (1.0 - c / z) * (1.0 - c / w) / ((z * z - 1.0) * (w * w - 1.0) * (z * w - 1.0));
  });
  auto h12 = [&](cplx z, cplx w) { return s1 * n13 * (z * w - 1.0) * (z - c) / (z * (z - w) * (z * z - 1.0) * (w - c)); };
  auto v12 = apply_rule2(ps, Aps, mt, Amt, h12);
  auto v12r = apply_rule2(pt, Apt, ms, Ams, h12);
  auto v22 = apply_rule2(ms, Ams, mt, Amt,
                         [&](cplx z, cplx w) { return 0.25 * (z - w) / ((z * w - 1.0) * (z - c) * (w - c)); });
  err += (v11.error + v12.error + v12r.error + v22.error) / (4 * pi * pi);

  // Residue corrections of the 12 entry.
  auto R12 = [&](double s_, int Ta, long xa, double t_, int Tb, long yb) {
    cplx r = 0;
    if (s_ < t_) {
      auto q1 = integrate_contour(
          [&](cplx z) {
            return std::exp(double(Ta - Tb) * (log(1.0 - q / z) - std::log(1 - q)) + double(yb - xa - 1) * log(z));
          },
          gp_, tol_);
      r -= s1 * n13 * q1.value / I2PI;
      err += s1 * n13 * q1.error / (2 * pi);
    }
    if (c > 1) {
      const cplx Lc = LS(c, Tb, yb);
      auto q2 = integrate_contour(
          [&](cplx z) { return (z * c - 1.0) / (z * (z * z - 1.0)) * std::exp(LS(z, Ta, xa) - Lc); }, gp_, tol_);
      r += s1 * n13 * q2.value / I2PI;
      err += s1 * n13 * q2.error / (2 * pi);
    }
    return r;
  };
  cplx r22 = 0;
  if (c > 1) {
    const cplx Lcs = LS(c, Ts, xs), Lct = LS(c, Tt, yt);
    auto a1 = integrate_contour([&](cplx z) { return std::exp(-LS(z, Ts, xs) - Lct) / (4.0 * (c * z - 1.0)); }, gm_, tol_);
    auto a2 = integrate_contour([&](cplx w) { return std::exp(-Lcs - LS(w, Tt, yt)) / (4.0 * (c * w - 1.0)); }, gm_, tol_);
    r22 += (a1.value - a2.value) / I2PI;
    err += (a1.error + a2.error) / (2 * pi);
  }
  {
    auto a3 = integrate_contour(
        [&](cplx w) {
          const cplx e = double(yt - xs - 1) * log(w) - double(Ts) * (log(1.0 - q * w) - std::log(1 - q)) -
                         double(Tt) * (log(1.0 - q / w) - std::log(1 - q));
          return (1.0 - w * w) / (4.0 * (1.0 - c * w) * (w - c)) * std::exp(e);
        },
        gm_, tol_);
    r22 += a3.value / I2PI;
    err += a3.error / (2 * pi);
  }
  out.I11 = v11.value / I2PI2;
  out.I12 = v12.value / I2PI2;
  out.I12_swapped = v12r.value / I2PI2;
  out.I22 = v22.value / I2PI2;
  out.R12 = R12(s, Ts, xs, t, Tt, yt);
  out.R12_swapped = R12(t, Tt, yt, s, Ts, xs);
  out.R22 = r22;
  out.err = err;
  return out;
}

KernelValue2x2 BulkKernelN::from_geo(double s, long xs, double t, long yt) const {
  const int Ts = T(s), Tt = T(t);
  const double n13 = std::cbrt(double(N)), s1 = k.sigma1, l = std::log(1 - q);
  return conjugate(kernel_geo(Ts, xs, Tt, yt, q, c, N),
                   {4 * s1 * s1 * n13 * n13 * std::exp(-(Ts + Tt) * l), s1 * n13 * std::exp((Tt - Ts) * l),
                    s1 * n13 * std::exp((Ts - Tt) * l), 0.25 * std::exp((Ts + Tt) * l)});
}

double BulkKernelN::density(double s, long xt) const {
  const int Ts = T(s);
  const double sn = k.sigma1 * std::cbrt(double(N));
  const QuadRule p = rule(gp_, Ts, xt, 1), m = rule(gm_, Ts, xt, -1);
  auto v = apply_rule2(p, eval_on(p, [&](cplx z) { return std::exp(LS(z, Ts, xt)); }), m,
                       eval_on(m, [&](cplx w) { return std::exp(-LS(w, Ts, xt)); }), [&](cplx z, cplx w) {
                         return sn * (z * w - 1.0) * (z - c) / (z * (z - w) * (z * z - 1.0) * (w - c));
                       });
  cplx r = v.value / I2PI2;
  if (c > 1) {
    const cplx Lc = LS(c, Ts, xt);
    r += sn * integrate_contour([&](cplx z) { return (z * c - 1.0) / (z * (z * z - 1.0)) * std::exp(LS(z, Ts, xt) - Lc); },
                                gp_, tol_)
                  .value /
         I2PI;
  }
  return r.real();
}

double BulkKernelN::tail_U(double s, long at, double* err) const {
  const int Ts = T(s);
  const QuadRule p = rule(gp_, Ts, at, 1), m = rule(gm_, Ts, at, -1);
  auto v = apply_rule2(p, eval_on(p, [&](cplx z) { return std::exp(LS(z, Ts, at)); }), m,
                       eval_on(m, [&](cplx w) { return std::exp(-LS(w, Ts, at)); }), [&](cplx z, cplx w) {
                         return (z * w - 1.0) / ((z - w) * (z - w) * (z * z - 1.0)) * (z - c) / (w - c);
                       });
  if (err) *err = v.error / (4 * pi * pi);
  return (v.value / I2PI2).real();
}

double BulkKernelN::tail_V(double s, long at, double* err) const {
  if (c < 1) {
    if (err) *err = 0;
    return 0;
  }
  const int Ts = T(s);
  const cplx Lc = LS(c, Ts, at);
  auto v = integrate_contour(
      [&](cplx z) { return std::exp(LS(z, Ts, at) - Lc) * (z * c - 1.0) / ((z - c) * (z * z - 1.0)); }, gp_, tol_);
  if (err) *err = v.error / (2 * pi);
  return (v.value / I2PI).real();
}

KernelValue2x2 kernel_N_bulk(double s, double x, double t, double y, double q, double c, int N) {
  return BulkKernelN(q, c, N).at(s, x, t, y);
}

// ---------------- edge prelimit kernel ----------------

EdgeKernelN::EdgeKernelN(double q_, double c_, int N_, double theta_, double R_, double tol)
    : k(q_, c_), q(q_), c(c_), N(N_), theta(theta_), R(R_ > 0 ? R_ : 2 / q_), tol_(tol) {
  if (!(theta > pi / 4 && theta < pi / 2)) throw ParameterError("theta must lie in (pi/4, pi/2)");
  if (!(R > 1 / q)) throw ParameterError("R must exceed 1/q");
  if (1 / q - c < std::sqrt(1.0 / N) / std::cos(theta)) throw ContourPlacementError("N too small for the edge contours");
}

bool EdgeKernelN::feasible(double s) const {
  const double e = std::sqrt(1.0 / N);
  return s >= 0 && s < k.kappa_bar && 1 / q - c >= e / std::cos(theta) && k.zc(s) + e < c;
}

int EdgeKernelN::M(double s) const { return static_cast<int>(std::floor(s * N + 1e-9)); }
double EdgeKernelN::xtilde(double s, double x) const { return k.h2(s) * N + k.sigma2 * std::sqrt(double(N)) * x; }
long EdgeKernelN::snap(double s, double x) const { return std::lround(xtilde(s, x)); }
long EdgeKernelN::ceil_index(double s, double a) const { return static_cast<long>(std::ceil(xtilde(s, a) - 1e-9)); }
double EdgeKernelN::x_of(double s, long xt) const {
  return (xt - k.h2(s) * N) / (k.sigma2 * std::sqrt(double(N)));
}

ComplexContour EdgeKernelN::Gamma(double) const {
  return ComplexContour::edge_contour(c, theta, R, std::sqrt(1.0 / N) / std::cos(theta));
}
ComplexContour EdgeKernelN::gamma(double s) const { return ComplexContour::circle(k.zc(s) + std::sqrt(1.0 / N)); }
ComplexContour EdgeKernelN::gamma_tilde() const {
  return ComplexContour::edge_contour(c, pi / 2, std::sqrt(c * c + std::pow(N, -1.0 / 6.0)), 0.0);
}

double EdgeKernelN::LEc(double s, long xt) const {
  return double(N + M(s)) * std::log(1 - q / c) - double(N) * std::log(1 - q * c) - double(xt) * std::log(c);
}

cplx EdgeKernelN::LE(cplx z, double s, long xt) const {
  return double(N + M(s)) * log(1.0 - q / z) - double(N) * log(1.0 - q * z) - double(xt) * log(z) - LEc(s, xt);
}

QuadRule EdgeKernelN::rule(const ComplexContour& g, double s, long xt, int sign) const {
  const double e = std::sqrt(1.0 / N);
  const std::vector<double> near = sign > 0 ? std::vector<double>{1.0, k.zc(s) + e} : std::vector<double>{c, c + e};
  return build_rule(
      g,
      [&](cplx z) {
        cplx v = std::exp(double(sign) * LE(z, s, xt));
        for (double p : near) v /= (z - p);
        return v;
      },
      tol_, 4);
}

KernelValue2x2 EdgeKernelN::at(double s, double x, double t, double y) const {
  return at_lattice(s, snap(s, x), t, snap(t, y));
}

KernelValue2x2 EdgeKernelN::at_lattice(double s, long xs, double t, long yt) const {
  if (!feasible(s) || !feasible(t)) throw ContourPlacementError("edge contours not nested at this N");
  const double sn = k.sigma2 * std::sqrt(double(N));
  const ComplexContour Gs = Gamma(s), Gt = Gamma(t), gs = gamma(s), gt = gamma(t);
  const QuadRule Ps = rule(Gs, s, xs, 1), Pt = rule(Gt, t, yt, 1);
  const QuadRule Ms = rule(gs, s, xs, -1), Mt = rule(gt, t, yt, -1);
  auto Ep = [&](const QuadRule& r, double u, long xx) { return eval_on(r, [&](cplx z) { return std::exp(LE(z, u, xx)); }); };
  auto Em = [&](const QuadRule& r, double u, long xx) { return eval_on(r, [&](cplx z) { return std::exp(-LE(z, u, xx)); }); };
  const auto Aps = Ep(Ps, s, xs), Apt = Ep(Pt, t, yt), Ams = Em(Ms, s, xs), Amt = Em(Mt, t, yt);
  double err = 0;

  auto v11 = apply_rule2(Ps, Aps, Pt, Apt, [&](cplx z, cplx w) {
    return sn * (z - w) * (1.0 - c / z) * (1.0 - c / w) / ((z * z - 1.0) * (w * w - 1.0) * (z * w - 1.0));
  });
  auto h12 = [&](cplx z, cplx w) { return sn * (z * w - 1.0) * (z - c) / (z * (z - w) * (z * z - 1.0) * (w - c)); };
  auto v12 = apply_rule2(Ps, Aps, Mt, Amt, h12);
  auto v12r = apply_rule2(Pt, Apt, Ms, Ams, h12);
  auto v22 = apply_rule2(Ms, Ams, Mt, Amt,
                         [&](cplx z, cplx w) { return sn * (z - w) / ((z * w - 1.0) * (z - c) * (w - c)); });
  err += (v11.error + v12.error + v12r.error + v22.error) / (4 * pi * pi);

  const ComplexContour gtil = gamma_tilde();
  auto R12 = [&](double a_, long xa, double b_, long yb, const ComplexContour& Ga) {
    cplx r = 0;
    if (a_ < b_) {
      const long dM = M(a_) - M(b_);
      auto q1 = integrate_contour(
          [&](cplx z) {
            return std::exp(double(dM) * (log(1.0 - q / z) - std::log(1 - q / c)) + double(yb - xa) * (log(z) - std::log(c))) / z;
          },
          gtil, tol_);
      r -= sn * q1.value / I2PI;
      err += sn * q1.error / (2 * pi);
    }
    auto q2 = integrate_contour([&](cplx z) { return std::exp(LE(z, a_, xa)) * (z * c - 1.0) / (z * (z * z - 1.0)); }, Ga,
                                tol_);
    r += sn * q2.value / I2PI;
    err += sn * q2.error / (2 * pi);
    return r;
  };
  auto a1 = integrate_contour([&](cplx z) { return std::exp(-LE(z, s, xs)) / (c * z - 1.0); }, gs, tol_);
  auto a2 = integrate_contour([&](cplx w) { return std::exp(-LE(w, t, yt)) / (c * w - 1.0); }, gt, tol_);
  err += sn * (a1.error + a2.error) / (2 * pi);

  KernelValue2x2 out;
  out.k11 = v11.value / I2PI2;
  out.k12 = v12.value / I2PI2 + R12(s, xs, t, yt, Gs);
  out.k21 = -(v12r.value / I2PI2 + R12(t, yt, s, xs, Gt));
  out.k22 = v22.value / I2PI2 + sn * (a1.value - a2.value) / I2PI;
  out.err = err;
  return out;
}

KernelValue2x2 EdgeKernelN::from_geo(double s, long xs, double t, long yt) const {
  const double sn = k.sigma2 * std::sqrt(double(N));
  const double ls = LEc(s, xs), lt = LEc(t, yt);
  return conjugate(kernel_geo(M(s), xs, M(t), yt, q, c, N),
                   {sn * std::exp(-ls - lt), sn * std::exp(lt - ls), sn * std::exp(ls - lt), sn * std::exp(ls + lt)});
}

double EdgeKernelN::density(double s, long xt) const {
  if (!feasible(s)) throw ContourPlacementError("edge contours not nested at this N");
  const double sn = k.sigma2 * std::sqrt(double(N));
  const ComplexContour G = Gamma(s);
  const QuadRule P = rule(G, s, xt, 1), Mr = rule(gamma(s), s, xt, -1);
  auto v = apply_rule2(P, eval_on(P, [&](cplx z) { return std::exp(LE(z, s, xt)); }), Mr,
                       eval_on(Mr, [&](cplx w) { return std::exp(-LE(w, s, xt)); }), [&](cplx z, cplx w) {
                         return sn * (z * w - 1.0) * (z - c) / (z * (z - w) * (z * z - 1.0) * (w - c));
                       });
  auto e = integrate_contour([&](cplx z) { return std::exp(LE(z, s, xt)) * (z * c - 1.0) / (z * (z * z - 1.0)); }, G, tol_);
  return (v.value / I2PI2 + sn * e.value / I2PI).real();
}

bool EdgeKernelN::deep_level(double s, long at) const {
  return at < 0.5 * (k.h1(s) + k.h2(s)) * N;
}

// Deep levels use the saddle-point contours through z_c; the pole at c then leaves the z contour.
std::pair<ComplexContour, ComplexContour> EdgeKernelN::tail_contours(double s, long at) const {
  if (!deep_level(s, at)) return {Gamma(s), gamma(s)};
  const double zc = k.zc(s), d = std::cbrt(1.0 / N);
  if (!(zc + d < c)) throw ContourPlacementError("saddle contours not nested at this N");
  return {ComplexContour::edge_contour(zc, theta, R, d / std::cos(theta)), ComplexContour::circle(zc)};
}

double EdgeKernelN::tail_U(double s, long at, double* err) const {
  if (!feasible(s)) throw ContourPlacementError("edge contours not nested at this N");
  const auto [G, g] = tail_contours(s, at);
  // Real-axis crossings of the two contours.
  const double zr = std::get<Arc>(g.pieces().front()).radius;
  const double xg = deep_level(s, at) ? k.zc(s) + std::cbrt(1.0 / N) : c + std::sqrt(1.0 / N);
  auto probe = [&](int sign, std::vector<double> near) {
    return [=, this](cplx z) {
      cplx v = std::exp(double(sign) * LE(z, s, at));
      for (double p : near) v /= (z - p);
      return v;
    };
  };
  const QuadRule P = build_rule(G, probe(1, {1.0, zr}), tol_, 4);
  const QuadRule Mr = build_rule(g, probe(-1, {c, xg}), tol_, 4);
  auto v = apply_rule2(P, eval_on(P, [&](cplx z) { return std::exp(LE(z, s, at)); }), Mr,
                       eval_on(Mr, [&](cplx w) { return std::exp(-LE(w, s, at)); }), [&](cplx z, cplx w) {
                         return (z * w - 1.0) * (z - c) / (z * (z - w) * (z * z - 1.0) * (w - c)) / (1.0 - w / z);
                       });
  if (err) *err = v.error / (4 * pi * pi);
  return (v.value / I2PI2).real();
}

double EdgeKernelN::tail_V(double s, long at, double* err) const {
  const auto G = tail_contours(s, at).first;
  auto v = integrate_contour(
      [&](cplx z) { return std::exp(LE(z, s, at)) * (z * c - 1.0) / ((z - c) * (z * z - 1.0)); }, G, tol_);
  if (err) *err = v.error / (2 * pi);
  return (v.value / I2PI).real() + (deep_level(s, at) ? 1.0 : 0.0);
}

KernelValue2x2 kernel_N_edge(double s, double x, double t, double y, double q, double c, int N, double theta, double R) {
  return EdgeKernelN(q, c, N, theta, R).at(s, x, t, y);
}

// ---------------- limiting kernels ----------------

namespace {

struct WedgeRule {
  QuadRule rule;
  std::vector<cplx> vals;
};

WedgeRule wedge_rule(cplx vertex, double phi, const ComplexFn& f, double tol) {
  WedgeRule w{build_rule(ComplexContour::wedge(vertex, phi), f, tol, 4), {}};
  w.vals = eval_on(w.rule, f);
  return w;
}

}  // namespace

KernelValue2x2 kernel_hs_inf(double s, double x, double t, double y, double tol) {
  if (!(s > 0 && t > 0)) throw ParameterError("times must be positive");
  auto ez = [](double xx) { return [xx](cplx z) { return std::exp(z * z * z / 3.0 - xx * z); }; };
  const WedgeRule Zs = wedge_rule(1 + s, pi / 3, ez(x), tol), Wt = wedge_rule(1 + t, pi / 3, ez(y), tol);
  const WedgeRule Zt = wedge_rule(1 + t, pi / 3, ez(y), tol), Ws = wedge_rule(1 + s, pi / 3, ez(x), tol);
  auto i11 = apply_rule2(Zs.rule, Zs.vals, Wt.rule, Wt.vals, [&](cplx z, cplx w) {
    return (z + s - w - t) / (4.0 * (z + s + w + t) * (z + s) * (w + t));
  });
  auto i12 = [&](const WedgeRule& A, double sa, const WedgeRule& B, double tb) {
    return apply_rule2(A.rule, A.vals, B.rule, B.vals,
                       [&](cplx z, cplx w) { return (z + sa - w + tb) / (2.0 * (z + sa) * (z + sa + w - tb)); });
  };
  auto v12 = i12(Zs, s, Wt, t), v12r = i12(Zt, t, Ws, s);
  auto i22 = apply_rule2(Zs.rule, Zs.vals, Wt.rule, Wt.vals,
                         [&](cplx z, cplx w) { return (z - s - w + t) / (z - s + w - t); });
  KernelValue2x2 out;
  out.k11 = i11.value / I2PI2;
  out.k12 = v12.value / I2PI2 + hs_R12(s, x, t, y);
  out.k21 = -(v12r.value / I2PI2 + hs_R12(t, y, s, x));
  out.k22 = i22.value / I2PI2 + hs_R22(s, x, t, y);
  out.err = (i11.error + v12.error + v12r.error + i22.error) / (4 * pi * pi);
  return out;
}

double hs_R12(double s, double x, double t, double y) {
  if (!(s < t)) return 0.0;
  const double d = s - t;
  return -std::exp((-std::pow(d, 4) + 6 * (x + y) * d * d + 3 * (x - y) * (x - y)) / (12 * d)) / std::sqrt(4 * pi * (t - s));
}

double hs_R22(double s, double x, double t, double y) {
  const double u = y - t * t - x + s * s;
  const double H = std::exp(s * s * s / 3 + t * t * t / 3 - x * s - y * t);
  return H * u / (2 * std::sqrt(pi) * std::pow(t + s, 1.5)) * std::exp(-u * u / (4 * (t + s)));
}

KernelValue2x2 BulkLimitKernel::operator()(double s, double x, double t, double y) const {
  return pieces(s, x, t, y).assemble();
}

BulkPieces BulkLimitKernel::pieces(double s, double x, double t, double y) const {
  if (!(s > 0 && t > 0)) throw ParameterError("times must be positive");
  auto plus = [&](double u, double xx) {
    return [=, this](cplx z) { return std::exp(z * z * z / 3.0 - f1 * u * z * z - xx * z); };
  };
  auto minus = [&](double u, double xx) {
    return [=, this](cplx w) { return std::exp(-w * w * w / 3.0 + f1 * u * w * w + xx * w); };
  };
  const WedgeRule Ps = wedge_rule(sigma1, pi / 3, plus(s, x), tol), Pt = wedge_rule(sigma1, pi / 3, plus(t, y), tol);
  const WedgeRule Ms = wedge_rule(-sigma1, 2 * pi / 3, minus(s, x), tol),
                  Mt = wedge_rule(-sigma1, 2 * pi / 3, minus(t, y), tol);
  auto i11 = apply_rule2(Ps.rule, Ps.vals, Pt.rule, Pt.vals, [](cplx z, cplx w) { return (z - w) / (z * w * (z + w)); });
  auto h12 = [](cplx z, cplx w) { return (z + w) / (2.0 * z * (z - w)); };
  auto v12 = apply_rule2(Ps.rule, Ps.vals, Mt.rule, Mt.vals, h12);
  auto v12r = apply_rule2(Pt.rule, Pt.vals, Ms.rule, Ms.vals, h12);
  auto i22 = apply_rule2(Ms.rule, Ms.vals, Mt.rule, Mt.vals, [](cplx z, cplx w) { return (z - w) / (4.0 * (z + w)); });
  auto R12 = [&](double a, double xa, double b, double yb) {
    if (!(a < b)) return 0.0;
    return -std::exp(-(yb - xa) * (yb - xa) / (4 * f1 * (b - a))) / std::sqrt(4 * pi * f1 * (b - a));
  };
  BulkPieces out;
  out.I11 = i11.value / I2PI2;
  out.I12 = v12.value / I2PI2;
  out.I12_swapped = v12r.value / I2PI2;
  out.I22 = i22.value / I2PI2;
  out.R12 = R12(s, x, t, y);
  out.R12_swapped = R12(t, y, s, x);
  out.R22 = R22_closed(s, x, t, y);
  out.err = (i11.error + v12.error + v12r.error + i22.error) / (4 * pi * pi);
  return out;
}

cplx BulkLimitKernel::R22_contour(double s, double x, double t, double y) const {
  const double a = f1 * (s + t), b = y - x;
  auto r = integrate_contour([&](cplx w) { return w * std::exp(a * w * w + b * w); },
                             ComplexContour::wedge(-sigma1, 2 * pi / 3), tol);
  return -r.value / (2.0 * I2PI);
}

double BulkLimitKernel::R22_closed(double s, double x, double t, double y) const {
  const double a = f1 * (s + t), d = y - x;
  return d * std::exp(-d * d / (4 * a)) / (8 * std::sqrt(pi) * std::pow(a, 1.5));
}

KernelValue2x2 BulkLimitKernel::via_half_space(double s, double x, double t, double y) const {
  const double xs = x + f1 * f1 * s * s, yt = y + f1 * f1 * t * t;
  KernelValue2x2 h = kernel_hs_inf(f1 * s, xs, f1 * t, yt, tol);
  auto f = [&](double u, double xx) {
    return 2 * std::exp(u * u * u * f1 * f1 * f1 / 3 - (xx + f1 * f1 * u * u) * f1 * u);
  };
  const double fs = f(s, x), ft = f(t, y);
  h.k11 *= fs * ft;
  h.k12 *= fs / ft;
  h.k21 *= ft / fs;
  h.k22 /= fs * ft;
  return h;
}

KernelValue2x2 kernel_limit_bulk(double s, double x, double t, double y, double f1, double sigma1) {
  return BulkLimitKernel{f1, sigma1}(s, x, t, y);
}

cplx kernel_BM(double s, double x, double t, double y) {
  if (!(s > 0 && t > 0)) throw ParameterError("times must be positive");
  double v = std::exp(-x * x / (2 * s)) / std::sqrt(2 * pi * s);
  if (s > t) v -= std::exp(-(x - y) * (x - y) / (2 * (s - t))) / std::sqrt(2 * pi * (s - t));
  return v;
}

// ---------------- tail moments ----------------

TailMoment expected_count_tail(Regime regime, double q, double c, int N, double slice, double a, double tol) {
  TailMoment m{};
  double eu = 0, ev = 0;
  if (regime == Regime::edge) {
    EdgeKernelN K(q, c, N, 5 * pi / 16, 0.0, tol);
    m.lattice_start = K.ceil_index(slice, a);
    m.U = K.tail_U(slice, m.lattice_start, &eu);
    m.V = K.tail_V(slice, m.lattice_start, &ev);
    m.total = m.U + m.V;
  } else {
    BulkKernelN K(q, c, N, tol);
    m.lattice_start = K.ceil_index(slice, a);
    m.U = K.tail_U(slice, m.lattice_start, &eu);
    m.V = K.tail_V(slice, m.lattice_start, &ev);
    m.total = m.U + m.V + (c > 1 ? 1.0 : 0.0);
  }
  m.err = eu + ev;
  return m;
}

double expected_count_direct(Regime regime, double q, double c, int N, double slice, double a) {
  // Diagonal entries of the exact kernel; the conjugation cancels there.
  GeoKernelOptions opt;
  opt.k12_only = true;
  opt.tol = 1e-12;
  auto run = [&](long start, int M) {
    double sum = 0;
    int quiet = 0;
    for (long xt = start; quiet < 8; ++xt) {
      if (xt - start > 20000) throw AccuracyError("lattice sum did not terminate");
      const double term = kernel_geo(M, xt, M, xt, q, c, N, opt).k12.real();
      sum += term;
      quiet = (std::abs(term) <= 1e-13 * std::max(1.0, std::abs(sum))) ? quiet + 1 : 0;
    }
    return sum;
  };
  if (regime == Regime::edge) {
    EdgeKernelN K(q, c, N);
    return run(K.ceil_index(slice, a), K.M(slice));
  }
  BulkKernelN K(q, c, N);
  return run(K.ceil_index(slice, a), K.T(slice));
}

KernelValue2x2 BulkPieces::assemble() const {
  KernelValue2x2 out;
  out.k11 = I11;
  out.k12 = I12 + R12;
  out.k21 = -(I12_swapped + R12_swapped);
  out.k22 = I22 + R22;
  out.err = err;
  return out;
}

}  // namespace hslpp
