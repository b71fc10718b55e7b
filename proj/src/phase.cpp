#include "hslpp/phase.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hslpp {

using std::log;

cplx BulkPhase::S1(cplx z) const {
  const double q = k.q;
  return log(1.0 - q / z) - log(1.0 - q * z) - k.h1 * log(z);
}

cplx BulkPhase::G1(cplx z) const {
  const double q = k.q;
  return log(1.0 - q / z) - k.p1 * log(z) - std::log(1 - q);
}

cplx EdgePhase::S1(cplx z, double kappa) const {
  const double q = k.q;
  return (1 + kappa) * log(1.0 - q / z) - log(1.0 - q * z) - k.h1(kappa) * log(z);
}

cplx EdgePhase::S2(cplx z, double kappa) const {
  const double q = k.q;
  return (1 + kappa) * log(1.0 - q / z) - log(1.0 - q * z) - k.h2(kappa) * log(z);
}

cplx EdgePhase::S1bar(cplx z, double kappa) const { return S1(z, kappa) - S1(k.zc(kappa), kappa); }
cplx EdgePhase::S2bar(cplx z, double kappa) const { return S2(z, kappa) - S2(k.c, kappa); }

cplx EdgePhase::G2(cplx z) const { return log(1.0 - k.q / z) - k.p2 * log(z); }
cplx EdgePhase::G2bar(cplx z) const { return G2(z) - G2(k.c); }

cplx EdgePhase::S1hat(cplx z, double kh) const {
  const double q = k.q;
  return log(1.0 - q / z) - kh * log(1.0 - q * z) - q * (q + 2 * std::sqrt(kh) + q * kh) / (1 - q * q) * log(z);
}

cplx EdgePhase::S2hat(cplx z, double kh) const {
  const double q = k.q, c = k.c;
  const double coef = (q * c * kh * (c - q) + q * (1 - q * c)) / ((1 - q * c) * (c - q));
  return log(1.0 - q / z) - kh * log(1.0 - q * z) - coef * log(z);
}

double EdgePhase::kappa_hat0() const {
  const double r = (1 - k.q * k.c) / (k.c - k.q);
  return r * r;
}

bool PhaseReport::all_ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const PhaseCheck& c) { return c.ok; });
}

std::vector<PhaseCheck> PhaseReport::violations() const {
  std::vector<PhaseCheck> v;
  for (auto& c : checks)
    if (!c.ok) v.push_back(c);
  return v;
}

namespace {

// Central differences with one Richardson step.
template <class F>
double d1(F f, double x, double h) {
  auto D = [&](double s) { return (f(x + s) - f(x - s)) / (2 * s); };
  return (4 * D(h / 2) - D(h)) / 3;
}
template <class F>
double d2(F f, double x, double h) {
  auto D = [&](double s) { return (f(x + s) - 2 * f(x) + f(x - s)) / (s * s); };
  return (4 * D(h / 2) - D(h)) / 3;
}

// |v - e| <= tol * max(1, scale) where scale is the size of the individual terms.
void eq(PhaseReport& r, std::string name, double kappa, double v, double e, double tol, double scale = 0) {
  const double s = std::max({1.0, std::abs(e), scale});
  r.checks.push_back({std::move(name), kappa, v, e, tol * s, std::abs(v - e) <= tol * s});
}

// Sizes of the first and second derivatives of a(1+k) log(1-q/z) - b log(1-qz) - h log z term by term.
double term_scale1(double q, double z, double a, double b, double hh) {
  return std::abs(a * q / (z * (z - q))) + std::abs(b * q / (1 - q * z)) + std::abs(hh / z);
}
double term_scale2(double q, double z, double a, double b, double hh) {
  return std::abs(a * q * (2 * z - q) / (z * z * (z - q) * (z - q))) + std::abs(b * q * q / ((1 - q * z) * (1 - q * z))) +
         std::abs(hh / (z * z));
}
void le(PhaseReport& r, std::string name, double kappa, double v, double bound) {
  r.checks.push_back({std::move(name), kappa, v, bound, 0.0, v <= bound});
}

}  // namespace

PhaseReport phase_diagnostics(double q, double c, const std::vector<double>& kappas, double theta, double R, double h) {
  using std::numbers::pi;
  EdgePhase ph(q, c);
  const auto& k = ph.k;
  if (R <= 0) R = 2 / q;
  PhaseReport rep;
  const double delta0 = 0.5 * std::min({1.0, 1 - q, 1 / q - c});
  const double s2 = k.sigma2 * k.sigma2;

  auto G2r = [&](double x) { return ph.G2(x).real(); };
  eq(rep, "G2'(c)=0", 0, d1(G2r, c, h), 0, 1e-7, term_scale1(q, c, 1, 0, k.p2));
  eq(rep, "G2''(c)=-sigma2^2/c^2", 0, d2(G2r, c, h), -s2 / (c * c), 1e-6, term_scale2(q, c, 1, 0, k.p2));

  for (double R0 : {0.5 * q, 0.5, 1.0, c, R}) {
    double worst = INFINITY;
    for (int i = 1; i < 64; ++i) {
      const double th = pi * i / 64;
      const double fd = d1([&](double t) { return ph.G2(std::polar(R0, t)).real(); }, th, h);
      const double exact = R0 * q * std::sin(th) / (R0 * R0 + q * q - 2 * R0 * q * std::cos(th));
      worst = std::min(worst, fd);
      eq(rep, "d/dtheta Re G2 closed form", 0, fd, exact, 1e-6);
    }
    rep.checks.push_back({"Re G2 increasing on circles", 0, worst, 0, 0, worst > 0});
  }

  for (double kappa : kappas) {
    if (kappa < 0 || kappa >= k.kappa_bar) throw ParameterError("kappa must lie in [0, kappa_bar)");
    const double zc = k.zc(kappa);
    auto S1r = [&](double x) { return ph.S1(x, kappa).real(); };
    auto S2r = [&](double x) { return ph.S2(x, kappa).real(); };
    const double a = 1 + kappa;
    eq(rep, "S2'(c)=0", kappa, d1(S2r, c, h), 0, 1e-7, term_scale1(q, c, a, 1, k.h2(kappa)));
    eq(rep, "S2''(c)=sigma2^2(kbar-kappa)/c^2", kappa, d2(S2r, c, h), s2 * (k.kappa_bar - kappa) / (c * c), 1e-6,
       term_scale2(q, c, a, 1, k.h2(kappa)));
    eq(rep, "S1'(zc)=0", kappa, d1(S1r, zc, h), 0, 1e-7, term_scale1(q, zc, a, 1, k.h1(kappa)));
    eq(rep, "S1''(zc)=0", kappa, d2(S1r, zc, h), 0, 1e-6, term_scale2(q, zc, a, 1, k.h1(kappa)));
    le(rep, "S1(zc)-S1(c)<0", kappa, S1r(zc) - S1r(c), -1e-300);
    le(rep, "S2(c)-S2(zc)<0", kappa, S2r(c) - S2r(zc), -1e-300);

    // Quadratic decay along the steepest-descent rays near c.
    const double eps1 = -s2 * (k.kappa_bar - kappa) * std::cos(2 * theta) / (4 * c * c);
    for (int j = 3; j <= 12; ++j) {
      const double r = delta0 * std::ldexp(1.0, -j);
      for (int sg : {1, -1}) {
        const cplx z = c + std::polar(r, sg * theta);
        le(rep, "Re[S2(z)-S2(c)] <= -eps1 r^2 on ray", kappa, ph.S2bar(z, kappa).real(), -eps1 * r * r);
      }
    }
    // Growth of Re G2 along the vertical line through c.
    for (int j = 3; j <= 12; ++j) {
      const double r = delta0 * std::ldexp(1.0, -j);
      const double eps2 = s2 / (4 * c * c);
      for (int sg : {1, -1}) {
        const cplx z = c + cplx(0, sg * r);
        le(rep, "Re[G2(z)-G2(c)] >= eps2 r^2 on vertical", kappa, -ph.G2bar(z).real(), -eps2 * r * r);
      }
    }
    // Monotone real parts on circles of radius at most zc.
    for (double R0 : {0.5 * (q + zc), zc}) {
      double worst1 = INFINITY, worst2 = INFINITY;
      for (int i = 0; i <= 64; ++i) {
        const double th = std::clamp(pi * i / 64, h, pi - h);
        worst1 = std::min(worst1, d1([&](double t) { return ph.S1(std::polar(R0, t), kappa).real(); }, th, h));
        worst2 = std::min(worst2, d1([&](double t) { return ph.S2(std::polar(R0, t), kappa).real(); }, th, h));
      }
      rep.checks.push_back({"Re S1 nondecreasing on small circle", kappa, worst1, 0, 1e-9, worst1 >= -1e-9});
      rep.checks.push_back({"Re S2 nondecreasing on small circle", kappa, worst2, 0, 1e-9, worst2 >= -1e-9});
    }
    // Scaling identity with kappa_hat = 1/(1+kappa).
    const double kh = 1 / (1 + kappa);
    for (cplx z : {cplx(0.3, 0.8), cplx(-1.1, 0.2), cplx(2.5, -0.4), cplx(c, 0.1)}) {
      eq(rep, "S1 = (1+kappa) S1hat", kappa, std::abs(ph.S1(z, kappa) - (1 + kappa) * ph.S1hat(z, kh)), 0, 1e-12);
      eq(rep, "S2 = (1+kappa) S2hat", kappa, std::abs(ph.S2(z, kappa) - (1 + kappa) * ph.S2hat(z, kh)), 0, 1e-12);
    }
  }
  return rep;
}

PhaseReport bulk_phase_diagnostics(double q) {
  BulkPhase ph(q);
  PhaseReport rep;
  eq(rep, "S1(1)=0", 0, std::abs(ph.S1(1.0)), 0, 1e-14);
  // Remainder of the cubic Taylor term: least-squares slope in log-log coordinates.
  const double s3 = std::pow(ph.k.sigma1, 3);
  std::vector<double> lx, ly;
  for (int j = 0; j < 8; ++j) {
    const double r = 0.08 * std::pow(0.7, j);
    const cplx dz = std::polar(r, 0.6);
    const cplx rem = ph.S1(1.0 + dz) - s3 * dz * dz * dz / 3.0;
    lx.push_back(std::log(r));
    ly.push_back(std::log(std::abs(rem)));
  }
  const double n = lx.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  rep.checks.push_back({"Taylor remainder slope", 0, slope, 4, 0.2, std::abs(slope - 4) <= 0.2});
  return rep;
}

}  // namespace hslpp
