#include "hslpp/contour.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <queue>

namespace hslpp {

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
using G7 = boost::math::quadrature::gauss<double, 7>;

constexpr int kMaxDepth = 40;
constexpr double kPi = std::numbers::pi;

// Finite parametrization t in [0,1] -> (z, dz/dt).
struct Param {
  std::function<std::pair<cplx, cplx>(double)> at;
};

Param param_of(const Segment& s) {
  return {[s](double t) { return std::make_pair(s.a + t * (s.b - s.a), s.b - s.a); }};
}

Param param_of(const Arc& a) {
  return {[a](double t) {
    const double th = a.theta0 + t * (a.theta1 - a.theta0);
    const cplx e = std::polar(a.radius, th);
    return std::make_pair(a.center + e, cplx(0, 1) * e * (a.theta1 - a.theta0));
  }};
}

// Piece [l0, l1] of a ray, oriented along the ray's direction of travel.
Param ray_chunk(const Ray& r, double l0, double l1) {
  const cplx d = r.dir / std::abs(r.dir);
  if (!r.inbound)
    return {[=](double t) { return std::make_pair(r.origin + (l0 + t * (l1 - l0)) * d, (l1 - l0) * d); }};
  return {[=](double t) { return std::make_pair(r.origin + (l1 - t * (l1 - l0)) * d, -(l1 - l0) * d); }};
}

struct Panel {
  double a, b;
  int depth;
  cplx k, g;
  double abs_k;
  double err() const { return std::abs(k - g); }
  bool operator<(const Panel& o) const { return err() < o.err(); }
};

Panel gk_panel(const Param& p, const ComplexFn& f, double a, double b, int depth) {
  const auto& x = GK::abscissa();
  const auto& wk = GK::weights();
  const auto& wg = G7::weights();
  const double h = 0.5 * (b - a), m = 0.5 * (a + b);
  Panel pan{a, b, depth, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (int sgn : {1, -1}) {
      if (i == 0 && sgn == -1) continue;
      auto [z, dz] = p.at(m + sgn * h * x[i]);
      const cplx v = f(z) * dz * h;
      pan.k += wk[i] * v;
      pan.abs_k += wk[i] * std::abs(v);
      if (i % 2 == 0) pan.g += wg[i / 2] * v;
    }
  }
  return pan;
}

// Global adaptive bisection on one finite parametrized piece.
std::vector<Panel> adapt(const Param& p, const ComplexFn& f, double tol, int min_splits, bool relative_to_abs,
                         double& scale_runmax) {
  std::priority_queue<Panel> heap;
  for (int i = 0; i < min_splits; ++i)
    heap.push(gk_panel(p, f, double(i) / min_splits, double(i + 1) / min_splits, 0));
  std::vector<Panel> done;
  cplx total = 0;
  double err = 0, abs_total = 0;
  for (auto copy = heap; !copy.empty(); copy.pop()) {
    total += copy.top().k;
    err += copy.top().err();
    abs_total += copy.top().abs_k;
  }
  while (true) {
    scale_runmax = std::max(scale_runmax, std::abs(total));
    const double scale = relative_to_abs ? abs_total : std::max(scale_runmax, tol);
    if (err <= tol * scale || err == 0) break;
    Panel worst = heap.top();
    if (worst.depth >= kMaxDepth) throw QuadratureError("contour quadrature did not converge", total);
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    Panel l = gk_panel(p, f, worst.a, mid, worst.depth + 1), r = gk_panel(p, f, mid, worst.b, worst.depth + 1);
    total += l.k + r.k - worst.k;
    err = std::max(0.0, err + l.err() + r.err() - worst.err());
    abs_total += l.abs_k + r.abs_k - worst.abs_k;
    heap.push(l);
    heap.push(r);
  }
  while (!heap.empty()) {
    done.push_back(heap.top());
    heap.pop();
  }
  return done;
}

template <class Sink>
void walk_ray(const Ray& r, const ComplexFn& f, double tol, bool relative_to_abs, Sink&& sink) {
  // Chunks [0,1], [1,2], [2,4], ... until two consecutive chunks are negligible.
  double l0 = 0, l1 = 1, acc_abs = 0, runmax = 0;
  int quiet = 0;
  for (int n = 0; n < 60 && quiet < 2; ++n) {
    const Param p = ray_chunk(r, l0, l1);
    auto panels = adapt(p, f, tol, 2, relative_to_abs, runmax);
    double chunk_abs = 0;
    for (auto& pan : panels) chunk_abs += pan.abs_k;
    acc_abs += chunk_abs;
    sink(p, panels);
    quiet = (chunk_abs <= 1e-14 * acc_abs) ? quiet + 1 : 0;
    l0 = l1;
    l1 *= 2;
  }
  if (quiet < 2) throw QuadratureError("ray integrand does not decay", 0.0);
}

double dist_segment(cplx p, cplx a, cplx b) {
  const cplx d = b - a;
  const double L2 = std::norm(d);
  double t = L2 == 0 ? 0 : std::real((p - a) * std::conj(d)) / L2;
  t = std::clamp(t, 0.0, 1.0);
  return std::abs(p - (a + t * d));
}

double wrap_angle(double a) {
  a = std::fmod(a, 2 * kPi);
  return a < 0 ? a + 2 * kPi : a;
}

}  // namespace

ComplexContour ComplexContour::reversed() const {
  std::vector<ContourPiece> out;
  for (auto it = pieces_.rbegin(); it != pieces_.rend(); ++it) {
    std::visit(
        [&](auto const& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, Segment>) out.push_back(Segment{p.b, p.a});
          else if constexpr (std::is_same_v<T, Arc>) out.push_back(Arc{p.center, p.radius, p.theta1, p.theta0});
          else out.push_back(Ray{p.origin, p.dir, !p.inbound});
        },
        *it);
  }
  return ComplexContour(std::move(out));
}

namespace {
std::pair<cplx, cplx> ends(const ContourPiece& piece) {
  return std::visit(
      [](auto const& p) -> std::pair<cplx, cplx> {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Segment>) return {p.a, p.b};
        else if constexpr (std::is_same_v<T, Arc>)
          return {p.center + std::polar(p.radius, p.theta0), p.center + std::polar(p.radius, p.theta1)};
        else {
          const cplx inf(INFINITY, INFINITY);
          return p.inbound ? std::make_pair(inf, p.origin) : std::make_pair(p.origin, inf);
        }
      },
      piece);
}
}  // namespace

bool ComplexContour::connected(double tol) const {
  for (std::size_t i = 0; i + 1 < pieces_.size(); ++i) {
    const cplx e = ends(pieces_[i]).second, s = ends(pieces_[i + 1]).first;
    if (!std::isfinite(e.real()) || !std::isfinite(s.real())) continue;
    if (std::abs(e - s) > tol) return false;
  }
  return true;
}

double ComplexContour::distance_to(cplx p) const {
  double d = INFINITY;
  for (auto& piece : pieces_) {
    std::visit(
        [&](auto const& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Segment>) d = std::min(d, dist_segment(p, s.a, s.b));
          else if constexpr (std::is_same_v<T, Arc>) {
            const double lo = std::min(s.theta0, s.theta1), hi = std::max(s.theta0, s.theta1);
            const double ang = std::arg(p - s.center);
            bool inside = false;
            for (int k = -2; k <= 2; ++k) {
              const double a = ang + 2 * kPi * k;
              if (a >= lo && a <= hi) inside = true;
            }
            double best = std::min(std::abs(p - (s.center + std::polar(s.radius, s.theta0))),
                                   std::abs(p - (s.center + std::polar(s.radius, s.theta1))));
            if (inside) best = std::min(best, std::abs(std::abs(p - s.center) - s.radius));
            d = std::min(d, best);
          } else {
            const cplx u = s.dir / std::abs(s.dir);
            const double t = std::max(0.0, std::real((p - s.origin) * std::conj(u)));
            d = std::min(d, std::abs(p - (s.origin + t * u)));
          }
        },
        piece);
  }
  return d;
}

ComplexContour ComplexContour::circle(double r, cplx center) {
  return ComplexContour({Arc{center, r, -kPi, kPi}});
}

ComplexContour ComplexContour::wedge(cplx z, double phi) {
  return ComplexContour({Ray{z, std::polar(1.0, -phi), true}, Ray{z, std::polar(1.0, phi), false}});
}

ComplexContour ComplexContour::closed_wedge(cplx z, double phi, double len) {
  const cplx lo = z + std::polar(len, -phi), hi = z + std::polar(len, phi);
  const double th_hi = std::arg(hi), th_lo = wrap_angle(std::arg(lo));
  // Counterclockwise from hi round through the negative axis to lo.
  double a0 = wrap_angle(th_hi), a1 = th_lo;
  if (a1 <= a0) a1 += 2 * kPi;
  return ComplexContour({Segment{lo, z}, Segment{z, hi}, Arc{0.0, std::abs(hi), a0, a1}});
}

ComplexContour ComplexContour::edge_contour(double x, double theta, double R, double r) {
  const cplx up = std::polar(1.0, theta), dn = std::polar(1.0, -theta);
  const cplx zp = x + r * up, zm = x + r * dn;
  // Distance t along the ray with |x + t e^{i theta}| = R.
  const double b = x * std::cos(theta);
  const double t = -b + std::sqrt(b * b - (x * x - R * R));
  const cplx zetap = x + t * up, zetam = x + t * dn;
  double a0 = wrap_angle(std::arg(zetap)), a1 = wrap_angle(std::arg(zetam));
  if (a1 <= a0) a1 += 2 * kPi;
  std::vector<ContourPiece> pieces{Segment{zetam, zm}};
  if (r > 0) pieces.push_back(Segment{zm, zp});
  pieces.push_back(Segment{zp, zetap});
  pieces.push_back(Arc{0.0, R, a0, a1});
  return ComplexContour(std::move(pieces));
}

void check_poles(const ComplexContour& c, const std::vector<cplx>& poles) {
  for (cplx p : poles)
    if (c.distance_to(p) < 1e-6) throw ContourPlacementError("integrand pole lies on the contour");
}

QuadResult integrate_contour(const ComplexFn& f, const ComplexContour& c, double tol, const std::vector<cplx>& poles) {
  check_poles(c, poles);
  QuadResult res{0.0, 0.0};
  auto add = [&](const std::vector<Panel>& panels) {
    for (auto& p : panels) {
      res.value += p.k;
      res.error += p.err();
    }
  };
  for (auto& piece : c.pieces()) {
    double runmax = 0;
    try {
      std::visit(
          [&](auto const& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, Ray>)
              walk_ray(s, f, tol, false, [&](const Param&, const std::vector<Panel>& ps) { add(ps); });
            else
              add(adapt(param_of(s), f, tol, 2, false, runmax));
          },
          piece);
    } catch (QuadratureError& e) {
      throw QuadratureError(e.what(), res.value + e.partial);
    }
  }
  return res;
}

namespace {
void emit_nodes(const Param& p, const std::vector<Panel>& panels, QuadRule& rule) {
  const auto& x = GK::abscissa();
  const auto& wk = GK::weights();
  const auto& wg = G7::weights();
  for (auto& pan : panels) {
    const double h = 0.5 * (pan.b - pan.a), m = 0.5 * (pan.a + pan.b);
    for (std::size_t i = 0; i < x.size(); ++i) {
      for (int sgn : {1, -1}) {
        if (i == 0 && sgn == -1) continue;
        auto [z, dz] = p.at(m + sgn * h * x[i]);
        rule.z.push_back(z);
        rule.wk.push_back(wk[i] * h * dz);
        rule.wg.push_back(i % 2 == 0 ? wg[i / 2] * h * dz : 0.0);
      }
    }
  }
}
}  // namespace

QuadRule build_rule(const ComplexContour& c, const ComplexFn& probe, double tol, int min_splits) {
  // A full circle gets the periodic trapezoid rule.
  if (c.pieces().size() == 1)
    if (auto* a = std::get_if<Arc>(&c.pieces().front()); a && std::abs(std::abs(a->theta1 - a->theta0) - 2 * kPi) < 1e-12 &&
                                                           a->theta1 > a->theta0)
      return circle_rule(a->radius, probe, tol, a->center);
  QuadRule rule;
  for (auto& piece : c.pieces()) {
    double runmax = 0;
    std::visit(
        [&](auto const& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Ray>)
            walk_ray(s, probe, tol, true, [&](const Param& p, const std::vector<Panel>& ps) { emit_nodes(p, ps, rule); });
          else {
            const Param p = param_of(s);
            emit_nodes(p, adapt(p, probe, tol, min_splits, true, runmax), rule);
          }
        },
        piece);
  }
  return rule;
}

QuadRule circle_rule(double r, const ComplexFn& probe, double tol, cplx center) {
  auto trap = [&](int n, std::vector<cplx>& zs, std::vector<cplx>& ws) {
    zs.resize(n);
    ws.resize(n);
    for (int k = 0; k < n; ++k) {
      const cplx e = std::polar(r, 2 * kPi * (k + 0.5) / n);
      zs[k] = center + e;
      ws[k] = cplx(0, 1) * e * (2 * kPi / n);
    }
  };
  std::vector<cplx> z1, w1;
  int n = 32;
  trap(n, z1, w1);
  std::vector<cplx> f1(n);
  for (int k = 0; k < n; ++k) f1[k] = probe(z1[k]);
  for (; n <= (1 << 18); n *= 2) {
    std::vector<cplx> z2, w2;
    trap(2 * n, z2, w2);
    std::vector<cplx> f2(2 * n);
    cplx s1 = 0, s2 = 0;
    double a2 = 0;
    for (int k = 0; k < n; ++k) s1 += f1[k] * w1[k];
    for (int k = 0; k < 2 * n; ++k) {
      f2[k] = probe(z2[k]);
      s2 += f2[k] * w2[k];
      a2 += std::abs(f2[k] * w2[k]);
    }
    if (std::abs(s2 - s1) <= tol * a2 || a2 == 0) {
      QuadRule rule;
      rule.z = z2;
      rule.wk = w2;
      rule.wg.assign(2 * n, 0.0);
      // Error companion: the n-point trapezoid on the even nodes.
      for (int k = 0; k < 2 * n; k += 2) rule.wg[k] = 2.0 * w2[k];
      return rule;
    }
    z1 = std::move(z2);
    w1 = std::move(w2);
    f1 = std::move(f2);
  }
  throw QuadratureError("circle rule did not settle", 0.0);
}

// Rounding floor: cancellation among terms of size sum|.| leaves about 1e-15 of it.
constexpr double kRoundoff = 1e-15;

QuadResult apply_rule(const QuadRule& r, const ComplexFn& f) {
  cplx k = 0, g = 0;
  double mass = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const cplx v = f(r.z[i]);
    k += r.wk[i] * v;
    g += r.wg[i] * v;
    mass += std::abs(r.wk[i] * v);
  }
  return {k, std::max(std::abs(k - g), kRoundoff * mass)};
}

QuadResult apply_rule2(const QuadRule& rz, const std::vector<cplx>& a, const QuadRule& rw, const std::vector<cplx>& b,
                       const std::function<cplx(cplx, cplx)>& h) {
  cplx k = 0, g = 0;
  double mass = 0;
  for (std::size_t i = 0; i < rz.size(); ++i) {
    if (a[i] == 0.0) continue;
    cplx rk = 0, rg = 0;
    double rm = 0;
    for (std::size_t j = 0; j < rw.size(); ++j) {
      if (b[j] == 0.0) continue;
      const cplx bh = b[j] * h(rz.z[i], rw.z[j]);
      const cplx v = rw.wk[j] * bh;
      rk += v;
      rg += rw.wg[j] * bh;
      rm += std::abs(v);
    }
    k += rz.wk[i] * a[i] * rk;
    g += rz.wg[i] * a[i] * rg;
    mass += std::abs(rz.wk[i] * a[i]) * rm;
  }
  return {k, std::max(std::abs(k - g), kRoundoff * mass)};
}

}  // namespace hslpp
