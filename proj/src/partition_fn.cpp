#include "hslpp/partition_fn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hslpp {

BigInt h_exact(int T, long r) {
  if (r < 0) return 0;
  // binom(T + r - 1, r) = prod_{k=1}^{r} (T - 1 + k) / k
  BigInt num = 1;
  for (long k = 1; k <= r; ++k) {
    num *= (T - 1 + k);
    num /= k;
  }
  return num;
}

BigInt jacobi_trudi_count(int T, long x1, long x2, long y1, long y2) {
  return h_exact(T, y1 - x1) * h_exact(T, y2 - x2) - h_exact(T, y1 - x2 + 1) * h_exact(T, y2 - x1 - 1);
}

long brute_pair_count(int T, long x1, long x2, long y1, long y2) {
  if (x1 > y1 || x2 > y2 || T < 1) return 0;
  // Step r -> r+1: B1 non-decreasing up to y1, B2 non-decreasing and at most B1(r).
  long count = 0;
  auto rec = [&](auto&& self, int r, long b1, long b2) -> void {
    if (r == T) {
      count += (b1 == y1 && b2 == y2);
      return;
    }
    for (long n1 = b1; n1 <= y1; ++n1)
      for (long n2 = b2; n2 <= std::min(y2, b1); ++n2) self(self, r + 1, n1, n2);
  };
  rec(rec, 0, x1, x2);
  return count;
}

LogH::LogH(int T, long rmax) : v_(rmax + 1) {
  const double lgT = std::lgamma(static_cast<double>(T));
  for (long r = 0; r <= rmax; ++r) v_[r] = std::lgamma(static_cast<double>(T + r)) - std::lgamma(r + 1.0) - lgT;
}

double log_pair_count(const LogH& h, long a, long b, long c, long d) {
  const double la = h(a) + h(b);
  if (!std::isfinite(la)) return -INFINITY;
  const double lb = h(c) + h(d);
  if (!std::isfinite(lb)) return la;
  if (lb >= la) return -INFINITY;
  return la + std::log(-std::expm1(lb - la));
}

SeriesValue partition_fn_series(int T1, long y1, long y2, double q, double c, long trunc, double rel_tol) {
  if (T1 < 1 || y1 < y2) throw std::domain_error("need T1 >= 1 and y1 >= y2");
  if (!(q > 0 && q < 1) || c < 0 || c * q >= 1) throw std::domain_error("parameters outside the admissible range");
  const long D = y1 - y2;
  std::vector<long double> h(D + trunc + 4);
  h[0] = 1;
  for (std::size_t r = 1; r < h.size(); ++r) h[r] = h[r - 1] * (T1 - 1 + static_cast<long double>(r)) / r;
  auto H = [&](long r) -> long double { return r < 0 ? 0.0L : h[r]; };
  const double m = std::max(q, c);
  // Tail bound term: count <= h_{D+n} h_n and the d-sum is at most (D+n+1) m^{D+n}, m = max(q,c).
  auto bound_term = [&](long n) {
    return static_cast<double>(std::pow(q, static_cast<double>(n)) * H(n) * H(D + n) * (D + n + 1) *
                               std::pow(m, static_cast<double>(D + n)));
  };
  long double sum = 0;
  double tail = INFINITY;
  long n = 0;
  for (; n <= trunc; ++n) {
    long double row = 0;
    // n = y2 - x2 >= 0, d = x1 - x2 in [0, D + n]
    for (long d = 0; d <= D + n; ++d) {
      const long double cnt = H(D + n - d) * H(n) - H(D + n + 1) * H(n - d - 1);
      if (cnt <= 0) continue;
      row += std::pow(static_cast<long double>(q), D + 2 * n - d) * std::pow(static_cast<long double>(c), d) * cnt;
    }
    sum += row;
    if (n + 2 <= trunc) {
      // Term ratio of the bound is non-increasing in n, so a geometric tail applies once it is below 1.
      const double ratio = bound_term(n + 2) / bound_term(n + 1);
      tail = ratio < 1 ? bound_term(n + 1) / (1 - ratio) : INFINITY;
      if (tail <= rel_tol * static_cast<double>(sum)) {
        ++n;
        break;
      }
    }
  }
  if (!(tail <= rel_tol * static_cast<double>(sum))) throw AccuracyError("series tail bound exceeds tolerance; raise trunc");
  return SeriesValue{static_cast<double>(sum), tail, n};
}

namespace {

// Trapezoid rule on |u| = r for (1/2πi)∮ f(u) du with f given in log form; returns complex log.
template <class LogF>
cplx circle_log_integral(double r, LogF&& logf, double rel = 1e-13) {
  cplx prev_log(0, 0);
  bool have_prev = false;
  for (int n = 64; n <= (1 << 22); n *= 2) {
    std::vector<cplx> vals(n);
    double mx = -INFINITY;
    for (int k = 0; k < n; ++k) {
      const double th = 2 * M_PI * (k + 0.5) / n;
      const cplx u = std::polar(r, th);
      vals[k] = logf(u) + std::log(u);
      mx = std::max(mx, vals[k].real());
    }
    cplx acc(0, 0);
    double absacc = 0;
    for (int k = 0; k < n; ++k) {
      const cplx e = std::exp(vals[k] - mx);
      acc += e;
      absacc += std::abs(e);
    }
    acc /= static_cast<double>(n);
    absacc /= static_cast<double>(n);
    const cplx lg = std::log(acc) + mx;
    if (have_prev) {
      // Relative agreement, or agreement at the rounding level of the integrand itself.
      const double change = std::abs(std::exp(lg - mx) - std::exp(prev_log - mx));
      if (change < rel * std::abs(acc) || change < 1e-15 * absacc) return lg;
    }
    prev_log = lg;
    have_prev = true;
  }
  throw AccuracyError("circle quadrature did not converge");
}

// Normalised Fourier coefficients of the merged integrand on |u| = r for e = 0..E:
// log Z(T1, (e, 0)) = log|coef[e]| + shift + (e + 1) log(q / r). Every e shares the node
// values; the e-dependence is the factor exp(-i (e + 1) theta).
struct MergedCoefficients {
  std::vector<cplx> coef;
  double shift;
};

MergedCoefficients merged_coefficients(int T1, long E, double q, double c, double r, double rel = 1e-13) {
  std::vector<cplx> prev;
  double prev_mx = 0;
  int n0 = 64;
  while (n0 < 4 * (E + 1)) n0 *= 2;  // keep every requested frequency below Nyquist
  for (int n = n0; n <= (1 << 22); n *= 2) {
    std::vector<cplx> lg(n);
    double mx = -INFINITY;
    for (int k = 0; k < n; ++k) {
      const cplx u = std::polar(r, 2 * M_PI * (k + 0.5) / n);
      lg[k] = -double(T1) * (std::log(1.0 - u) + std::log(1.0 - q * q / u)) + std::log(u * u - q * q) -
              std::log(q - u * c) - std::log(u - q * c);
      mx = std::max(mx, lg[k].real());
    }
    std::vector<cplx> g(n);
    for (int k = 0; k < n; ++k) g[k] = std::exp(lg[k] - mx);
    // exp(-i (e + 1) theta_k) from a table of 2n-th roots of unity, indexed exactly.
    std::vector<cplx> root(2 * n);
    for (int j = 0; j < 2 * n; ++j) root[j] = std::polar(1.0, -M_PI * j / n);
    std::vector<cplx> coef(E + 1);
    for (int k = 0; k < n; ++k) {
      const long stride = 2 * k + 1;
      long idx = stride % (2 * n);
      for (long e = 0; e <= E; ++e) {
        coef[e] += g[k] * root[idx];
        idx = (idx + stride) % (2 * n);
      }
    }
    for (auto& v : coef) v /= double(n);
    if (!prev.empty()) {
      bool done = true;
      for (long e = 0; e <= E && done; ++e) {
        const double change = std::abs(coef[e] - prev[e] * std::exp(prev_mx - mx));
        // The node values are scaled to max 1, which sets the rounding floor.
        done = change < rel * std::abs(coef[e]) || change < 1e-15;
      }
      if (done) return {std::move(coef), mx};
    }
    prev = std::move(coef);
    prev_mx = mx;
  }
  throw AccuracyError("circle quadrature did not converge");
}

// log Z(T1, (e, 0)) for e = 0..E. The integrand is analytic for max(q^2, qc) < |u| < min(1, q/c);
// each e takes the radius where its coefficient stands highest above the rounding floor.
// Values unresolved on every radius come back as -inf.
std::vector<double> log_merged_batch(int T1, long E, double q, double c) {
  const double lo = std::max(q * q, q * c), hi = c > 0 ? std::min(1.0, q / c) : 1.0;
  std::vector<double> radii = {q};
  const int J = 6;
  for (int j = 0; j < J; ++j) radii.push_back(lo * std::pow(hi / lo, (j + 0.5) / J));
  std::vector<double> out(E + 1, -INFINITY), snr(E + 1, -INFINITY);
  for (double r : radii) {
    const MergedCoefficients mc = merged_coefficients(T1, E, q, c, r);
    for (long e = 0; e <= E; ++e) {
      const double a = std::abs(mc.coef[e]);
      // Coefficients near the rounding floor carry no information.
      if (a < 1e-12 || std::log(a) <= snr[e]) continue;
      snr[e] = std::log(a);
      out[e] = std::log(a) + mc.shift + double(e + 1) * std::log(q / r);
    }
  }
  return out;
}

}  // namespace

cplx partition_fn_contour(int T1, long y1, long y2, cplx qh, cplx ch) {
  const double q = std::abs(qh), c = std::abs(ch);
  if (!(q > 0 && q < 1) || c * q >= 1) throw ContourPlacementError("need |q| in (0,1) and |c||q| < 1");
  const long D = y1 - y2;
  // r1 in (q^2, min(1, q/c)), r2 in (max(q^2, qc), 1): geometric midpoints.
  const double r1_hi = c > 0 ? std::min(1.0, q / c) : 1.0;
  const double r1 = std::sqrt(q * q * r1_hi);
  const double r2 = std::sqrt(std::max(q * q, q * c) * 1.0);
  if (!(r1 > q * q && c * r1 / q < 1 && r2 > q * q && r2 < 1 && q * c / r2 < 1))
    throw ContourPlacementError("no admissible radii");
  auto logHH = [&](cplx u) { return -double(T1) * (std::log(1.0 - u) + std::log(1.0 - qh * qh / u)); };
  const cplx I1 = circle_log_integral(r1, [&](cplx u) {
    return double(D) * std::log(qh) + logHH(u) - double(D + 1) * std::log(u) - std::log(1.0 - u * ch / qh);
  });
  const cplx I2 = circle_log_integral(r2, [&](cplx u) {
    return double(D + 2) * std::log(qh) + logHH(u) - double(D + 3) * std::log(u) - std::log(1.0 - qh * ch / u);
  });
  return std::exp(I1) - std::exp(I2);
}

cplx log_partition_fn_merged(int T1, long y1, long y2, cplx qh, cplx ch) {
  const double q = std::abs(qh), c = std::abs(ch);
  if (!(q > 0 && q < 1) || !(c < 1)) throw ContourPlacementError("merged circle needs |c| < 1");
  const long D = y1 - y2;
  return circle_log_integral(q, [&](cplx u) {
    return double(D + 1) * std::log(qh) - double(T1) * (std::log(1.0 - u) + std::log(1.0 - qh * qh / u)) -
           double(D + 2) * std::log(u) + std::log(u * u - qh * qh) - std::log(qh - u * ch) - std::log(u - qh * ch);
  });
}

double partition_fn_enumerate(int T1, long y1, long y2, double q, double c, long depth) {
  double z = 0;
  for (long x2 = y2 - depth; x2 <= y2; ++x2)
    for (long x1 = x2; x1 <= y1; ++x1) {
      const long cnt = brute_pair_count(T1, x1, x2, y1, y2);
      if (cnt) z += cnt * std::pow(c, double(x1 - x2)) * std::pow(q, double(y1 - x1 + y2 - x2));
    }
  return z;
}

PairScaling::PairScaling(double q_, double c_, double b_, double d_, double y1, double y2)
    : q(q_), c(c_), b(b_), d(d_) {
  T = static_cast<int>(std::ceil(b * d));
  p = q / (1 - q);
  sigma = std::sqrt(p * (1 + p));
  Y1 = std::lround(p * T + sigma * std::sqrt(d) * y1);
  Y2 = std::lround(p * T + sigma * std::sqrt(d) * y2);
  if (Y1 < Y2) throw std::domain_error("boundary data must be ordered");
}

cplx characteristic_ratio(const PairScaling& ps, double s, double t) {
  const double a = s / (ps.sigma * std::sqrt(ps.d));
  const cplx qh = ps.q * std::exp(cplx(0, -a));
  const cplx ch = ps.c * std::exp(cplx(0, t));
  const cplx phase(0, 2 * ps.p * ps.T * a);
  if (ps.c < 1) {
    const cplx num = log_partition_fn_merged(ps.T, ps.Y1, ps.Y2, qh, ch);
    const cplx den = log_partition_fn_merged(ps.T, ps.Y1, ps.Y2, ps.q, ps.c);
    return std::exp(phase + num - den);
  }
  return std::exp(phase) * partition_fn_contour(ps.T, ps.Y1, ps.Y2, qh, ch) /
         partition_fn_contour(ps.T, ps.Y1, ps.Y2, ps.q, ps.c);
}

cplx characteristic_limit(const PairScaling& ps, double s, double t) {
  const cplx den = 1.0 - ps.c * std::exp(cplx(0, t));
  return std::exp(-ps.b * s * s) * (1 - ps.c) * (1 - ps.c) / (den * den);
}

namespace {

void build_cdf(std::vector<double>& logw, std::vector<double>& cdf) {
  const double mx = *std::max_element(logw.begin(), logw.end());
  cdf.resize(logw.size());
  double acc = 0;
  for (std::size_t k = 0; k < logw.size(); ++k) {
    acc += std::exp(logw[k] - mx);
    cdf[k] = acc;
  }
  for (double& v : cdf) v /= acc;
}

std::size_t draw(const std::vector<double>& cdf, Rng& rng) {
  const double u = uniform01(rng);
  auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
  return std::min<std::size_t>(it - cdf.begin(), cdf.size() - 1);
}

}  // namespace

OriginLaw::OriginLaw(int T, long y1, long y2, double q, double c, double tail) : y1_(y1), y2_(y2) {
  if (T < 1 || y1 < y2) throw std::domain_error("need T >= 1 and y1 >= y2");
  const long D = y1 - y2;
  const double lq = std::log(q), lc = c > 0 ? std::log(c) : -INFINITY;
  const double cut = std::log(tail);
  long rmax = 4096;
  LogH h(T, rmax);
  std::vector<double> logw;
  double best = -INFINITY;
  for (long n = 0;; ++n) {
    if (D + n + 2 > h.rmax()) {
      rmax *= 2;
      h = LogH(T, rmax);
    }
    double row_best = -INFINITY;
    const long dmax = c > 0 ? D + n : 0;
    for (long d = 0; d <= dmax; ++d) {
      const double lcnt = log_pair_count(h, D + n - d, n, D + n + 1, n - d - 1);
      if (!std::isfinite(lcnt)) continue;
      const double lw = (D + 2 * n - d) * lq + (d > 0 ? d * lc : 0.0) + lcnt;
      row_best = std::max(row_best, lw);
      x1_.push_back(y2 - n + d);
      x2_.push_back(y2 - n);
      logw.push_back(lw);
    }
    best = std::max(best, row_best);
    // Rows are unimodal in n; stop once past the peak and negligible.
    if (row_best < best + cut - 10 && n > 10) break;
  }
  build_cdf(logw, cdf_);
}

std::pair<long, long> OriginLaw::sample(Rng& rng) const {
  const std::size_t k = draw(cdf_, rng);
  return {x1_[k], x2_[k]};
}

double OriginLaw::prob(long x1, long x2) const {
  for (std::size_t k = 0; k < x1_.size(); ++k)
    if (x1_[k] == x1 && x2_[k] == x2) return cdf_[k] - (k ? cdf_[k - 1] : 0.0);
  return 0.0;
}

SliceLaw::SliceLaw(int T, int m, long y1, long y2, double q, double c, double tail) {
  if (m < 1 || m >= T) throw std::domain_error("slice time must lie strictly inside (0,T)");
  const long D = y1 - y2;
  const int Tr = T - m;
  const double lq = std::log(q), cut = std::log(tail);
  long rmax = 4096;
  LogH h(Tr, rmax);
  std::vector<double> logZ;  // log Z_m(e), filled lazily
  auto logZm = [&](long e) {
    if (e >= static_cast<long>(logZ.size())) logZ = log_merged_batch(m, std::max(2 * e, 256L), q, c);
    return logZ[e];
  };
  std::vector<double> logw;
  double best = -INFINITY;
  for (long n = 0;; ++n) {
    if (D + n + 2 > h.rmax()) {
      rmax *= 2;
      h = LogH(Tr, rmax);
    }
    double row_best = -INFINITY;
    for (long e = 0; e <= D + n; ++e) {
      const double lcnt = log_pair_count(h, D + n - e, n, D + n + 1, n - e - 1);
      if (!std::isfinite(lcnt)) continue;
      const double lw = logZm(e) + (D + 2 * n - e) * lq + lcnt;
      row_best = std::max(row_best, lw);
      v1_.push_back(y2 - n + e);
      v2_.push_back(y2 - n);
      logw.push_back(lw);
    }
    best = std::max(best, row_best);
    if (row_best < best + cut - 10 && n > 10) break;
  }
  build_cdf(logw, cdf_);
}

std::pair<long, long> SliceLaw::sample(Rng& rng) const {
  const std::size_t k = draw(cdf_, rng);
  return {v1_[k], v2_[k]};
}

}  // namespace hslpp
