#include "hslpp/pfaffian.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace hslpp {

namespace {

void check_shape(const CMatrix& A) {
  if (A.rows() != A.cols()) throw ShapeError("matrix is not square");
  if (A.rows() % 2) throw ShapeError("odd dimension " + std::to_string(A.rows()));
}

}  // namespace

CMatrix skew_symmetrize(const CMatrix& A, double tol) {
  check_shape(A);
  const double scale = A.size() ? A.cwiseAbs().maxCoeff() : 0.0;
  const double asym = A.size() ? (A + A.transpose()).cwiseAbs().maxCoeff() : 0.0;
  if (asym > tol * scale) throw ParameterError("matrix is not skew-symmetric");
  return 0.5 * (A - A.transpose());
}

LogPfaffian log_pfaffian(const CMatrix& A0) {
  check_shape(A0);
  const long n = A0.rows();
  if (n > 64) throw ShapeError("dimension above 64");
  CMatrix A = skew_symmetrize(A0);
  LogPfaffian out;
  for (long k = 0; k + 1 < n; k += 2) {
    long kp;
    A.col(k).tail(n - k - 1).cwiseAbs().maxCoeff(&kp);
    kp += k + 1;
    if (kp != k + 1) {
      A.row(k + 1).swap(A.row(kp));
      A.col(k + 1).swap(A.col(kp));
      out.phase = -out.phase;
    }
    const cplx piv = A(k, k + 1);
    if (piv == cplx(0)) {
      out.zero = true;
      return out;
    }
    out.log_abs += std::log(std::abs(piv));
    out.phase *= piv / std::abs(piv);
    if (k + 2 < n) {
      const long m = n - k - 2;
      Eigen::VectorXcd tau = A.row(k).tail(m).transpose() / piv;
      Eigen::VectorXcd v = A.col(k + 1).tail(m);
      A.bottomRightCorner(m, m) += tau * v.transpose() - v * tau.transpose();
    }
  }
  return out;
}

cplx pfaffian(const CMatrix& A) {
  const LogPfaffian lp = log_pfaffian(A);
  const cplx pf = lp.value();
  if (A.rows() == 0) return pf;
  // Hadamard's bound on |det| sets the scale of the comparison.
  double hadamard = 1;
  for (long j = 0; j < A.cols(); ++j) hadamard *= A.col(j).norm();
  const cplx det = A.determinant();
  if (std::abs(pf * pf - det) > 1e-8 * hadamard + std::numeric_limits<double>::min())
    throw std::runtime_error("Pf^2 and det disagree");
  return pf;
}

double pfaffian(const RMatrix& A) { return pfaffian(CMatrix(A.cast<cplx>())).real(); }

cplx pfaffian_recursive(const CMatrix& A) {
  check_shape(A);
  const long n = A.rows();
  if (n > 8) throw ShapeError("recursive expansion limited to dimension 8");
  if (n == 0) return 1;
  cplx sum = 0;
  for (long j = 1; j < n; ++j) {
    if (A(0, j) == cplx(0)) continue;
    CMatrix minor(n - 2, n - 2);
    std::vector<long> keep;
    for (long r = 1; r < n; ++r)
      if (r != j) keep.push_back(r);
    for (long r = 0; r < n - 2; ++r)
      for (long s = 0; s < n - 2; ++s) minor(r, s) = A(keep[r], keep[s]);
    sum += ((j % 2) ? 1.0 : -1.0) * A(0, j) * pfaffian_recursive(minor);
  }
  return sum;
}

CMatrix correlation_matrix(const std::vector<SpacePoint>& pts, const KernelFn& K, std::vector<double>* entry_err) {
  const long k = static_cast<long>(pts.size());
  CMatrix A = CMatrix::Zero(2 * k, 2 * k);
  if (entry_err) entry_err->assign(4 * k * k, 0.0);
  auto set_err = [&](long r, long s, double e) {
    if (!entry_err) return;
    (*entry_err)[r * 2 * k + s] = e;
    (*entry_err)[s * 2 * k + r] = e;
  };
  for (long i = 0; i < k; ++i)
    for (long j = i; j < k; ++j) {
      const KernelValue2x2 v = K(pts[i], pts[j]);
      const bool per_entry = v.entry_err != std::array<double, 4>{};
      auto err = [&](int e) { return per_entry ? v.entry_err[e] : v.err; };
      const long r = 2 * i, s = 2 * j;
      if (i == j) {
        A(r, r + 1) = v.k12;
        A(r + 1, r) = -v.k12;
        // The diagonal block is skew up to quadrature noise; its defect joins the error.
        set_err(r, r + 1, err(1) + 0.5 * std::abs(v.k12 + v.k21));
        continue;
      }
      const cplx b[2][2] = {{v.k11, v.k12}, {v.k21, v.k22}};
      for (int a = 0; a < 2; ++a)
        for (int c = 0; c < 2; ++c) {
          A(r + a, s + c) = b[a][c];
          A(s + c, r + a) = -b[a][c];
          set_err(r + a, s + c, err(2 * a + c));
        }
    }
  return A;
}

Correlation correlation_fn(const std::vector<SpacePoint>& pts, const KernelFn& K) {
  if (pts.empty()) return {1.0, 0.0};
  std::vector<double> e;
  const CMatrix A = correlation_matrix(pts, K, &e);
  const long n = A.rows();
  Correlation out;
  out.value = log_pfaffian(A).value().real();
  // dPf/da_rs = +-Pf of the matrix with rows and columns r, s removed.
  for (long r = 0; r < n; ++r)
    for (long s = r + 1; s < n; ++s) {
      const double ers = e[r * n + s];
      if (ers == 0) continue;
      double minor_pf = 1;
      if (n > 2) {
        CMatrix m(n - 2, n - 2);
        std::vector<long> keep;
        for (long t = 0; t < n; ++t)
          if (t != r && t != s) keep.push_back(t);
        for (long a = 0; a < n - 2; ++a)
          for (long b = 0; b < n - 2; ++b) m(a, b) = A(keep[a], keep[b]);
        minor_pf = std::abs(log_pfaffian(m).value());
      }
      out.err += minor_pf * ers;
    }
  return out;
}

KernelFn geo_kernel_fn(double q, double c, int N, double tol) {
  GeoKernelOptions opt;
  opt.tol = tol;
  return [=](const SpacePoint& u, const SpacePoint& v) {
    return kernel_geo(static_cast<int>(std::lround(u.slice)), std::lround(u.x), static_cast<int>(std::lround(v.slice)),
                      std::lround(v.x), q, c, N, opt);
  };
}

KernelFn bulk_kernel_fn(const BulkKernelN& K) {
  return [&K](const SpacePoint& u, const SpacePoint& v) { return K.at(u.slice, u.x, v.slice, v.x); };
}

KernelFn edge_kernel_fn(const EdgeKernelN& K) {
  return [&K](const SpacePoint& u, const SpacePoint& v) { return K.at(u.slice, u.x, v.slice, v.x); };
}

long LatticeSlice::first_at_or_above(double x) const {
  return static_cast<long>(std::ceil((x - b) / a - 1e-9));
}

std::optional<long> LatticeSlice::index_of(double x, double rel_tol) const {
  const double u = (x - b) / a;
  const long n = std::lround(u);
  if (std::abs(u - double(n)) > rel_tol) return std::nullopt;
  return n;
}

LatticeSlice LatticeSlice::raw(int t) { return {double(t), t, 1.0, 0.0}; }

LatticeSlice LatticeSlice::bulk(const BulkKernelN& K, double s) {
  // x_of is affine in the lattice coordinate.
  const double b = K.x_of(s, 0);
  return {s, K.T(s), K.x_of(s, 1) - b, b};
}

LatticeSlice LatticeSlice::edge(const EdgeKernelN& K, double kappa) {
  const double b = K.x_of(kappa, 0);
  return {kappa, K.M(kappa), K.x_of(kappa, 1) - b, b};
}

PointEstimate jackknife_mean(const std::vector<double>& v) {
  const long n = static_cast<long>(v.size());
  if (n < 2) throw InputError("jackknife needs at least two samples");
  // Deviations from the first value keep identical samples exact.
  double dsum = 0;
  for (double x : v) dsum += x - v[0];
  const double dmean = dsum / n;
  // Leave-one-out means differ from the mean by (mean - x_i)/(n-1).
  double ss = 0;
  for (double x : v) {
    const double d = (dmean - (x - v[0])) / (n - 1);
    ss += d * d;
  }
  const double mean = v[0] + dmean;
  return {mean, std::sqrt(ss * (n - 1) / n)};
}

namespace {

void check_archive(const std::vector<DiscreteLineEnsemble>& samples, const std::vector<LatticeSlice>& slices) {
  if (samples.empty()) throw InputError("empty sample archive");
  if (samples.size() < 2) throw InputError("need at least two samples");
  for (const auto& sl : slices) {
    if (!(sl.a > 0)) throw ParameterError("lattice spacing must be positive");
    for (const auto& e : samples)
      if (sl.t < 0 || sl.t > e.M) throw BoundsError("slice time outside the sample horizon");
  }
}

// Particle coordinates lambda_i - i at time t, decreasing in i.
template <class F>
void for_each_particle(const DiscreteLineEnsemble& e, int t, F&& f) {
  for (int i = 1; i <= e.N; ++i) f(e.value(i, t) - i);
}

}  // namespace

PointStats empirical_point_stats(const std::vector<DiscreteLineEnsemble>& samples, const std::vector<LatticeSlice>& slices,
                                 const std::vector<Window>& windows, const std::vector<PairQuery>& pairs) {
  check_archive(samples, slices);
  const std::size_t n = samples.size();
  PointStats out;
  out.samples = static_cast<long>(n);
  for (std::size_t si = 0; si < slices.size(); ++si) {
    const LatticeSlice& sl = slices[si];
    for (std::size_t wi = 0; wi < windows.size(); ++wi) {
      WindowStats ws;
      ws.slice = si;
      ws.window = wi;
      ws.n_lo = sl.first_at_or_above(windows[wi].lo);
      ws.n_hi = std::max(ws.n_lo, sl.first_at_or_above(windows[wi].hi));
      const long width = ws.n_hi - ws.n_lo;
      std::vector<double> counts(n, 0.0);
      std::vector<std::vector<double>> occ(width, std::vector<double>(n, 0.0));
      for (std::size_t s = 0; s < n; ++s)
        for_each_particle(samples[s], sl.t, [&](long p) {
          if (p >= ws.n_lo && p < ws.n_hi) {
            counts[s] += 1;
            occ[p - ws.n_lo][s] = 1;
          }
        });
      ws.count = jackknife_mean(counts);
      for (const auto& o : occ) ws.density.push_back(jackknife_mean(o));
      out.windows.push_back(std::move(ws));
    }
  }
  for (const PairQuery& pq : pairs) {
    if (pq.slice1 >= slices.size() || pq.slice2 >= slices.size()) throw BoundsError("pair refers to an unknown slice");
    std::vector<double> both(n, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
      bool a = false, b = false;
      for_each_particle(samples[s], slices[pq.slice1].t, [&](long p) { a = a || p == pq.n1; });
      for_each_particle(samples[s], slices[pq.slice2].t, [&](long p) { b = b || p == pq.n2; });
      both[s] = (a && b) ? 1.0 : 0.0;
    }
    out.pairs.push_back(jackknife_mean(both));
  }
  return out;
}

std::vector<double> tail_counts(const std::vector<DiscreteLineEnsemble>& samples, const LatticeSlice& slice, double a) {
  check_archive(samples, {slice});
  const long start = slice.first_at_or_above(a);
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& e : samples) {
    double k = 0;
    for_each_particle(e, slice.t, [&](long p) { k += p >= start; });
    out.push_back(k);
  }
  return out;
}

std::optional<double> StatRow::z() const {
  if (!exact) return std::nullopt;
  if (se == 0) return estimate == *exact ? 0.0 : std::numeric_limits<double>::infinity();
  return (estimate - *exact) / se;
}

void write_stats_csv(std::ostream& os, const std::vector<StatRow>& rows) {
  std::ostringstream buf;
  buf << std::setprecision(12);
  buf << "slice,x,estimate,stderr,exact,z\n";
  for (const auto& r : rows) {
    buf << r.slice << ",\"" << r.x << "\"," << r.estimate << ',' << r.se << ',';
    if (r.exact) buf << *r.exact;
    buf << ',';
    if (auto z = r.z()) buf << *z;
    buf << '\n';
  }
  os << buf.str();
}

}  // namespace hslpp
