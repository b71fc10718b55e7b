#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "hslpp/pfaffian.hpp"
#include "hslpp/schur.hpp"

using namespace hslpp;

namespace {

CMatrix random_skew(long n, Rng& rng, bool complex_entries) {
  CMatrix A = CMatrix::Zero(n, n);
  for (long i = 0; i < n; ++i)
    for (long j = i + 1; j < n; ++j) {
      A(i, j) = cplx(normal(rng), complex_entries ? normal(rng) : 0.0);
      A(j, i) = -A(i, j);
    }
  return A;
}

CMatrix block2(cplx a) {
  CMatrix A(2, 2);
  A << 0, a, -a, 0;
  return A;
}

double rel(cplx a, cplx b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_CASE("small Pfaffians") {
  CHECK(pfaffian(block2(3.5)).real() == doctest::Approx(3.5));
  CMatrix D = CMatrix::Zero(4, 4);
  D.topLeftCorner(2, 2) = block2(2.0);
  D.bottomRightCorner(2, 2) = block2(-7.0);
  CHECK(pfaffian(D).real() == doctest::Approx(-14.0));
  CHECK(pfaffian(CMatrix(0, 0)) == cplx(1));
  // Pf of [[0,a,b,c],[.,0,d,e],[.,.,0,f]] is af - be + cd.
  CMatrix A = CMatrix::Zero(4, 4);
  const double a = 1, b = 2, c = 3, d = 4, e = 5, f = 6;
  A(0, 1) = a, A(0, 2) = b, A(0, 3) = c, A(1, 2) = d, A(1, 3) = e, A(2, 3) = f;
  A -= CMatrix(A.transpose());
  CHECK(pfaffian(A).real() == doctest::Approx(a * f - b * e + c * d));
  CHECK(pfaffian_recursive(A).real() == doctest::Approx(a * f - b * e + c * d));
}

TEST_CASE("shape and symmetry errors") {
  CHECK_THROWS_AS(pfaffian(CMatrix(CMatrix::Zero(3, 3))), ShapeError);
  CHECK_THROWS_AS(pfaffian(CMatrix(CMatrix::Zero(2, 4))), ShapeError);
  CHECK_THROWS_AS(pfaffian_recursive(CMatrix::Zero(10, 10)), ShapeError);
  CMatrix A = block2(1.0);
  A(1, 0) = 0.5;
  CHECK_THROWS_AS(pfaffian(A), ParameterError);
  // Asymmetry below tolerance is symmetrized away.
  A(1, 0) = -1.0 - 1e-13;
  CHECK(pfaffian(A).real() == doctest::Approx(1.0));
}

TEST_CASE("random 6x6: Pf squared equals det") {
  Rng rng(6);
  for (int rep = 0; rep < 20; ++rep) {
    CMatrix A = random_skew(6, rng, rep % 2);
    const cplx pf = pfaffian(A);
    CHECK(rel(pf * pf, A.determinant()) < 1e-9);
  }
}

TEST_CASE("Pf squared equals det on 200 random matrices") {
  Rng rng(200);
  double worst = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const long n = 2 * (1 + rep % 8);
    CMatrix A = random_skew(n, rng, rep % 3 == 0);
    const cplx pf = log_pfaffian(A).value();
    worst = std::max(worst, rel(pf * pf, A.determinant()));
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("elimination agrees with the recursive expansion") {
  Rng rng(8);
  for (long n : {2, 4, 6, 8})
    for (int rep = 0; rep < 10; ++rep) {
      CMatrix A = random_skew(n, rng, rep % 2);
      CHECK(rel(pfaffian(A), pfaffian_recursive(A)) < 1e-11);
    }
}

TEST_CASE("congruence: Pf(B A B^T) = det(B) Pf(A)") {
  Rng rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    const long n = 2 * (1 + rep % 6);
    CMatrix A = random_skew(n, rng, rep % 2);
    CMatrix B(n, n);
    for (long i = 0; i < n; ++i)
      for (long j = 0; j < n; ++j) B(i, j) = cplx(normal(rng), rep % 2 ? normal(rng) : 0.0);
    const CMatrix C = B * A * B.transpose();
    CHECK(rel(pfaffian(C), B.determinant() * pfaffian(A)) < 1e-7);
  }
}

TEST_CASE("log-magnitude tracking past the double range") {
  CMatrix A = CMatrix::Zero(64, 64);
  for (long k = 0; k < 32; ++k) A.block(2 * k, 2 * k, 2, 2) = block2(k % 2 ? -1e100 : 1e100);
  const LogPfaffian lp = log_pfaffian(A);
  CHECK_FALSE(lp.zero);
  CHECK(lp.log_abs == doctest::Approx(32 * 100 * std::log(10.0)));
  CHECK(std::abs(lp.phase - cplx(1)) < 1e-12);  // sixteen negative pivots
  CHECK_THROWS_AS(log_pfaffian(CMatrix::Zero(66, 66)), ShapeError);
  CHECK(log_pfaffian(CMatrix::Zero(4, 4)).zero);
}

TEST_CASE("correlation functions from a 2x2 kernel") {
  const double q = 0.4, c = 0.7;
  const int N = 3;
  KernelFn K = geo_kernel_fn(q, c, N);
  for (long x = -3; x <= 4; ++x) {
    const Correlation r1 = correlation_fn({{2, double(x)}}, K);
    CHECK(r1.value == doctest::Approx(K({2, double(x)}, {2, double(x)}).k12.real()).epsilon(1e-12));
    CHECK(r1.value >= -r1.err);
  }
  const Correlation dup = correlation_fn({{2, 0}, {2, 0}}, K);
  CHECK(std::abs(dup.value) < 1e-10);
  CHECK(correlation_fn({}, K).value == 1.0);
}

TEST_CASE("two-point function against enumeration and Monte Carlo") {
  const int N = 3, M = 2;
  const double q = 0.4, c = 0.7;
  KernelFn K = geo_kernel_fn(q, c, N);
  struct Pair {
    int u;
    long x;
    int v;
    long y;
  };
  const std::vector<Pair> pairs = {{2, -1, 2, 0}, {2, -2, 2, 1}, {1, -1, 2, 1}, {0, -1, 2, 0}};

  auto has = [](const Partition& l, long x, int n) {
    for (int i = 1; i <= n; ++i)
      if (part(l, i - 1) - i == x) return true;
    return false;
  };
  std::vector<double> exact(pairs.size(), 0.0);
  double mass = 0;
  enumerate_schur_support(N, M, q, c, 36, [&](const std::vector<Partition>& l, double w) {
    mass += w;
    for (std::size_t k = 0; k < pairs.size(); ++k)
      if (has(l[pairs[k].u], pairs[k].x, N) && has(l[pairs[k].v], pairs[k].y, N)) exact[k] += w;
  });

  Rng rng(4242);
  const long samples = 100000;
  std::vector<long> hits(pairs.size(), 0);
  for (long s = 0; s < samples; ++s) {
    SchurSequence seq = sample_schur_process(N, M, ModelParams{q, c}, rng);
    for (std::size_t k = 0; k < pairs.size(); ++k)
      hits[k] += has(seq.lambdas[pairs[k].u], pairs[k].x, N) && has(seq.lambdas[pairs[k].v], pairs[k].y, N);
  }
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto& p = pairs[k];
    const Correlation r2 = correlation_fn({{double(p.u), double(p.x)}, {double(p.v), double(p.y)}}, K);
    CAPTURE(k);
    CHECK(r2.value == doctest::Approx(exact[k] / mass).epsilon(1e-8));
    const double emp = double(hits[k]) / samples;
    const double sd = std::sqrt(r2.value * (1 - r2.value) / samples);
    CHECK(std::abs(emp - r2.value) < 3 * sd);
  }
}

TEST_CASE("prelimit kernels give nonnegative densities") {
  BulkKernelN B(0.5, 0.8, 50);
  EdgeKernelN E(0.5, 1.4, 100);
  for (double x : {-1.0, 0.0, 0.7, 2.0}) {
    const Correlation rb = correlation_fn({{1.0, x}}, bulk_kernel_fn(B));
    CHECK(rb.value >= -rb.err);
    const Correlation re = correlation_fn({{1.0, x}}, edge_kernel_fn(E));
    CHECK(re.value >= -re.err);
  }
}

TEST_CASE("lattice slices convert scaled coordinates exactly") {
  BulkKernelN B(0.5, 0.8, 40);
  const LatticeSlice sl = LatticeSlice::bulk(B, 1.0);
  CHECK(sl.t == B.T(1.0));
  for (long n : {-40L, -3L, 0L, 17L}) {
    CHECK(sl.index_of(sl.point(n)) == n);
    CHECK(sl.first_at_or_above(sl.point(n)) == n);
    CHECK(sl.first_at_or_above(sl.point(n) + 0.5 * sl.a) == n + 1);
    CHECK_FALSE(sl.index_of(sl.point(n) + 0.3 * sl.a).has_value());
  }
  CHECK(B.ceil_index(1.0, 0.0) == sl.first_at_or_above(0.0));
}

namespace {

std::vector<DiscreteLineEnsemble> schur_samples(int N, int M, double q, double c, long n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<DiscreteLineEnsemble> out;
  for (long s = 0; s < n; ++s) out.push_back(as_line_ensemble(sample_schur_process(N, M, ModelParams{q, c}, rng)));
  return out;
}

}  // namespace

TEST_CASE("empirical statistics bookkeeping") {
  auto samples = schur_samples(3, 2, 0.4, 0.7, 2000, 5);
  std::vector<LatticeSlice> slices = {LatticeSlice::raw(0), LatticeSlice::raw(2)};
  std::vector<Window> windows = {{-2.5, 3.5}, {-10, 50}};
  PointStats st = empirical_point_stats(samples, slices, windows, {{1, 0, 1, 0}, {1, -1, 1, 0}});
  REQUIRE(st.windows.size() == 4);
  for (const auto& w : st.windows) {
    double sum = 0;
    for (const auto& d : w.density) sum += d.estimate;
    CHECK(sum == doctest::Approx(w.count.estimate).epsilon(1e-12));
    CHECK(w.n_hi - w.n_lo == static_cast<long>(w.density.size()));
  }
  // The wide window holds every particle.
  CHECK(st.windows[1].count.estimate == 3.0);
  CHECK(st.windows[1].count.se == 0.0);
  // A pair of a point with itself is the one-point density.
  const auto& w0 = st.windows[2];
  CHECK(st.pairs[0].estimate == doctest::Approx(w0.density[0 - w0.n_lo].estimate));

  std::vector<DiscreteLineEnsemble> same(10, samples.front());
  PointStats z = empirical_point_stats(same, slices, windows);
  for (const auto& w : z.windows) {
    CHECK(w.count.se == 0.0);
    for (const auto& d : w.density) CHECK(d.se == 0.0);
  }
  CHECK_THROWS_AS(empirical_point_stats({}, slices, windows), InputError);
  CHECK_THROWS_AS(empirical_point_stats({samples[0]}, slices, windows), InputError);
  CHECK_THROWS_AS(empirical_point_stats(samples, {LatticeSlice::raw(3)}, windows), BoundsError);
}

TEST_CASE("jackknife of a mean is the usual standard error") {
  std::vector<double> v = {1, 4, 2, 8, 5, 7};
  const PointEstimate e = jackknife_mean(v);
  double m = 0, ss = 0;
  for (double x : v) m += x;
  m /= v.size();
  for (double x : v) ss += (x - m) * (x - m);
  CHECK(e.estimate == doctest::Approx(m));
  CHECK(e.se == doctest::Approx(std::sqrt(ss / (v.size() - 1) / v.size())));
}

TEST_CASE("empirical tail count against the contour formula") {
  const int N = 40;
  const double q = 0.5, c = 0.8, s = 1.0, a = 0.0;
  BulkKernelN K(q, c, N);
  const TailMoment tm = expected_count_tail(Regime::bulk, q, c, N, s, a);
  auto samples = schur_samples(N, K.T(s), q, c, 20000, 40);
  const PointEstimate e = jackknife_mean(tail_counts(samples, LatticeSlice::bulk(K, s), a));
  CAPTURE(e.estimate);
  CAPTURE(tm.total);
  CHECK(std::abs(e.estimate - tm.total) < 3 * e.se + tm.err);
}

TEST_CASE("statistics table") {
  std::ostringstream os;
  write_stats_csv(os, {{1.0, "0.5", 0.25, 0.01, 0.27, }, {2.0, "[0,1)", 3.0, 0.0, std::nullopt}});
  CHECK(os.str() == "slice,x,estimate,stderr,exact,z\n1,\"0.5\",0.25,0.01,0.27,-2\n2,\"[0,1)\",3,0,,\n");
}
