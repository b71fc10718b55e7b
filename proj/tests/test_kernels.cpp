#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <numbers>

#include "hslpp/kernels.hpp"
#include "hslpp/schur.hpp"

using namespace hslpp;
using std::numbers::pi;

namespace {

// One-point functions of every lambda^u by exhaustive enumeration of the Schur process.
std::vector<std::map<long, double>> enumerated_density(int N, int M, double q, double c, long max_size) {
  std::vector<std::map<long, double>> rho(M + 1);
  double mass = 0;
  enumerate_schur_support(N, M, q, c, max_size, [&](const std::vector<Partition>& l, double w) {
    mass += w;
    for (int u = 0; u <= M; ++u)
      for (int i = 1; i <= N; ++i) rho[u][part(l[u], i - 1) - i] += w;
  });
  for (auto& r : rho)
    for (auto& [x, v] : r) v /= mass;
  return rho;
}

}  // namespace

TEST_CASE("exact kernel one-point function against Monte Carlo") {
  const int N = 3, M = 2, samples = 100000;
  const double q = 0.4, c = 0.7;
  ModelParams p{q, c};
  Rng rng(20240611);
  std::map<long, long> hits;
  for (int k = 0; k < samples; ++k) {
    SchurSequence s = sample_schur_process(N, M, p, rng);
    for (int i = 1; i <= N; ++i) ++hits[part(s.lambdas[M], i - 1) - i];
  }
  for (long x = -3; x <= 6; ++x) {
    const double rho = kernel_geo(M, x, M, x, q, c, N).k12.real();
    const double emp = double(hits[x]) / samples;
    const double sd = std::sqrt(rho * (1 - rho) / samples);
    CAPTURE(x);
    CHECK(std::abs(emp - rho) < 3 * sd + 1e-12);
  }
}

TEST_CASE("exact kernel one-point function against enumeration") {
  const int N = 3, M = 2;
  const double q = 0.4, c = 0.7;
  auto rho = enumerated_density(N, M, q, c, 36);
  for (int u = 0; u <= M; ++u)
    for (long x = -3; x <= 6; ++x)
      CHECK(kernel_geo(u, x, u, x, q, c, N).k12.real() == doctest::Approx(rho[u][x]).epsilon(1e-8));
  // Boundary parameter above one.
  auto big = enumerated_density(2, 1, 0.3, 1.8, 40);
  for (long x = -2; x <= 5; ++x)
    CHECK(kernel_geo(1, x, 1, x, 0.3, 1.8, 2).k12.real() == doctest::Approx(big[1][x]).epsilon(1e-8));
}

TEST_CASE("exact kernel: the particles at or above -N number exactly N") {
  GeoKernelOptions o;
  o.k12_only = true;
  for (double c : {0.0, 0.7, 1.3}) {
    const int N = 3, M = 2;
    double sum = 0;
    int quiet = 0;
    for (long x = -N; quiet < 3; ++x) {
      const double r = kernel_geo(M, x, M, x, 0.4, c, N, o).k12.real();
      sum += r;
      quiet = std::abs(r) < 1e-12 ? quiet + 1 : 0;
    }
    CHECK(sum == doctest::Approx(N).epsilon(1e-9));
  }
}

TEST_CASE("exact kernel antisymmetry and contour independence") {
  const double q = 0.4, c = 0.7;
  const int N = 3;
  KernelValue2x2 a = kernel_geo(1, 2, 2, -1, q, c, N), b = kernel_geo(2, -1, 1, 2, q, c, N);
  CHECK(std::abs(a.k11 + b.k11) < 1e-12);
  CHECK(std::abs(a.k22 + b.k22) < 1e-12);
  CHECK(std::abs(a.k21 + b.k12) < 1e-12);
  CHECK(std::abs(kernel_geo(1, 3, 1, 3, q, c, N).k11) < 1e-12);

  for (double cc : {0.7, 1.5})
    for (auto [u, x, v, y] : {std::tuple{2, 1, 1, 0}, {0, -1, 2, 3}, {1, 2, 1, 2}}) {
      KernelValue2x2 base = kernel_geo(u, x, v, y, q, cc, N);
      for (double scale : {0.8, 1.2}) {
        GeoKernelOptions o;
        o.radius_scale = scale;
        KernelValue2x2 moved = kernel_geo(u, x, v, y, q, cc, N, o);
        CHECK(std::abs(moved.k11 - base.k11) < 1e-8);
        CHECK(std::abs(moved.k12 - base.k12) < 1e-8);
        CHECK(std::abs(moved.k21 - base.k21) < 1e-8);
        CHECK(std::abs(moved.k22 - base.k22) < 1e-8);
      }
    }
}

TEST_CASE("exact kernel rejects c at or above 1/q") {
  CHECK_THROWS_AS(kernel_geo(0, 0, 0, 0, 0.5, 2.0, 3), ContourPlacementError);
}

TEST_CASE("bulk prelimit kernel equals the conjugated exact kernel") {
  for (double c : {0.3, 0.8, 1.4})
    for (int N : {8, 30}) {
      BulkKernelN K(0.5, c, N);
      for (auto [s, x, t, y] : {std::tuple{0.3, 0.2, 0.6, -0.4}, {0.6, -0.4, 0.3, 0.2}, {0.5, 0.1, 0.5, 0.1}}) {
        const long xs = K.snap(s, x), yt = K.snap(t, y);
        KernelValue2x2 a = K.at_lattice(s, xs, t, yt), g = K.from_geo(s, xs, t, yt);
        const double tol = 1e-8 + a.err + g.err;
        CAPTURE(c);
        CAPTURE(N);
        CHECK(std::abs(a.k11 - g.k11) < tol);
        CHECK(std::abs(a.k12 - g.k12) < tol);
        CHECK(std::abs(a.k21 - g.k21) < tol);
        CHECK(std::abs(a.k22 - g.k22) < tol);
      }
    }
}

TEST_CASE("bulk prelimit kernel structure") {
  BulkKernelN K(0.5, 0.8, 40);
  KernelValue2x2 a = K.at(0.4, 0.3, 0.7, -0.2), b = K.at(0.7, -0.2, 0.4, 0.3);
  CHECK(a.k21 == b.k12 * -1.0);
  CHECK(std::abs(a.k22 + b.k22) < 1e-9);
  // Equal points with c < 1: no residue part, and the antisymmetric entries vanish.
  KernelValue2x2 d = K.at(0.5, 0.1, 0.5, 0.1);
  CHECK(std::abs(d.k11) < 1e-10);
  CHECK(std::abs(d.k22) < 1e-10);
  CHECK_THROWS_AS(BulkKernelN(0.5, 0.8, 8, 1e-10, ContourPolicy::strict), ContourPlacementError);
  CHECK_THROWS_AS(BulkKernelN(0.5, 1.0, 50), ParameterError);
}

TEST_CASE("bulk prelimit kernel approaches the limit kernel") {
  const double q = 0.5, c = 0.8;
  ScalingConstantsBulk k(q);
  BulkLimitKernel L{k.f1, k.sigma1};
  auto scaled_err = [&](int N, double s, double x, double t, double y) {
    BulkKernelN K(q, c, N);
    const long xs = K.snap(s, x), yt = K.snap(t, y);
    KernelValue2x2 v = K.at_lattice(s, xs, t, yt);
    KernelValue2x2 lim = L(s, K.x_of(s, xs), t, K.x_of(t, yt));
    const double scale = (1 - c) * (1 - c) * k.sigma1 * k.sigma1 * std::pow(N, 2.0 / 3.0);
    return std::array<double, 3>{std::abs(v.k11 / scale - lim.k11), std::abs(v.k12 - lim.k12),
                                 std::abs(v.k22 * scale - lim.k22)};
  };
  // On the diagonal the first entry vanishes identically, for every N.
  for (int N : {50, 200, 800}) CHECK(scaled_err(N, 1, 0, 1, 0)[0] < 1e-12);
  std::array<double, 3> prev{1e9, 1e9, 1e9};
  for (int N : {50, 200, 800}) {
    auto e = scaled_err(N, 1, 0, 1.5, 0.5);
    CAPTURE(N);
    for (int i = 0; i < 3; ++i) CHECK(e[i] < prev[i]);
    prev = e;
  }
  CHECK(prev[1] < 0.7 * scaled_err(50, 1, 0, 1.5, 0.5)[1]);
}

TEST_CASE("edge prelimit kernel equals the conjugated exact kernel") {
  for (int N : {16, 50}) {
    EdgeKernelN E(0.5, 1.4, N);
    for (auto [s, x, t, y] : {std::tuple{0.5, 0.2, 1.0, -0.4}, {1.0, -0.4, 0.5, 0.2}, {1.0, 0.1, 1.0, 0.3}}) {
      const long xs = E.snap(s, x), yt = E.snap(t, y);
      KernelValue2x2 a = E.at_lattice(s, xs, t, yt), g = E.from_geo(s, xs, t, yt);
      const double tol = 1e-8 + a.err + g.err;
      CHECK(std::abs(a.k11 - g.k11) < tol);
      CHECK(std::abs(a.k12 - g.k12) < tol);
      CHECK(std::abs(a.k21 - g.k21) < tol);
      CHECK(std::abs(a.k22 - g.k22) < tol);
    }
  }
}

TEST_CASE("edge prelimit kernel approaches the Brownian kernel") {
  const double q = 0.5, c = 1.4;
  ScalingConstantsEdge k(q, c);
  double prev = 1e9, prev11 = 1e9, prev22 = 1e9;
  for (int N : {100, 400, 1600}) {
    EdgeKernelN E(q, c, N);
    const long xs = E.snap(0, 0), yt = E.snap(1, 0.5);
    KernelValue2x2 v = E.at_lattice(0, xs, 1, yt);
    const double e = std::abs(v.k12 - kernel_BM(k.kappa_bar, E.x_of(0, xs), k.kappa_bar - 1, E.x_of(1, yt)));
    CAPTURE(N);
    CHECK(e < prev);
    CHECK(std::abs(v.k11) < prev11);
    CHECK(std::abs(v.k22) < prev22);
    prev = e;
    prev11 = std::abs(v.k11);
    prev22 = std::abs(v.k22);
  }
  CHECK(prev < 0.01);
  CHECK(prev11 < 1e-8);
  CHECK(prev22 < 1e-8);
}

TEST_CASE("edge feasibility predicate") {
  EdgeKernelN E(0.5, 1.4, 50);
  CHECK(E.feasible(0.5));
  CHECK_FALSE(E.feasible(E.k.kappa_bar));
  CHECK_THROWS_AS(EdgeKernelN(0.5, 1.9, 10), ContourPlacementError);
  CHECK_THROWS_AS(EdgeKernelN(0.5, 1.4, 50, 0.2), ParameterError);
}

TEST_CASE("half-space limit kernel closed forms") {
  CHECK(hs_R12(0, 0, 1, 0) == doctest::Approx(-std::exp(1.0 / 12) / std::sqrt(4 * pi)).epsilon(1e-14));
  CHECK(hs_R12(1, 0.3, 1, 0.2) == 0.0);
  CHECK(hs_R12(2, 0.3, 1, 0.2) == 0.0);
  // y - t^2 - x + s^2 = 0
  CHECK(hs_R22(0.5, 0.25, 1, 1) == 0.0);
  KernelValue2x2 a = kernel_hs_inf(0.4, 0.3, 0.9, -0.2), b = kernel_hs_inf(0.9, -0.2, 0.4, 0.3);
  CHECK(std::abs(a.k11 + b.k11) < 1e-10);
  CHECK(std::abs(a.k22 + b.k22) < 1e-10);
  CHECK(std::abs(a.k12 + b.k21) < 1e-10);
}

TEST_CASE("bulk limit kernel: residue forms and the half-space identification") {
  ScalingConstantsBulk k(0.5);
  BulkLimitKernel L{k.f1, k.sigma1};
  CHECK(L(1.2, 0.3, 0.5, 0.1).k12 == L(1.2, 0.3, 0.5, 0.1).k12);
  for (auto [s, x, t, y] : {std::tuple{1.0, 0.0, 1.0, 0.0}, {0.5, 0.3, 1.2, -0.4}, {0.7, -1.0, 0.2, 0.6}})
    CHECK(std::abs(L.R22_contour(s, x, t, y) - L.R22_closed(s, x, t, y)) < 1e-8);

  Rng rng(77);
  for (int i = 0; i < 5; ++i) {
    const double s = 0.2 + 1.5 * uniform01(rng), t = 0.2 + 1.5 * uniform01(rng);
    const double x = -1 + 2 * uniform01(rng), y = -1 + 2 * uniform01(rng);
    KernelValue2x2 a = L(s, x, t, y), b = L.via_half_space(s, x, t, y);
    const double tol = 10 * (a.err + b.err) + 1e-10;
    CAPTURE(s);
    CAPTURE(t);
    CHECK(std::abs(a.k11 - b.k11) < tol);
    CHECK(std::abs(a.k12 - b.k12) < tol);
    CHECK(std::abs(a.k21 - b.k21) < tol);
    CHECK(std::abs(a.k22 - b.k22) < tol);
  }
}

TEST_CASE("Brownian kernel") {
  CHECK(kernel_BM(1, 0, 1, 0).real() == doctest::Approx(1 / std::sqrt(2 * pi)));
  CHECK(kernel_BM(1 / (2 * pi), 0, 2, 0.3).real() == doctest::Approx(1.0));
  CHECK(kernel_BM(0.5, 0.2, 0.7, 0.1) == kernel_BM(0.5, 0.2, 0.9, -3.0));
  const double two = kernel_BM(2, 0.4, 1, 0.1).real();
  CHECK(two == doctest::Approx(std::exp(-0.04) / std::sqrt(4 * pi) - std::exp(-0.045) / std::sqrt(2 * pi)));
  CHECK_THROWS_AS(kernel_BM(0, 0, 1, 0), ParameterError);
}

TEST_CASE("tail moment matches the direct lattice sum") {
  for (auto [reg, c, a] : {std::tuple{Regime::bulk, 0.8, 0.0}, {Regime::bulk, 1.4, 0.5}, {Regime::edge, 1.4, 0.0},
                           {Regime::edge, 1.4, 1.5}}) {
    TailMoment m = expected_count_tail(reg, 0.5, c, 50, 0.5, a);
    const double d = expected_count_direct(reg, 0.5, c, 50, 0.5, a);
    CHECK(m.total == doctest::Approx(d).epsilon(1e-6));
  }
}

TEST_CASE("tail moment limits") {
  ScalingConstantsEdge k(0.5, 1.4);
  const double kap = 0.5;
  double prev = 1e9;
  for (int N : {100, 400, 1600, 6400}) {
    const double a = (k.h1(kap) - k.h2(kap)) * std::sqrt(N) / k.sigma2 + 1;
    TailMoment m = expected_count_tail(Regime::edge, 0.5, 1.4, N, kap, a);
    CHECK(std::abs(m.total - 1) < prev);
    prev = std::abs(m.total - 1);
  }
  CHECK(prev < 1e-4);
  double last_edge = 1, last_bulk = 1;
  for (double a : {1.0, 3.0, 6.0, 10.0}) {
    const double e = expected_count_tail(Regime::edge, 0.5, 1.4, 400, 0.5, a).total;
    const double b = expected_count_tail(Regime::bulk, 0.5, 0.8, 400, 0.5, a).total;
    CHECK(e < last_edge);
    CHECK(b < last_bulk);
    last_edge = e;
    last_bulk = b;
  }
  CHECK(last_edge < 1e-3);
  CHECK(last_bulk < 1e-15);
}

TEST_CASE("halving the tolerance stays within the reported error") {
  BulkKernelN A(0.5, 0.8, 100, 1e-8), B(0.5, 0.8, 100, 5e-9);
  KernelValue2x2 a = A.at(0.5, 0.2, 0.9, -0.3), b = B.at(0.5, 0.2, 0.9, -0.3);
  CHECK(std::abs(a.k11 - b.k11) <= a.err);
  CHECK(std::abs(a.k12 - b.k12) <= a.err);
  CHECK(std::abs(a.k22 - b.k22) <= a.err);
  EdgeKernelN E(0.5, 1.4, 100, 5 * pi / 16, 0, 1e-8), F(0.5, 1.4, 100, 5 * pi / 16, 0, 5e-9);
  KernelValue2x2 e = E.at(0.3, 0.1, 0.6, 0.4), f = F.at(0.3, 0.1, 0.6, 0.4);
  CHECK(std::abs(e.k12 - f.k12) <= e.err);
  CHECK(std::abs(e.k22 - f.k22) <= e.err);
  KernelValue2x2 g = kernel_geo(1, 1, 2, 0, 0.4, 0.7, 3, {1e-10, 1.0}), h = kernel_geo(1, 1, 2, 0, 0.4, 0.7, 3, {5e-11, 1.0});
  CHECK(std::abs(g.k12 - h.k12) <= g.err);
}
