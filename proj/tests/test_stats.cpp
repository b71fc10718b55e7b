#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hslpp/rng.hpp"
#include "hslpp/stats.hpp"

using namespace hslpp;

TEST_CASE("chi-square statistic by hand") {
  // Expected counts 50, 30, 20 against observed 55, 25, 20.
  ChiSquare r = chi_square_test({55, 25, 20}, {0.5, 0.3, 0.2});
  CHECK(r.statistic == doctest::Approx(25.0 / 50 + 25.0 / 30));
  CHECK(r.dof == 2);
  CHECK(r.p_value == doctest::Approx(std::exp(-r.statistic / 2)));  // two degrees of freedom
  // Probabilities need not be normalised; small bins are pooled.
  ChiSquare pooled = chi_square_test({10, 1, 1, 8}, {10, 1, 1, 8});
  CHECK(pooled.statistic == doctest::Approx(0.0));
  CHECK_THROWS(chi_square_test({1, 2}, {1.0}));
}

TEST_CASE("chi-square p-values are roughly uniform under the null") {
  Rng rng(3);
  int small = 0;
  for (int rep = 0; rep < 400; ++rep) {
    std::vector<double> obs(6, 0.0);
    for (int k = 0; k < 600; ++k) obs[static_cast<int>(uniform01(rng) * 6)] += 1;
    small += chi_square_test(obs, std::vector<double>(6, 1.0 / 6)).p_value < 0.05;
  }
  CHECK(small > 5);
  CHECK(small < 40);
}

TEST_CASE("total variation distance") {
  std::map<int, double> p = {{0, 0.5}, {1, 0.5}};
  CHECK(tv_distance(p, std::map<int, long>{{0, 5}, {1, 5}}) == doctest::Approx(0.0));
  CHECK(tv_distance(p, std::map<int, long>{{0, 10}}) == doctest::Approx(0.5));
  CHECK(tv_distance(p, std::map<int, long>{{2, 4}}) == doctest::Approx(1.0));
}

TEST_CASE("moments of standard normals") {
  Rng rng(5);
  std::vector<double> xs(100000);
  for (auto& x : xs) x = normal(rng);
  Moments m = moments(xs);
  CHECK(std::abs(m.mean) < 3 * m.mean_se);
  CHECK(std::abs(m.var - 1) < 3 * m.var_se);
  // Var of the sample variance is about 2/n for Gaussian data.
  CHECK(m.var_se == doctest::Approx(std::sqrt(2.0 / xs.size())).epsilon(0.05));
  CHECK_THROWS(moments({1.0}));
}

TEST_CASE("Kolmogorov-Smirnov statistics") {
  CHECK(ks_statistic({0.5}, [](double x) { return x; }) == doctest::Approx(0.5));
  std::vector<double> grid;
  for (int i = 0; i < 100; ++i) grid.push_back((i + 0.5) / 100);
  CHECK(ks_statistic(grid, [](double x) { return x; }) == doctest::Approx(0.005));
  CHECK(ks_two_sample({1, 2, 3}, {1, 2, 3}) == 0.0);
  CHECK(ks_two_sample({1, 2}, {3, 4}) == doctest::Approx(1.0));
  CHECK(ks_two_sample({1, 3}, {2, 4}) == doctest::Approx(0.5));
}

TEST_CASE("Pearson correlation") {
  std::vector<double> a = {1, 2, 3, 4, 5};
  std::vector<double> b = {2, 4, 6, 8, 10};
  std::vector<double> c = {5, 4, 3, 2, 1};
  CHECK(pearson_correlation(a, b) == doctest::Approx(1.0));
  CHECK(pearson_correlation(a, c) == doctest::Approx(-1.0));
  Rng rng(9);
  std::vector<double> u(20000), v(20000);
  for (auto& x : u) x = normal(rng);
  for (auto& x : v) x = normal(rng);
  CHECK(std::abs(pearson_correlation(u, v)) < 4 / std::sqrt(20000.0));
}
