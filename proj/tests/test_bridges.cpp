#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hslpp/bridges.hpp"
#include "hslpp/stats.hpp"

using namespace hslpp;

namespace {

// All configurations of a bridge spec by brute force over a value box.
std::vector<Paths> enumerate_bridges(const BridgeSpec& sp, long lo, long hi) {
  std::vector<Paths> out;
  Paths Q(sp.k(), std::vector<long>(sp.len() + 1));
  for (int i = 0; i < sp.k(); ++i) {
    Q[i][0] = sp.x[i];
    Q[i][sp.len()] = sp.y[i];
  }
  std::vector<std::pair<int, int>> sites;
  for (int i = 0; i < sp.k(); ++i)
    for (int s = 1; s < sp.len(); ++s) sites.push_back({i, s});
  auto rec = [&](auto&& self, std::size_t n) -> void {
    if (n == sites.size()) {
      if (satisfies(sp, Q)) out.push_back(Q);
      return;
    }
    for (long v = lo; v <= hi; ++v) {
      Q[sites[n].first][sites[n].second] = v;
      self(self, n + 1);
    }
  };
  rec(rec, 0);
  return out;
}

}  // namespace

TEST_CASE("heat-bath updates preserve interlacing") {
  BridgeSpec sp{0, 8, {6, 3, 1}, {12, 9, 4}, std::nullopt, std::vector<long>(9, 0)};
  Paths Q = maximal_state(sp);
  Rng rng(4);
  std::uniform_int_distribution<int> di(0, 2), ds(1, 7);
  for (int n = 0; n < 20000; ++n) {
    heat_bath_update(sp, Q, di(rng), ds(rng), uniform01(rng));
    std::string why;
    REQUIRE_MESSAGE(satisfies(sp, Q, &why), why);
  }
}

TEST_CASE("two-step single bridge is uniform on its two paths") {
  BridgeSpec sp{0, 2, {0}, {1}, std::nullopt, std::nullopt};
  CHECK(enumerate_bridges(sp, -2, 3).size() == 2);
  Rng rng(17);
  Paths Q = maximal_state(sp);
  std::vector<double> counts(2, 0);
  for (int n = 0; n < 100000; ++n) {
    heat_bath_update(sp, Q, 0, 1, uniform01(rng));
    counts[Q[0][1]] += 1;
  }
  CHECK(chi_square_test(counts, {0.5, 0.5}).p_value > 1e-3);
}

TEST_CASE("degenerate and infeasible specifications") {
  BridgeSpec frozen{0, 5, {3}, {3}, std::nullopt, std::nullopt};
  Rng rng(1);
  Paths Q = sample_interlacing_bridges_mcmc(frozen, 1000, rng);
  for (long v : Q[0]) CHECK(v == 3);
  BridgeSpec bad{0, 2, {0, 0}, {1, 3}, std::nullopt, std::nullopt};
  CHECK_THROWS_AS(maximal_state(bad), InfeasibleError);
  BridgeSpec floor_bad{0, 3, {0}, {1}, std::nullopt, std::vector<long>{0, 2, 2, 2}};
  CHECK_THROWS_AS(maximal_state(floor_bad), InfeasibleError);
}

TEST_CASE("stationary law is uniform on an enumerable two-curve space") {
  BridgeSpec sp{0, 4, {1, 0}, {4, 2}, std::nullopt, std::nullopt};
  auto states = enumerate_bridges(sp, 0, 4);
  REQUIRE(states.size() > 5);
  Rng rng(99);
  Paths Q = maximal_state(sp);
  std::vector<double> counts(states.size(), 0);
  for (long n = 0; n < 1000; ++n) heat_bath_update(sp, Q, n % 2, 1 + n % 3, uniform01(rng));
  std::uniform_int_distribution<int> di(0, 1), ds(1, 3);
  for (int n = 0; n < 60000; ++n) {
    for (int r = 0; r < 12; ++r) heat_bath_update(sp, Q, di(rng), ds(rng), uniform01(rng));
    auto it = std::find(states.begin(), states.end(), Q);
    REQUIRE(it != states.end());
    counts[it - states.begin()] += 1;
  }
  CHECK(chi_square_test(counts, std::vector<double>(states.size(), 1.0)).p_value > 1e-3);
}

TEST_CASE("monotone coupling invariants") {
  BridgeSpec top{0, 10, {8, 5, 2}, {15, 11, 7}, std::nullopt, std::nullopt};
  BridgeSpec bot{0, 10, {6, 5, 0}, {14, 9, 7}, std::nullopt, std::nullopt};
  Rng rng(5);
  CouplingReport rep = monotone_coupled_chains(top, bot, 3, 200000, rng);
  CHECK(rep.ordering_violations == 0);
  CHECK(rep.shift_violations == 0);
  // Identical data with M = 0: the chains coincide.
  CouplingReport same = monotone_coupled_chains(top, top, 0, 20000, rng, [](const CoupledTriple& st) {
    REQUIRE(st.top == st.bottom);
    REQUIRE(st.bottom == st.hat);
  });
  CHECK(same.ordering_violations == 0);
  CHECK_THROWS_AS(monotone_coupled_chains(top, bot, 1, 10, rng), std::domain_error);
}

TEST_CASE("interacting pair with one step: time-0 law") {
  const ModelParams p{0.5, 0.8};
  Rng rng(12);
  auto e = staircase_state(1, {1, 0}, std::nullopt, p);
  std::map<std::pair<long, long>, long> counts;
  const long n = 100000;
  for (long s = 0; s < 200; ++s) interacting_update(e, rng);
  for (long s = 0; s < n; ++s) {
    for (int r = 0; r < 4; ++r) interacting_update(e, rng);
    REQUIRE(satisfies(e));
    counts[{e.B[0][0], e.B[1][0]}]++;
  }
  std::map<std::pair<long, long>, double> law;
  double Z = 0;
  for (long x2 = -20; x2 <= 0; ++x2)
    for (long x1 = 0; x1 <= 1; ++x1) Z += law[{x1, x2}] = std::pow(p.c, x1 - x2) * std::pow(p.q, 1 - x1 - x2);
  for (auto& [k, v] : law) v /= Z;
  CHECK(tv_distance(law, counts) < 0.02);
}

TEST_CASE("c = 0 pins the two curves together at time 0") {
  Rng rng(6);
  auto e = sample_interacting_ensemble_mcmc(4, {5, 3}, std::nullopt, ModelParams{0.5, 0.0}, 5000, rng);
  for (int s = 0; s < 2000; ++s) {
    interacting_update(e, rng);
    REQUIRE(satisfies(e));
    REQUIRE(e.B[0][0] == e.B[1][0]);
  }
}

TEST_CASE("weighted chain with a floor matches enumeration") {
  for (double c : {0.0, 0.6, 1.4}) {
    const ModelParams p{0.5, c};
    std::vector<long> g{0, 0, 1};
    auto law = enumerate_interacting_law(2, {3, 2}, g, p);
    Rng rng(77);
    auto e = sample_interacting_ensemble_mcmc(2, {3, 2}, g, p, 2000, rng);
    std::vector<std::vector<long>> keys;
    std::vector<double> probs;
    for (auto& [k, v] : law) {
      keys.push_back(k);
      probs.push_back(v);
    }
    std::vector<double> counts(keys.size(), 0);
    for (int s = 0; s < 40000; ++s) {
      for (int r = 0; r < 8; ++r) interacting_update(e, rng);
      std::vector<long> key{e.B[0][0], e.B[0][1], e.B[1][0], e.B[1][1]};
      auto it = std::find(keys.begin(), keys.end(), key);
      REQUIRE(it != keys.end());
      counts[it - keys.begin()] += 1;
    }
    CHECK_MESSAGE(chi_square_test(counts, probs).p_value > 1e-3, "c = " << c);
  }
}

TEST_CASE("Gibbs property of the Schur process on a one-step window") {
  Rng rng(31);
  GibbsReport rep = gibbs_consistency_check(2, 1, ModelParams{0.4, 0.7}, 1, 1, 200000, 20000, rng);
  REQUIRE(!rep.classes.empty());
  for (auto& c : rep.classes) CHECK(c.tv < 0.05);
  GibbsReport none = gibbs_consistency_check(2, 1, ModelParams{0.4, 0.7}, 1, 1, 10, 1000000, rng);
  CHECK(none.classes.empty());
  CHECK(!none.warnings.empty());
}
