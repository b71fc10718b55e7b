#include "hslpp/bridges.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <numeric>

namespace hslpp {

namespace {

constexpr long POS_INF = LONG_MAX / 4;
constexpr long NEG_INF = LONG_MIN / 4;

void check_spec(const BridgeSpec& s) {
  if (s.T1 <= s.T0) throw std::domain_error("need T1 > T0");
  if (s.x.size() != s.y.size() || s.x.empty()) throw std::domain_error("entrance and exit data must have equal size k >= 1");
  const std::size_t L = static_cast<std::size_t>(s.len()) + 1;
  if ((s.f && s.f->size() != L) || (s.g && s.g->size() != L)) throw std::domain_error("boundary path has wrong length");
}

}  // namespace

// Q_0 = f, Q_{k+1} = g; missing boundaries are +/- infinity.
static long above(const BridgeSpec& sp, const Paths& Q, int i, int s) {
  if (i > 0) return Q[i - 1][s];
  return sp.f ? (*sp.f)[s] : POS_INF;
}
static long below(const BridgeSpec& sp, const Paths& Q, int i, int s) {
  if (i + 1 < sp.k()) return Q[i + 1][s];
  return sp.g ? (*sp.g)[s] : NEG_INF;
}

std::pair<long, long> site_interval(const BridgeSpec& sp, const Paths& Q, int i, int s) {
  const long C = std::max(below(sp, Q, i, s + 1), Q[i][s - 1]);
  const long D = std::min(above(sp, Q, i, s - 1), Q[i][s + 1]);
  return {C, D};
}

void heat_bath_update(const BridgeSpec& sp, Paths& Q, int i, int s, double U) {
  const auto [C, D] = site_interval(sp, Q, i, s);
  Q[i][s] = C + static_cast<long>(std::floor(U * static_cast<double>(D - C + 1)));
}

bool satisfies(const BridgeSpec& sp, const Paths& Q, std::string* why) {
  const int k = sp.k(), L = sp.len();
  auto fail = [&](const std::string& m) {
    if (why) *why = m;
    return false;
  };
  for (int i = 0; i < k; ++i) {
    if (Q[i][0] != sp.x[i] || Q[i][L] != sp.y[i]) return fail("boundary values altered");
    for (int s = 1; s <= L; ++s) {
      if (Q[i][s] < Q[i][s - 1]) return fail("path decreases");
      if (above(sp, Q, i, s - 1) < Q[i][s]) return fail("interlacing with the curve above fails");
      if (Q[i][s - 1] < below(sp, Q, i, s)) return fail("interlacing with the curve below fails");
    }
  }
  return true;
}

Paths maximal_state(const BridgeSpec& sp) {
  check_spec(sp);
  const int k = sp.k(), L = sp.len();
  Paths Q(k, std::vector<long>(L + 1, POS_INF));
  for (int i = 0; i < k; ++i) {
    Q[i][0] = sp.x[i];
    Q[i][L] = sp.y[i];
  }
  // Upper constraints on interior sites: Q_i(s) <= Q_i(s+1) and Q_i(s) <= Q_{i-1}(s-1).
  // One top-down, right-to-left sweep resolves both since dependencies point up and right.
  for (int i = 0; i < k; ++i)
    for (int s = L - 1; s >= 1; --s) Q[i][s] = std::min(Q[i][s + 1], above(sp, Q, i, s - 1));
  std::string why;
  if (!satisfies(sp, Q, &why)) throw InfeasibleError("empty bridge configuration space: " + why);
  return Q;
}

long default_burn_in(long sites) {
  if (sites <= 1) return 20;
  return static_cast<long>(20.0 * sites * std::log(static_cast<double>(sites)));
}

Paths sample_interlacing_bridges_mcmc(const BridgeSpec& sp, long steps, Rng& rng) {
  Paths Q = maximal_state(sp);
  const int k = sp.k(), L = sp.len();
  if (L < 2) return Q;
  std::uniform_int_distribution<int> di(0, k - 1), ds(1, L - 1);
  for (long n = 0; n < steps; ++n) {
    const int i = di(rng), s = ds(rng);
    heat_bath_update(sp, Q, i, s, uniform01(rng));
  }
  return Q;
}

CouplingReport monotone_coupled_chains(const BridgeSpec& top, const BridgeSpec& bottom, long M, long steps, Rng& rng,
                                       const std::function<void(const CoupledTriple&)>& observe) {
  check_spec(top);
  check_spec(bottom);
  if (top.T0 != bottom.T0 || top.T1 != bottom.T1 || top.k() != bottom.k())
    throw std::domain_error("coupled chains need a common grid");
  for (int i = 0; i < top.k(); ++i) {
    if (!(top.x[i] >= bottom.x[i] && bottom.x[i] >= top.x[i] - M && top.y[i] >= bottom.y[i] &&
          bottom.y[i] >= top.y[i] - M))
      throw std::domain_error("boundary data violate the coupling bound");
  }
  BridgeSpec hat = top;
  for (auto& v : hat.x) v -= M;
  for (auto& v : hat.y) v -= M;
  if (hat.f) for (auto& v : *hat.f) v -= M;
  if (hat.g) for (auto& v : *hat.g) v -= M;

  CouplingReport rep;
  CoupledTriple& st = rep.final_state;
  st.M = M;
  st.top = maximal_state(top);
  st.bottom = maximal_state(bottom);
  st.hat = maximal_state(hat);
  const int k = top.k(), L = top.len();
  auto verify = [&]() {
    for (int i = 0; i < k; ++i)
      for (int s = 0; s <= L; ++s) {
        if (!(st.top[i][s] >= st.bottom[i][s] && st.bottom[i][s] >= st.hat[i][s])) ++rep.ordering_violations;
        if (st.hat[i][s] != st.top[i][s] - M) ++rep.shift_violations;
      }
  };
  verify();
  if (L >= 2) {
    std::uniform_int_distribution<int> di(0, k - 1), ds(1, L - 1);
    for (long n = 0; n < steps; ++n) {
      const int i = di(rng), s = ds(rng);
      const double U = uniform01(rng);
      heat_bath_update(top, st.top, i, s, U);
      heat_bath_update(bottom, st.bottom, i, s, U);
      heat_bath_update(hat, st.hat, i, s, U);
      // Only column s of row i changed; check that site.
      if (!(st.top[i][s] >= st.bottom[i][s] && st.bottom[i][s] >= st.hat[i][s])) ++rep.ordering_violations;
      if (st.hat[i][s] != st.top[i][s] - M) ++rep.shift_violations;
      if (observe) observe(st);
    }
  }
  rep.steps = steps;
  verify();
  return rep;
}

// ---------------------------------------------------------------------------
// Weighted interacting ensemble

double log_interacting_weight(const InteractingEnsembleConfig& e) {
  double lw = 0;
  const int T = e.T1;
  for (int j = 0; j < e.k(); ++j) {
    const auto& B1 = e.B[2 * j];
    const auto& B2 = e.B[2 * j + 1];
    const long gap = B1[0] - B2[0];
    if (gap > 0) {
      if (e.c == 0) return -INFINITY;
      lw += gap * std::log(e.c);
    }
    lw += (B1[T] - B1[0] + B2[T] - B2[0]) * std::log(e.q);
  }
  return lw;
}

static BridgeSpec as_bridge_spec(const InteractingEnsembleConfig& e) {
  BridgeSpec sp;
  sp.T0 = 0;
  sp.T1 = e.T1;
  for (const auto& b : e.B) sp.x.push_back(b[0]);
  sp.y = e.y;
  sp.g = e.g;
  return sp;
}

bool satisfies(const InteractingEnsembleConfig& e, std::string* why) {
  if (static_cast<int>(e.B.size()) != 2 * e.k()) {
    if (why) *why = "wrong number of curves";
    return false;
  }
  return satisfies(as_bridge_spec(e), e.B, why);
}

InteractingEnsembleConfig staircase_state(int T1, const std::vector<long>& y, const std::optional<std::vector<long>>& g,
                                          const ModelParams& p) {
  p.validate();
  if (T1 < 1 || y.empty() || y.size() % 2) throw InfeasibleError("need T1 >= 1 and an even number of curves");
  for (std::size_t i = 1; i < y.size(); ++i)
    if (y[i] > y[i - 1]) throw InfeasibleError("exit data must be non-increasing");
  if (g) {
    if (static_cast<int>(g->size()) != T1 + 1) throw InfeasibleError("floor has wrong length");
    for (int t = 1; t <= T1; ++t)
      if ((*g)[t] < (*g)[t - 1]) throw InfeasibleError("floor must be increasing");
    if ((*g)[T1] > y.back()) throw InfeasibleError("floor ends above the lowest exit value");
  }
  InteractingEnsembleConfig e;
  e.T1 = T1;
  e.y = y;
  e.g = g;
  e.q = p.q;
  e.c = p.c;
  // Pair j sits at its lower exit value y_{2j} until the last step.
  for (std::size_t i = 0; i < y.size(); ++i) {
    std::vector<long> b(T1 + 1, y[i | 1]);
    b[T1] = y[i];
    e.B.push_back(std::move(b));
  }
  std::string why;
  if (!satisfies(e, &why)) throw InfeasibleError("staircase construction failed: " + why);
  return e;
}

namespace {

// K ~ Geom(beta) conditioned on K <= n_max (n_max < 0 means unbounded).
long truncated_geometric(Rng& rng, double beta, long n_max) {
  if (beta <= 0) return 0;
  const double u = uniform01(rng);
  if (n_max < 0) return static_cast<long>(std::floor(std::log(u) / std::log(beta)));
  const double tail = std::pow(beta, static_cast<double>(n_max + 1));
  const long K = static_cast<long>(std::floor(std::log1p(-u * (1 - tail)) / std::log(beta)));
  return std::clamp(K, 0L, n_max);
}

// v on [lo, hi] with mass proportional to rho^v; lo may be NEG_INF when rho > 1.
long sample_tilted(Rng& rng, double rho, long lo, long hi) {
  const long width = lo <= NEG_INF ? -1 : hi - lo;
  if (rho > 1) return hi - truncated_geometric(rng, 1 / rho, width);
  if (width < 0) throw InfeasibleError("unbounded site with non-summable weight");
  if (rho == 1) return lo + static_cast<long>(std::floor(uniform01(rng) * (width + 1)));
  return lo + truncated_geometric(rng, rho, width);
}

}  // namespace

void interacting_update(InteractingEnsembleConfig& e, Rng& rng) {
  const int n = 2 * e.k(), T = e.T1;
  BridgeSpec sp = as_bridge_spec(e);
  std::uniform_int_distribution<int> di(0, n - 1), dt(0, T - 1);
  const int i = di(rng), t = dt(rng);
  auto& B = e.B;
  if (t > 0) {
    heat_bath_update(sp, B, i, t, uniform01(rng));
    return;
  }
  const bool first = (i % 2 == 0);
  if (e.c == 0) {
    // Gap at time 0 is pinned to zero; move B_{2j-1}(0) = B_{2j}(0) = B_{2j}(1) jointly.
    if (T < 2) return;
    const int a = first ? i : i - 1, b = a + 1;
    const long lo = std::max(below(sp, B, b, 2), below(sp, B, b, 1));
    const long hi = std::min(B[b][2], B[a][1]);
    const long v = sample_tilted(rng, 1 / (e.q * e.q), lo, hi);
    B[a][0] = B[b][0] = B[b][1] = v;
    return;
  }
  const long lo = below(sp, B, i, 1);
  const long hi = B[i][1];
  const double rho = first ? e.c / e.q : 1 / (e.c * e.q);
  B[i][0] = sample_tilted(rng, rho, lo, hi);
}

InteractingEnsembleConfig sample_interacting_ensemble_mcmc(int T1, const std::vector<long>& y,
                                                           const std::optional<std::vector<long>>& g,
                                                           const ModelParams& p, long steps, Rng& rng) {
  InteractingEnsembleConfig e = staircase_state(T1, y, g, p);
  for (long s = 0; s < steps; ++s) interacting_update(e, rng);
  return e;
}

std::map<std::vector<long>, double> enumerate_interacting_law(int T1, const std::vector<long>& y,
                                                              const std::optional<std::vector<long>>& g,
                                                              const ModelParams& p, long depth) {
  InteractingEnsembleConfig e = staircase_state(T1, y, g, p);
  const int n = 2 * e.k();
  const long floor_v = g ? (*g)[std::min(1, T1)] : y.back() - depth;
  std::map<std::vector<long>, double> law;
  double total = 0;
  // Free sites are B_i(t) for t < T1, visited curve by curve and time by time.
  std::vector<long> key;
  auto rec = [&](auto&& self, int i, int t) -> void {
    if (i == n) {
      std::string why;
      if (!satisfies(e, &why)) return;
      const double w = std::exp(log_interacting_weight(e));
      if (w <= 0) return;
      key.clear();
      for (int a = 0; a < n; ++a)
        for (int s = 0; s < T1; ++s) key.push_back(e.B[a][s]);
      law[key] += w;
      total += w;
      return;
    }
    if (t == T1) {
      self(self, i + 1, 0);
      return;
    }
    const long lo = t > 0 ? e.B[i][t - 1] : floor_v;
    const long hi = y[i];
    for (long v = lo; v <= hi; ++v) {
      e.B[i][t] = v;
      // Prune against the curve above, already fixed.
      if (i > 0 && t > 0 && e.B[i - 1][t - 1] < v) break;
      self(self, i, t + 1);
    }
  };
  rec(rec, 0, 0);
  for (auto& [k, w] : law) w /= total;
  return law;
}

GibbsReport gibbs_consistency_check(int N, int M, const ModelParams& p, int k, int T, long samples, long min_hits,
                                    Rng& rng) {
  if (T < 1 || T > M) throw std::domain_error("window must lie inside [0, M]");
  if (2 * k > N) throw std::domain_error("need 2k <= N curves");
  // Boundary class -> empirical configuration counts.
  std::map<std::vector<long>, std::map<std::vector<long>, long>> hits;
  for (long r = 0; r < samples; ++r) {
    WeightArray W = sample_weights(N + M, N, p, rng);
    DiscreteLineEnsemble ens = lambda_process(W, N, M);
    std::vector<long> boundary, config;
    for (int i = 1; i <= 2 * k; ++i) boundary.push_back(ens.value(i, T));
    for (int t = 0; t <= T; ++t) boundary.push_back(ens.value(2 * k + 1, t));
    for (int i = 1; i <= 2 * k; ++i)
      for (int t = 0; t < T; ++t) config.push_back(ens.value(i, t));
    hits[boundary][config]++;
  }
  GibbsReport rep;
  for (auto& [boundary, counts] : hits) {
    long total = 0;
    for (auto& [cfg, n] : counts) total += n;
    if (total < min_hits) continue;
    std::vector<long> y(boundary.begin(), boundary.begin() + 2 * k);
    std::vector<long> g(boundary.begin() + 2 * k, boundary.end());
    auto law = enumerate_interacting_law(T, y, g, p);
    double tv = 0;
    for (auto& [cfg, pr] : law) {
      auto it = counts.find(cfg);
      tv += std::abs(pr - (it == counts.end() ? 0.0 : static_cast<double>(it->second) / total));
    }
    for (auto& [cfg, n] : counts)
      if (!law.count(cfg)) tv += static_cast<double>(n) / total;
    rep.classes.push_back({boundary, total, 0.5 * tv});
  }
  if (rep.classes.empty()) rep.warnings.push_back("no conditioning class reached the requested number of hits");
  return rep;
}

}  // namespace hslpp
