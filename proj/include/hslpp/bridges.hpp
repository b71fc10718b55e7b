#pragma once

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hslpp/lpp.hpp"
#include "hslpp/rng.hpp"

namespace hslpp {

struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// k interlacing increasing paths on [T0,T1] with fixed entrance/exit data and optional ceiling f / floor g.
struct BridgeSpec {
  int T0 = 0, T1 = 1;
  std::vector<long> x, y;            // x_1 >= ... >= x_k at T0; y at T1
  std::optional<std::vector<long>> f;  // indexed by time - T0
  std::optional<std::vector<long>> g;
  int k() const { return static_cast<int>(x.size()); }
  int len() const { return T1 - T0; }
};

using Paths = std::vector<std::vector<long>>;  // Q[i][s], s = time - T0

// Pointwise maximal configuration; throws InfeasibleError when the space is empty.
Paths maximal_state(const BridgeSpec& spec);
bool satisfies(const BridgeSpec& spec, const Paths& Q, std::string* why = nullptr);

// Allowed interval [C, D] for interior site (i, s) (0-based curve, offset time).
std::pair<long, long> site_interval(const BridgeSpec& spec, const Paths& Q, int i, int s);
// Heat-bath update C + floor(U (D - C + 1)).
void heat_bath_update(const BridgeSpec& spec, Paths& Q, int i, int s, double U);

Paths sample_interlacing_bridges_mcmc(const BridgeSpec& spec, long steps, Rng& rng);
long default_burn_in(long sites);

struct CoupledTriple {
  Paths top, bottom, hat;
  long M = 0;
};

struct CouplingReport {
  long steps = 0;
  long ordering_violations = 0;
  long shift_violations = 0;
  CoupledTriple final_state;
};

// Three chains from maximal states with shared randomness; invariants checked after every update.
CouplingReport monotone_coupled_chains(const BridgeSpec& top, const BridgeSpec& bottom, long M, long steps, Rng& rng,
                                       const std::function<void(const CoupledTriple&)>& observe = {});

struct InteractingEnsembleConfig {
  int T1 = 1;
  std::vector<long> y;                 // 2k exit values
  std::optional<std::vector<long>> g;  // floor on [0, T1]
  double q = 0.5, c = 0.0;
  Paths B;                             // B[i][t], t in [0, T1]
  int k() const { return static_cast<int>(y.size()) / 2; }
};

double log_interacting_weight(const InteractingEnsembleConfig& e);
bool satisfies(const InteractingEnsembleConfig& e, std::string* why = nullptr);
InteractingEnsembleConfig staircase_state(int T1, const std::vector<long>& y,
                                          const std::optional<std::vector<long>>& g, const ModelParams& p);

// One random-scan update of the weighted chain.
void interacting_update(InteractingEnsembleConfig& e, Rng& rng);
InteractingEnsembleConfig sample_interacting_ensemble_mcmc(int T1, const std::vector<long>& y,
                                                           const std::optional<std::vector<long>>& g,
                                                           const ModelParams& p, long steps, Rng& rng);

// Exact enumeration of the interacting-ensemble law; finite when g is present.
// Without g, left endpoints are cut at y_{2k} - depth.
std::map<std::vector<long>, double> enumerate_interacting_law(int T1, const std::vector<long>& y,
                                                              const std::optional<std::vector<long>>& g,
                                                              const ModelParams& p, long depth = 40);

struct GibbsClassReport {
  std::vector<long> boundary;  // exit values then floor values
  long hits = 0;
  double tv = 0;
};
struct GibbsReport {
  std::vector<GibbsClassReport> classes;
  std::vector<std::string> warnings;
};

// Empirical conditional law of the top 2k curves on [0,T] under the Schur process vs exact enumeration.
GibbsReport gibbs_consistency_check(int N, int M, const ModelParams& p, int k, int T, long samples, long min_hits,
                                    Rng& rng);

}  // namespace hslpp
