#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <functional>
#include <vector>

#include "hslpp/lpp.hpp"

namespace hslpp {

using Rational = boost::multiprecision::cpp_rational;

struct SchurSequence {
  std::vector<Partition> lambdas;  // lambda^0 .. lambda^M
  double q = 0.5, c = 0.0;
  int N = 1;
  int M() const { return static_cast<int>(lambdas.size()) - 1; }
};

long part(const Partition& p, std::size_t i);  // 0-based, zero past the end
long size_of(const Partition& p);
long alternating_sum(const Partition& p);
void trim(Partition& p);
// lo ⪯ hi: hi_1 >= lo_1 >= hi_2 >= lo_2 >= ...
bool interlaces(const Partition& lo, const Partition& hi);

// All partitions with at most `max_parts` parts and size at most `max_size`.
std::vector<Partition> partitions_up_to(int max_parts, long max_size);
// All lo with lo ⪯ hi and at most `max_parts` parts.
std::vector<Partition> interlacing_below(const Partition& hi, int max_parts);

template <class T>
T int_pow(T base, long e) {
  T r = 1;
  while (e > 0) {
    if (e & 1) r *= base;
    base *= base;
    e >>= 1;
  }
  return r;
}

// Unnormalised weight in exact or floating arithmetic.
template <class T>
T schur_weight_as(const std::vector<Partition>& seq, int N, const T& q, const T& c) {
  for (const auto& l : seq)
    if (static_cast<int>(l.size()) > N) return T(0);
  for (std::size_t j = 1; j < seq.size(); ++j)
    if (!interlaces(seq[j - 1], seq[j])) return T(0);
  const Partition& top = seq.back();
  // q^{|lambda^M| - |lambda^0|} from the chain times q^{|lambda^M|} from the specialisation.
  T w = int_pow(c, alternating_sum(seq.front())) * int_pow(q, 2 * size_of(top) - size_of(seq.front()));
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j) w *= T(part(top, i) - part(top, j) + j - i) / T(j - i);
  return w;
}

double schur_weight(const SchurSequence& s);
double log_schur_normalization(int N, int M, double q, double c);  // log Z

SchurSequence sample_schur_process(int N, int M, const ModelParams& p, Rng& rng);

// The same sequence as curves lambda_i(t + N, N), t = 0..M.
DiscreteLineEnsemble as_line_ensemble(const SchurSequence& s);

struct RatioCheck {
  Rational direct;     // weight(a) / weight(b)
  Rational predicted;  // c^{Δalt} q^{-Δsum} at time 0
  bool agree() const { return direct == predicted; }
};
RatioCheck conditional_ratio_check(const SchurSequence& a, const SchurSequence& b);

// Enumerate sequences with |lambda^M| <= cutoff, calling f(sequence, weight).
void enumerate_schur_support(int N, int M, double q, double c, long cutoff,
                             const std::function<void(const std::vector<Partition>&, double)>& f);

}  // namespace hslpp
