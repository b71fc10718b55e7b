#include "hslpp/schur.hpp"

#include <algorithm>
#include <stdexcept>

namespace hslpp {

long part(const Partition& p, std::size_t i) { return i < p.size() ? p[i] : 0; }

long size_of(const Partition& p) {
  long s = 0;
  for (long v : p) s += v;
  return s;
}

long alternating_sum(const Partition& p) {
  long s = 0;
  for (std::size_t i = 0; i < p.size(); ++i) s += (i % 2 == 0) ? p[i] : -p[i];
  return s;
}

void trim(Partition& p) {
  while (!p.empty() && p.back() == 0) p.pop_back();
}

bool interlaces(const Partition& lo, const Partition& hi) {
  const std::size_t n = std::max(lo.size(), hi.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (part(hi, i) < part(lo, i)) return false;
    if (part(lo, i) < part(hi, i + 1)) return false;
  }
  return true;
}

std::vector<Partition> partitions_up_to(int max_parts, long max_size) {
  std::vector<Partition> out;
  Partition cur;
  auto rec = [&](auto&& self, long remaining, long cap) -> void {
    out.push_back(cur);
    if (static_cast<int>(cur.size()) == max_parts) return;
    for (long v = 1; v <= std::min(cap, remaining); ++v) {
      cur.push_back(v);
      self(self, remaining - v, v);
      cur.pop_back();
    }
  };
  rec(rec, max_size, max_size);
  return out;
}

std::vector<Partition> interlacing_below(const Partition& hi, int max_parts) {
  std::vector<Partition> out;
  Partition cur;
  const std::size_t n = std::min<std::size_t>(hi.size(), max_parts);
  auto rec = [&](auto&& self, std::size_t i) -> void {
    if (i == n) {
      Partition p = cur;
      trim(p);
      out.push_back(p);
      return;
    }
    for (long v = part(hi, i + 1); v <= part(hi, i); ++v) {
      cur.push_back(v);
      self(self, i + 1);
      cur.pop_back();
    }
  };
  rec(rec, 0);
  return out;
}

double schur_weight(const SchurSequence& s) {
  if (s.lambdas.empty()) throw ParameterError("empty Schur sequence");
  return schur_weight_as<double>(s.lambdas, s.N, s.q, s.c);
}

double log_schur_normalization(int N, int M, double q, double c) {
  return -N * std::log1p(-c * q) - (0.5 * N * (N - 1) + static_cast<double>(N) * M) * std::log1p(-q * q);
}

SchurSequence sample_schur_process(int N, int M, const ModelParams& p, Rng& rng) {
  WeightArray W = sample_weights(N + M, N, p, rng);
  DiscreteLineEnsemble e = lambda_process(W, N, M);
  SchurSequence s;
  s.q = p.q;
  s.c = p.c;
  s.N = N;
  for (int t = 0; t <= M; ++t) {
    Partition l;
    for (int i = 1; i <= e.depth(); ++i) l.push_back(e.value(i, t));
    trim(l);
    s.lambdas.push_back(std::move(l));
  }
  return s;
}

RatioCheck conditional_ratio_check(const SchurSequence& a, const SchurSequence& b) {
  if (a.lambdas.empty() || a.lambdas.size() != b.lambdas.size() || a.lambdas.back() != b.lambdas.back())
    throw std::domain_error("sequences must agree at the final time");
  const Rational q(a.q), c(a.c);
  const Rational wa = schur_weight_as<Rational>(a.lambdas, a.N, q, c);
  const Rational wb = schur_weight_as<Rational>(b.lambdas, b.N, q, c);
  if (wa == 0 || wb == 0) throw std::domain_error("sequence off the support of the measure");
  RatioCheck r;
  r.direct = wa / wb;
  const long dalt = alternating_sum(a.lambdas.front()) - alternating_sum(b.lambdas.front());
  const long dsum = size_of(a.lambdas.front()) - size_of(b.lambdas.front());
  Rational pred = dalt >= 0 ? int_pow(c, dalt) : Rational(1) / int_pow(c, -dalt);
  pred *= dsum >= 0 ? Rational(1) / int_pow(q, dsum) : int_pow(q, -dsum);
  r.predicted = pred;
  return r;
}

void enumerate_schur_support(int N, int M, double q, double c, long cutoff,
                             const std::function<void(const std::vector<Partition>&, double)>& f) {
  std::vector<Partition> seq(M + 1);
  auto rec = [&](auto&& self, int j) -> void {
    if (j < 0) {
      const double w = schur_weight_as<double>(seq, N, q, c);
      if (w > 0) f(seq, w);
      return;
    }
    for (const Partition& lo : interlacing_below(seq[j + 1], N)) {
      seq[j] = lo;
      self(self, j - 1);
    }
  };
  for (const Partition& top : partitions_up_to(N, cutoff)) {
    seq[M] = top;
    rec(rec, M - 1);
  }
}

DiscreteLineEnsemble as_line_ensemble(const SchurSequence& s) {
  DiscreteLineEnsemble e;
  e.N = s.N;
  e.M = s.M();
  e.q = s.q;
  e.c = s.c;
  std::size_t depth = 0;
  for (const auto& l : s.lambdas) depth = std::max(depth, l.size());
  e.curves.assign(depth, std::vector<long>(e.M + 1, 0));
  for (int t = 0; t <= e.M; ++t)
    for (std::size_t k = 0; k < s.lambdas[t].size(); ++k) e.curves[k][t] = s.lambdas[t][k];
  return e;
}

}  // namespace hslpp
