#include "hslpp/lpp.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <istream>
#include <map>
#include <ostream>
#include <unordered_map>

namespace hslpp {

void ModelParams::validate() const {
  if (!(q > 0.0 && q < 1.0)) throw ParameterError("q must lie in (0,1)");
  if (!(c >= 0.0 && c * q < 1.0)) throw ParameterError("c must lie in [0,1/q)");
}

WeightArray::WeightArray(std::initializer_list<std::initializer_list<long>> rows) {
  m_ = static_cast<int>(rows.size());
  n_ = m_ ? static_cast<int>(rows.begin()->size()) : 0;
  for (const auto& r : rows) {
    if (static_cast<int>(r.size()) != n_) throw ParameterError("ragged weight array");
    for (long v : r) {
      if (v < 0) throw ParameterError("negative weight");
      w_.push_back(v);
    }
  }
}

long WeightArray::at(int i, int j) const {
  if (i < 1 || i > m_ || j < 1 || j > n_) throw BoundsError("weight index out of range");
  return (*this)(i, j);
}

long WeightArray::total(int m, int n) const {
  long s = 0;
  for (int i = 1; i <= m; ++i)
    for (int j = 1; j <= n; ++j) s += (*this)(i, j);
  return s;
}

WeightArray sample_weights(int m, int n, const ModelParams& p, Rng& rng) {
  p.validate();
  if (m < 1 || n < 1) throw ParameterError("array dimensions must be positive");
  WeightArray W(m, n);
  const double log_off = std::log(p.q * p.q);
  const double diag = p.c * p.q;
  const double log_diag = diag > 0 ? std::log(diag) : 0.0;
  // Fill the upper triangle in row-major order and mirror; entries with no mirror in range are drawn directly.
  for (int i = 1; i <= m; ++i) {
    for (int j = 1; j <= n; ++j) {
      if (i == j) {
        W(i, j) = diag > 0 ? geometric_log(rng, log_diag) : 0;
      } else if (i < j) {
        W(i, j) = geometric_log(rng, log_off);
      } else if (j <= m && i <= n) {
        W(i, j) = W(j, i);
      } else {
        W(i, j) = geometric_log(rng, log_off);
      }
    }
  }
  return W;
}

static void check_range(const WeightArray& W, int m, int n) {
  if (m < 1 || n < 1 || m > W.rows() || n > W.cols()) throw BoundsError("rectangle exceeds weight array");
}

std::vector<long> lpp_g1_table(const WeightArray& W, int m, int n) {
  check_range(W, m, n);
  std::vector<long> G(static_cast<std::size_t>(m + 1) * (n + 1), 0);
  auto at = [&](int i, int j) -> long& { return G[static_cast<std::size_t>(i) * (n + 1) + j]; };
  for (int i = 1; i <= m; ++i)
    for (int j = 1; j <= n; ++j) at(i, j) = W(i, j) + std::max(at(i - 1, j), at(i, j - 1));
  return G;
}

long lpp_g1(const WeightArray& W, int m, int n) {
  check_range(W, m, n);
  std::vector<long> row(n + 1, 0);
  for (int i = 1; i <= m; ++i)
    for (int j = 1; j <= n; ++j) row[j] = W(i, j) + std::max(row[j], row[j - 1]);
  return row[n];
}

namespace {

// One RSK tableau; rows hold column letters.
struct Tableau {
  std::vector<std::vector<int>> rows;

  void insert(int letter) {
    for (auto& row : rows) {
      auto it = std::upper_bound(row.begin(), row.end(), letter);
      if (it == row.end()) {
        row.push_back(letter);
        return;
      }
      std::swap(*it, letter);
    }
    rows.push_back({letter});
  }

  Partition shape() const {
    Partition p;
    for (const auto& r : rows) p.push_back(static_cast<long>(r.size()));
    return p;
  }
};

}  // namespace

Partition rsk_shape(const WeightArray& W, int m, int n) {
  check_range(W, m, n);
  Tableau T;
  for (int i = 1; i <= m; ++i)
    for (int j = 1; j <= n; ++j)
      for (long r = 0; r < W(i, j); ++r) T.insert(j);
  return T.shape();
}

std::vector<Partition> rsk_shapes_by_row(const WeightArray& W, int m_first, int m_last, int n) {
  check_range(W, m_last, n);
  if (m_first < 1 || m_first > m_last) throw BoundsError("bad row range");
  Tableau T;
  std::vector<Partition> out;
  for (int i = 1; i <= m_last; ++i) {
    for (int j = 1; j <= n; ++j)
      for (long r = 0; r < W(i, j); ++r) T.insert(j);
    if (i >= m_first) out.push_back(T.shape());
  }
  return out;
}

long lpp_gk_bruteforce(const WeightArray& W, int m, int n, int k) {
  check_range(W, m, n);
  if (m * n > 16) throw ResourceError("brute-force oracle limited to m*n <= 16");
  if (k < 1) throw ParameterError("k must be positive");
  if (k > std::min(m, n)) return W.total(m, n);

  // Enumerate every admissible path for each index as (vertex mask, weight).
  struct Path {
    std::uint32_t mask;
    long weight;
  };
  auto bit = [n](int i, int j) { return std::uint32_t{1} << ((i - 1) * n + (j - 1)); };
  std::vector<std::vector<Path>> paths(k);
  for (int p = 1; p <= k; ++p) {
    const int j0 = p, j1 = n - k + p;
    std::vector<Path>& out = paths[p - 1];
    auto dfs = [&](auto&& self, int i, int j, std::uint32_t mask, long wsum) -> void {
      mask |= bit(i, j);
      wsum += W(i, j);
      if (i == m && j == j1) {
        out.push_back({mask, wsum});
        return;
      }
      if (i < m) self(self, i + 1, j, mask, wsum);
      if (j < j1) self(self, i, j + 1, mask, wsum);
    };
    dfs(dfs, 1, j0, 0u, 0L);
  }

  std::unordered_map<std::uint64_t, long> memo;
  constexpr long NEG = std::numeric_limits<long>::min() / 4;
  auto best = [&](auto&& self, int p, std::uint32_t used) -> long {
    if (p == k) return 0;
    const std::uint64_t key = (static_cast<std::uint64_t>(p) << 32) | used;
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    long b = NEG;
    for (const Path& path : paths[p]) {
      if (path.mask & used) continue;
      long rest = self(self, p + 1, used | path.mask);
      if (rest > NEG) b = std::max(b, path.weight + rest);
    }
    memo[key] = b;
    return b;
  };
  return best(best, 0, 0u);
}

long DiscreteLineEnsemble::value(int i, int t) const {
  if (t < 0 || t > M) throw BoundsError("time outside ensemble horizon");
  if (i < 1) throw BoundsError("curve index must be positive");
  if (i > depth()) return 0;
  return curves[i - 1][t];
}

DiscreteLineEnsemble lambda_process(const WeightArray& W, int N, int M, int max_depth) {
  if (N < 1 || M < 0) throw ParameterError("need N >= 1, M >= 0");
  if (max_depth < 0) throw ParameterError("max_depth must be nonnegative");
  const std::size_t cap = max_depth > 0 ? static_cast<std::size_t>(max_depth) : std::numeric_limits<std::size_t>::max();
  check_range(W, N + M, N);
  const int n = N;
  // Growth diagram: shapes along the previous row, lambda(i-1, j) for j = 0..n.
  std::vector<Partition> prev(n + 1), cur(n + 1);
  DiscreteLineEnsemble e;
  e.N = N;
  e.M = M;
  std::vector<Partition> snapshots;
  for (int i = 1; i <= N + M; ++i) {
    cur[0].clear();
    for (int j = 1; j <= n; ++j) {
      const Partition& mu = prev[j - 1];
      const Partition& a = prev[j];
      const Partition& b = cur[j - 1];
      const long w = W(i, j);
      const std::size_t len = std::min(std::max(a.size(), b.size()) + 1, cap);
      Partition lam(len, 0);
      auto get = [](const Partition& p, std::size_t k) -> long { return k < p.size() ? p[k] : 0; };
      lam[0] = std::max(get(a, 0), get(b, 0)) + w;
      for (std::size_t k = 1; k < len; ++k)
        lam[k] = std::max(get(a, k), get(b, k)) + std::min(get(a, k - 1), get(b, k - 1)) - get(mu, k - 1);
      while (!lam.empty() && lam.back() == 0) lam.pop_back();
      cur[j] = std::move(lam);
    }
    std::swap(prev, cur);
    if (i >= N) snapshots.push_back(prev[n]);
  }
  std::size_t depth = 0;
  for (const auto& s : snapshots) depth = std::max(depth, s.size());
  e.curves.assign(depth, std::vector<long>(M + 1, 0));
  for (int t = 0; t <= M; ++t)
    for (std::size_t k = 0; k < snapshots[t].size(); ++k) e.curves[k][t] = snapshots[t][k];
  return e;
}

bool check_interlacing(const DiscreteLineEnsemble& e, std::string* why) {
  const int d = e.depth();
  for (int i = 1; i <= d + 1; ++i) {
    for (int t = 0; t <= e.M; ++t) {
      if (t > 0 && e.value(i, t) < e.value(i, t - 1)) {
        if (why) *why = "curve " + std::to_string(i) + " decreases at t=" + std::to_string(t);
        return false;
      }
      if (t > 0 && e.value(i, t - 1) < e.value(i + 1, t)) {
        if (why) *why = "interlacing fails at i=" + std::to_string(i) + ", t=" + std::to_string(t);
        return false;
      }
      if (e.value(i, t) < e.value(i + 1, t)) {
        if (why) *why = "not a partition at t=" + std::to_string(t);
        return false;
      }
    }
  }
  return true;
}

ScalingConstantsBulk::ScalingConstantsBulk(double q_) : q(q_) {
  if (!(q > 0 && q < 1)) throw ParameterError("q must lie in (0,1)");
  sigma = std::sqrt(q) / (1 - q);
  f = std::cbrt(q) / (2 * std::pow(1 + q, 2.0 / 3.0));
  sigma1 = std::cbrt(q) * std::cbrt(1 + q) / (1 - q);
  f1 = f;
  p1 = q / (1 - q);
  h1 = 2 * q / (1 - q);
}

ScalingConstantsEdge::ScalingConstantsEdge(double q_, double c_) : q(q_), c(c_) {
  if (!(q > 0 && q < 1)) throw ParameterError("q must lie in (0,1)");
  if (!(c > 1 && c * q < 1)) throw ParameterError("edge regime needs c in (1,1/q)");
  p2 = q / (c - q);
  sigma2 = std::sqrt(p2 * (1 + p2));
  kappa_bar = (c - q) * (c - q) / ((1 - q * c) * (1 - q * c)) - 1;
  p_top = p2;
  C_top = q * (c * c - 2 * q * c + 1) / ((c - q) * (1 - q * c));
  kappa_lo = (1 - q * c) * (1 - q * c) / ((c - q) * (c - q));
  kappa_hi = (c - q) * (c - q) / ((1 - q * c) * (1 - q * c));
}

double ScalingConstantsEdge::zc(double kappa) const {
  const double r = std::sqrt(1 + kappa);
  return (q + r) / (1 + q * r);
}

double ScalingConstantsEdge::h1(double kappa) const {
  return (2 * q * std::sqrt(1 + kappa) + 2 * q * q + q * q * kappa) / (1 - q * q);
}

double ScalingConstantsEdge::h2(double kappa) const { return kappa * p2 + C_top; }

// lambda_i at fractional time tau; the ensemble stores lambda_i - i.
static double interp(const DiscreteLineEnsemble& e, int i, double tau) {
  if (tau < -1e-9 || tau > e.M + 1e-9) throw BoundsError("scaled time exceeds ensemble horizon");
  tau = std::clamp(tau, 0.0, static_cast<double>(e.M));
  const int t0 = static_cast<int>(std::floor(tau));
  if (t0 >= e.M) return static_cast<double>(e.value(i, e.M) + i);
  const double fr = tau - t0;
  return (1 - fr) * e.value(i, t0) + fr * e.value(i, t0 + 1) + i;
}

std::vector<std::vector<double>> rescale_bulk(const DiscreteLineEnsemble& e, int N,
                                              const ScalingConstantsBulk& k,
                                              const std::vector<double>& t_grid, int n_curves) {
  const double n13 = std::cbrt(static_cast<double>(N));
  const double n23 = n13 * n13;
  std::vector<std::vector<double>> out(n_curves, std::vector<double>(t_grid.size()));
  for (int i = 1; i <= n_curves; ++i)
    for (std::size_t a = 0; a < t_grid.size(); ++a) {
      const double t = t_grid[a];
      const double L = interp(e, i, t * n23);
      out[i - 1][a] = (L - 2 * k.q * N / (1 - k.q) - k.q * t * n23 / (1 - k.q)) / (k.sigma * n13);
    }
  return out;
}

double scale_top_value(double L1, double t_index, int N, const ScalingConstantsEdge& k) {
  return (L1 - k.C_top * N - k.p_top * t_index) / (std::sqrt(k.p_top * (1 + k.p_top)) * std::sqrt(N));
}

std::vector<double> rescale_top(const DiscreteLineEnsemble& e, int N, const ScalingConstantsEdge& k,
                                const std::vector<double>& t_grid) {
  std::vector<double> out;
  out.reserve(t_grid.size());
  for (double t : t_grid) {
    if (t < 0 || t >= k.kappa_bar) throw std::domain_error("top-curve time outside [0, kappa_bar)");
    out.push_back(scale_top_value(interp(e, 1, t * N), t * N, N, k));
  }
  return out;
}

void write_ensemble_csv(std::ostream& os, const DiscreteLineEnsemble& e) {
  os << "index,time,value\n";
  for (int i = 1; i <= std::max(e.depth(), 1); ++i)
    for (int t = 0; t <= e.M; ++t) os << i << ',' << t << ',' << e.value(i, t) << '\n';
}

void write_archive_csv(std::ostream& os, const std::vector<DiscreteLineEnsemble>& samples) {
  os << "sample_id,index,time,value\n";
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const auto& e = samples[s];
    // An empty ensemble still gets its first curve so that the sample id survives.
    for (int i = 1; i <= std::max(e.depth(), 1); ++i)
      for (int t = 0; t <= e.M; ++t) os << s << ',' << i << ',' << t << ',' << e.value(i, t) << '\n';
  }
}

std::vector<DiscreteLineEnsemble> read_archive_csv(std::istream& is, const std::string& source, int N, double q,
                                                   double c) {
  auto fail = [&](long line, const std::string& why) -> IoError {
    return IoError(source + ":" + std::to_string(line) + ": " + why);
  };
  std::string line;
  if (!std::getline(is, line)) throw fail(1, "empty archive (missing header)");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "sample_id,index,time,value") throw fail(1, "unexpected header '" + line + "'");
  // sample -> (index, time) -> value
  std::map<long, std::map<std::pair<long, long>, long>> rows;
  long lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::array<long, 4> f{};
    const char* p = line.data();
    const char* end = p + line.size();
    for (int k = 0; k < 4; ++k) {
      auto [next, ec] = std::from_chars(p, end, f[k]);
      if (ec != std::errc() || (k < 3 ? (next == end || *next != ',') : next != end))
        throw fail(lineno, "malformed row '" + line + "'");
      p = next + 1;
    }
    if (f[0] < 0 || f[1] < 1 || f[2] < 0 || f[3] < 0) throw fail(lineno, "field out of range");
    if (!rows[f[0]].emplace(std::pair{f[1], f[2]}, f[3]).second) throw fail(lineno, "duplicate entry");
  }
  if (is.bad()) throw fail(lineno, "read failure");
  std::vector<DiscreteLineEnsemble> out;
  long expect = 0;
  for (auto& [id, cells] : rows) {
    if (id != expect++) throw fail(lineno, "sample ids are not consecutive from 0");
    long depth = 0, M = 0;
    for (auto& [key, v] : cells) {
      depth = std::max(depth, key.first);
      M = std::max(M, key.second);
    }
    if (static_cast<long>(cells.size()) != depth * (M + 1))
      throw fail(lineno, "sample " + std::to_string(id) + " is not a full curves x times table");
    DiscreteLineEnsemble e;
    e.N = N;
    e.M = static_cast<int>(M);
    e.q = q;
    e.c = c;
    e.curves.assign(depth, std::vector<long>(M + 1, 0));
    for (auto& [key, v] : cells) e.curves[key.first - 1][key.second] = v;
    std::string why;
    if (!check_interlacing(e, &why)) throw fail(lineno, "sample " + std::to_string(id) + ": " + why);
    out.push_back(std::move(e));
  }
  if (!out.empty()) {
    for (auto& e : out)
      if (e.M != out.front().M) throw fail(lineno, "samples disagree on the time horizon");
  }
  return out;
}

}  // namespace hslpp
