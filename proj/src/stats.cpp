#include "hslpp/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <stdexcept>

namespace hslpp {

ChiSquare chi_square_test(const std::vector<double>& observed, const std::vector<double>& probs) {
  if (observed.size() != probs.size() || observed.empty()) throw std::invalid_argument("size mismatch");
  double n = 0, ptot = 0;
  for (double o : observed) n += o;
  for (double p : probs) ptot += p;
  std::vector<std::pair<double, double>> bins;  // (observed, expected)
  double o_acc = 0, e_acc = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    o_acc += observed[i];
    e_acc += n * probs[i] / ptot;
    if (e_acc >= 5) {
      bins.push_back({o_acc, e_acc});
      o_acc = e_acc = 0;
    }
  }
  if (e_acc > 0 || o_acc > 0) {
    if (bins.empty()) bins.push_back({o_acc, e_acc});
    else {
      bins.back().first += o_acc;
      bins.back().second += e_acc;
    }
  }
  ChiSquare r;
  for (auto [o, e] : bins) r.statistic += (o - e) * (o - e) / e;
  r.dof = static_cast<int>(bins.size()) - 1;
  if (r.dof < 1) return r;
  boost::math::chi_squared dist(r.dof);
  r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
  return r;
}

Moments moments(const std::vector<double>& xs) {
  Moments m;
  m.n = static_cast<long>(xs.size());
  if (m.n < 2) throw std::invalid_argument("need at least two samples");
  double s = 0;
  for (double x : xs) s += x;
  m.mean = s / m.n;
  double s2 = 0, s4 = 0;
  for (double x : xs) {
    const double d = x - m.mean;
    s2 += d * d;
    s4 += d * d * d * d;
  }
  m.var = s2 / (m.n - 1);
  m.mean_se = std::sqrt(m.var / m.n);
  const double mu4 = s4 / m.n;
  m.var_se = std::sqrt(std::max(0.0, (mu4 - m.var * m.var * (m.n - 3.0) / (m.n - 1.0)) / m.n));
  return m;
}

double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double F = cdf(xs[i]);
    d = std::max({d, std::abs(F - i / n), std::abs((i + 1) / n - F)});
  }
  return d;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0;
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  return d;
}

double pearson_correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const Moments ma = moments(a), mb = moments(b);
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - ma.mean) * (b[i] - mb.mean);
  return s / (a.size() - 1) / std::sqrt(ma.var * mb.var);
}

}  // namespace hslpp
