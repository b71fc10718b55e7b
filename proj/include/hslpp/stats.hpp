#pragma once

#include <functional>
#include <map>
#include <vector>

namespace hslpp {

struct ChiSquare {
  double statistic = 0;
  int dof = 0;
  double p_value = 1;
};

// Pearson test of observed counts against probabilities; bins with expectation < 5 are pooled.
ChiSquare chi_square_test(const std::vector<double>& observed, const std::vector<double>& probs);

template <class K>
double tv_distance(const std::map<K, double>& p, const std::map<K, long>& counts) {
  long n = 0;
  for (auto& [k, c] : counts) n += c;
  double tv = 0;
  for (auto& [k, pr] : p) {
    auto it = counts.find(k);
    tv += std::abs(pr - (it == counts.end() ? 0.0 : double(it->second) / n));
  }
  for (auto& [k, c] : counts)
    if (!p.count(k)) tv += double(c) / n;
  return 0.5 * tv;
}

struct Moments {
  double mean = 0, var = 0, mean_se = 0, var_se = 0;
  long n = 0;
};
Moments moments(const std::vector<double>& xs);

// sup |F_n - F| against a continuous CDF; and the two-sample statistic.
double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf);
double ks_two_sample(std::vector<double> a, std::vector<double> b);

double pearson_correlation(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace hslpp
