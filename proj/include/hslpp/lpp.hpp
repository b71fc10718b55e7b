#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "hslpp/rng.hpp"

namespace hslpp {

struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct BoundsError : std::out_of_range {
  using std::out_of_range::out_of_range;
};
struct ResourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ModelParams {
  double q = 0.5;
  double c = 0.0;

  void validate() const;
  bool subcritical() const { return c < 1.0; }
  bool supercritical() const { return c > 1.0; }
};

// Rows i in [1,m], columns j in [1,n], stored row-major.
class WeightArray {
 public:
  WeightArray() = default;
  WeightArray(int m, int n) : m_(m), n_(n), w_(static_cast<std::size_t>(m) * n, 0) {}
  WeightArray(std::initializer_list<std::initializer_list<long>> rows);

  int rows() const { return m_; }
  int cols() const { return n_; }
  long operator()(int i, int j) const { return w_[idx(i, j)]; }
  long& operator()(int i, int j) { return w_[idx(i, j)]; }
  long at(int i, int j) const;
  long total(int m, int n) const;

 private:
  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i - 1) * n_ + (j - 1); }
  int m_ = 0, n_ = 0;
  std::vector<long> w_;
};

using Partition = std::vector<long>;  // weakly decreasing, no trailing zeros

WeightArray sample_weights(int m, int n, const ModelParams& p, Rng& rng);

long lpp_g1(const WeightArray& W, int m, int n);

// Full last-passage table G1(i,j) for i<=m, j<=n, row-major with (m+1)x(n+1) padding.
std::vector<long> lpp_g1_table(const WeightArray& W, int m, int n);

// RSK row insertion of the biword of W restricted to [1,m]x[1,n].
Partition rsk_shape(const WeightArray& W, int m, int n);

// Exhaustive disjoint-path maximum; refuses m*n > 16.
long lpp_gk_bruteforce(const WeightArray& W, int m, int n, int k);

struct DiscreteLineEnsemble {
  int N = 0;
  int M = 0;
  double q = 0.0, c = 0.0;
  // curves[i-1][t] = lambda_i(t+N, N); curves beyond the stored depth are 0.
  std::vector<std::vector<long>> curves;

  long value(int i, int t) const;
  int depth() const { return static_cast<int>(curves.size()); }
};

// lambda(t+N, N) for t in [0,M]; uses the growth-diagram local rule. A positive max_depth keeps
// only the first max_depth parts, which the local rule computes without the others.
DiscreteLineEnsemble lambda_process(const WeightArray& W, int N, int M, int max_depth = 0);

// Same shapes computed by successive row insertion; slower reference path.
std::vector<Partition> rsk_shapes_by_row(const WeightArray& W, int m_first, int m_last, int n);

bool check_interlacing(const DiscreteLineEnsemble& e, std::string* why = nullptr);

// CSV with header index,time,value; one row per stored curve and time.
void write_ensemble_csv(std::ostream& os, const DiscreteLineEnsemble& e);
// Archive of several samples: header sample_id,index,time,value.
void write_archive_csv(std::ostream& os, const std::vector<DiscreteLineEnsemble>& samples);
// N, q, c are not part of the table. `source` names the stream in error messages.
std::vector<DiscreteLineEnsemble> read_archive_csv(std::istream& is, const std::string& source, int N, double q,
                                                   double c);

struct ScalingConstantsBulk {
  double q;
  double sigma, f, sigma1, f1, p1, h1;
  explicit ScalingConstantsBulk(double q);
};

struct ScalingConstantsEdge {
  double q, c;
  double p2, sigma2, kappa_bar, p_top, C_top, kappa_lo, kappa_hi;
  ScalingConstantsEdge(double q, double c);
  double zc(double kappa) const;
  double h1(double kappa) const;
  double h2(double kappa) const;
};

// Scaled curves on t_grid: result[i][k] for curve i+1 at t_grid[k].
std::vector<std::vector<double>> rescale_bulk(const DiscreteLineEnsemble& e, int N,
                                              const ScalingConstantsBulk& k,
                                              const std::vector<double>& t_grid, int n_curves);

std::vector<double> rescale_top(const DiscreteLineEnsemble& e, int N, const ScalingConstantsEdge& k,
                                const std::vector<double>& t_grid);

// Top-curve scaling applied to a plain sequence L1(t), t = 0..len-1.
double scale_top_value(double L1, double t_index, int N, const ScalingConstantsEdge& k);

}  // namespace hslpp
