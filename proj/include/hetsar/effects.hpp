#pragma once

#include "hetsar/estimator.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace hetsar {

struct ImpactSummary {
  std::string variable;
  double coefficient = 0.0;
  double direct = 0.0;
  double indirect = 0.0;
  double total = 0.0;
};

/// Largest n for which (I - rho W)^-1 is formed densely.
inline constexpr Eigen::Index kMaxImpactN = 2000;

/// S = beta (I - rho W)^-1; direct = mean diag, indirect = mean off-diagonal
/// row sum, total = direct + indirect.
ImpactSummary impacts(double beta, double rho, const WeightMatrix& w,
                      const std::string& variable = "");
/// Linear mean term of a fitted model.
ImpactSummary impacts(const FitResult& fit, const WeightMatrix& w, const std::string& variable);

struct MoranResult {
  double statistic = 0.0;
  double expected = 0.0;
  double p_value = 1.0;
  int permutations = 0;
  std::vector<std::pair<double, double>> scatter;
};

inline constexpr int kMinPermutations = 99;

/// I = (n / S0) z'Wz / z'z on centered values; one-sided permutation p-value
/// (1 + #{I_b >= I}) / (B + 1).
MoranResult morans_i(const Eigen::VectorXd& values, const WeightMatrix& w, int permutations = 999,
                     std::uint64_t seed = 0);
/// Statistic only.
double moran_statistic(const Eigen::VectorXd& values, const WeightMatrix& w);
/// (z_i, sum_j w_ij z_j) pairs.
std::vector<std::pair<double, double>> moran_scatter(const Eigen::VectorXd& values,
                                                     const WeightMatrix& w);

namespace kernels {

/// Number of permutations b in [0, B) with I_b >= observed. Permutation b
/// uses substream(seed, b), so both kernels count the same set.
int moran_exceedances_parallel(const Eigen::VectorXd& z, const WeightMatrix& w, double observed,
                               int permutations, std::uint64_t seed);
int moran_exceedances_serial(const Eigen::VectorXd& z, const WeightMatrix& w, double observed,
                             int permutations, std::uint64_t seed);

}  // namespace kernels

}  // namespace hetsar
