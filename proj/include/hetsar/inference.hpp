#pragma once

#include "hetsar/estimator.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace hetsar {

/// Expected information over (beta, rho, alpha), block by block.
struct InformationMatrix {
  Eigen::MatrixXd beta_beta;
  Eigen::VectorXd beta_rho;
  Eigen::MatrixXd beta_alpha;  // structurally zero
  double rho_rho = 0.0;
  Eigen::VectorXd rho_alpha;
  Eigen::MatrixXd alpha_alpha;
  bool has_rho = true;
  /// Full symmetric matrix (identifiability constraints on smooth blocks included).
  Eigen::MatrixXd assembled;
  Eigen::MatrixXd covariance;
};

/// Blocks at the fitted parameters. A^-1 is formed once by dense LU. The rho
/// row/column is present only when rho was estimated.
InformationMatrix fisher_information(const FitResult& fit, const WeightMatrix& w);

enum class TestKind { wald_z, lr_chisq, f_linear };

struct TestResult {
  double statistic = 0.0;
  double df = 0.0;
  double p_value = 1.0;
  TestKind kind = TestKind::wald_z;
};

/// z = (estimate - null) / se with a two-sided standard-normal p-value.
TestResult wald_test(double estimate, double null_value, double se);

/// Lambda = GD0 - GD1 with unpenalized deviances; df from the difference of
/// total effective degrees of freedom (rho counts 1 when estimated).
TestResult lr_test(const FitResult& fit_null, const FitResult& fit_alt);

/// Refits with rho held at 0 and the alternative's smoothing parameters, then
/// runs lr_test against `fit_alt`.
TestResult rho_lr_test(const FitResult& fit_alt, const DataTable& data, const WeightMatrix& w);

/// Wald-form test of C b = d on the unpenalized coefficients of a submodel.
/// C has either one column per unpenalized coefficient or one per submodel
/// column (then it must be zero on penalized columns). df = rank(C).
TestResult linear_hypothesis(const FitResult& fit, const Eigen::MatrixXd& c,
                             const Eigen::VectorXd& d, Submodel submodel = Submodel::mean);

/// Standard errors of the submodel coefficients from the covariance matrix.
Eigen::VectorXd standard_errors(const FitResult& fit, Submodel submodel);
double rho_standard_error(const FitResult& fit);

struct CurveTable {
  std::vector<double> grid;
  std::vector<double> fit;
  std::vector<double> lower;
  std::vector<double> upper;
};

/// Pointwise bands f(x) +- z_{(1+level)/2} sqrt(diag(X' V X'^T)), X' zero
/// outside the term's columns.
CurveTable smooth_ci(const FitResult& fit, Submodel submodel, const std::string& term,
                     const std::vector<double>& grid, double level = 0.95);

/// Evenly spaced grid over the training range of a smooth term.
std::vector<double> smooth_grid(const FitResult& fit, Submodel submodel, const std::string& term,
                                int points = 100);

struct EffectiveDf {
  double mean = 0.0;
  double scale = 0.0;
  double error = 0.0;
  std::vector<double> mean_blocks;
  std::vector<double> scale_blocks;
};

/// Unpenalized columns count 1 each; each smooth block contributes the trace
/// of its block of the penalized hat matrix.
EffectiveDf effective_dfs(const FitResult& fit);

/// Block df for one PWLS problem with weights w (exposed for tests).
std::vector<double> block_effective_dfs(const SubDesign& design, const Eigen::VectorXd& weights);

}  // namespace hetsar
