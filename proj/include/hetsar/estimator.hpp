#pragma once

#include "hetsar/design.hpp"
#include "hetsar/errors.hpp"
#include "hetsar/weights.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace hetsar {

/// (rho, beta, alpha) for the mean and log-sd submodels.
struct Parameters {
  double rho = 0.0;
  Eigen::VectorXd beta;
  Eigen::VectorXd alpha;
};

inline constexpr double kDefaultClampBound = 15.0;

struct ScaleEvaluation {
  Eigen::VectorXd sigma;
  /// 1 where the linear predictor is inside the clamp, 0 where it was clamped.
  Eigen::VectorXd active;
  int clamped = 0;
};

/// sigma_i = exp(clamp(x_sigma_i^T alpha, -bound, bound)).
ScaleEvaluation evaluate_scale(const SubDesign& scale, const Eigen::VectorXd& alpha,
                               double clamp_bound = kDefaultClampBound);

/// ln|Sigma| with Sigma = diag(sigma^2), via its Cholesky factor diag(sigma).
double log_det_sigma(const Eigen::VectorXd& sigma);

/// ln|I - rho W|. Uses the cached spectrum when present, dense LU otherwise.
double log_det_A(double rho, const WeightMatrix& w);
double log_det_A_eigen(double rho, const Eigen::VectorXd& eigenvalues);
double log_det_A_lu(double rho, const WeightMatrix& w);
/// tr((I - rho W)^-1 W).
double trace_Ainv_W(double rho, const WeightMatrix& w);

/// Solves M x = rhs for symmetric M by Cholesky, escalating a diagonal jitter
/// from 1e-10 to 1e-6 (relative to the mean diagonal) if factorization fails.
Eigen::MatrixXd solve_symmetric(const Eigen::MatrixXd& m, const Eigen::MatrixXd& rhs,
                                const char* what = "penalized normal equations");

/// beta = (X^T Sigma^-1 X + sum psi G)^-1 X^T Sigma^-1 Ay.
Eigen::VectorXd beta_gls(const SubDesign& mean, const Eigen::VectorXd& sigma,
                         const Eigen::VectorXd& ay);

struct LikelihoodTerms {
  double loglik = 0.0;     // unpenalized l
  double penalty = 0.0;    // 1/2 (beta' P1 beta + alpha' P2 alpha)
  double penalized = 0.0;  // l_p = l - penalty
  int clamped = 0;
};

LikelihoodTerms likelihood_terms(const Parameters& theta, const DesignMatrices& design,
                                 const WeightMatrix& w, const Eigen::VectorXd& y,
                                 double clamp_bound = kDefaultClampBound);
double penalized_loglik(const Parameters& theta, const DesignMatrices& design,
                        const WeightMatrix& w, const Eigen::VectorXd& y);

Eigen::VectorXd score_beta(const Parameters& theta, const DesignMatrices& design,
                           const WeightMatrix& w, const Eigen::VectorXd& y);
double score_rho(const Parameters& theta, const DesignMatrices& design, const WeightMatrix& w,
                 const Eigen::VectorXd& y);
Eigen::VectorXd score_alpha(const Parameters& theta, const DesignMatrices& design,
                            const WeightMatrix& w, const Eigen::VectorXd& y);

struct ScaleFitOptions {
  double score_tol = 1e-8;
  int max_iterations = 100;
  double clamp_bound = kDefaultClampBound;
};

/// Raised when Fisher scoring on the scale model does not reach score_tol.
class ScaleConvergenceError : public NumericalError {
 public:
  ScaleConvergenceError(Eigen::VectorXd last, double score_norm);
  Eigen::VectorXd last_iterate;
  double score_norm;
};

/// Score of the scale submodel given mean residuals r = Ay - X beta.
Eigen::VectorXd scale_score(const Eigen::VectorXd& residuals, const SubDesign& scale,
                            const Eigen::VectorXd& alpha, double clamp_bound = kDefaultClampBound);

/// Fisher scoring alpha <- alpha + I_aa^-1 score_alpha until ||score|| < score_tol.
Eigen::VectorXd update_scale_model(const Eigen::VectorXd& residuals, const SubDesign& scale,
                                   const Eigen::VectorXd& alpha_init,
                                   const ScaleFitOptions& options = {});

/// Log10 grid for smoothing-parameter search: 1e-4 .. 1e6 in 21 points.
inline constexpr double kLogPsiMin = -4.0;
inline constexpr double kLogPsiMax = 6.0;
inline constexpr int kPsiGridPoints = 21;

/// GCV = n * sum w (z - X b)^2 / (n - tr H)^2 for the penalized weighted
/// least-squares problem with the given per-block psi.
double gcv_score(const SubDesign& design, const Eigen::VectorXd& weights,
                 const Eigen::VectorXd& z, const std::vector<double>& psi);

/// Per-block psi by GCV (coordinate-wise: grid, then golden/parabolic refinement).
std::vector<double> select_psi_gcv(const SubDesign& design, const Eigen::VectorXd& weights,
                                   const Eigen::VectorXd& z);

struct SmoothingChoice {
  std::vector<double> mean;
  std::vector<double> scale;
};

/// GCV on the working problems: mean (z = Ay, w = 1/sigma^2) and scale
/// (Fisher-scoring working response, w = 2). Blocks-free submodels return empty.
SmoothingChoice select_smoothing(const DesignMatrices& design, const WeightMatrix& w,
                                 const Eigen::VectorXd& y, const Parameters& current,
                                 double clamp_bound = kDefaultClampBound);

/// Result of the bounded rho search.
struct RhoSearch {
  double rho = 0.0;
  double value = 0.0;
  bool at_bound = false;
};

/// Maximizes a concave-near-optimum objective on [lo, hi] by Brent's method,
/// then polishes by bisection on `derivative` when it brackets a sign change.
RhoSearch maximize_rho(const std::function<double(double)>& objective,
                       const std::function<double(double)>& derivative, RhoBounds bounds);

enum class SmoothingSchedule {
  every_iteration,  // psi re-selected in every outer iteration (default)
  initial_only,     // selected in the initial fit, then frozen
};

struct ConvergenceOptions {
  double rho_tol = 1e-6;
  int max_outer = 50;
  double scale_score_tol = 1e-8;
  double clamp_bound = kDefaultClampBound;
  double loglik_rel_tol = 1e-8;
  int max_inner = 100;
  SmoothingSchedule smoothing = SmoothingSchedule::every_iteration;
  /// Holds rho at this value (no spatial search; ln|A| still included).
  std::optional<double> fixed_rho;
  /// Fixed smoothing parameters; disables GCV for that submodel.
  std::optional<std::vector<double>> fixed_psi_mean;
  std::optional<std::vector<double>> fixed_psi_scale;
  bool compute_information = true;
};

struct TraceEntry {
  int iteration = 0;
  std::string step;  // "location_scale" or "rho"
  double rho = 0.0;
  double penalized_loglik = 0.0;
};

struct FitResult {
  double rho = 0.0;
  Eigen::VectorXd beta;
  Eigen::VectorXd alpha;
  Eigen::VectorXd sigma;
  double penalized_loglik = 0.0;
  double loglik = 0.0;
  double global_deviance = 0.0;
  /// Expected information over (beta, rho, alpha); rho row/col only if estimated.
  Eigen::MatrixXd fisher;
  Eigen::MatrixXd covariance;
  double edf_mean = 0.0;
  double edf_scale = 0.0;
  int iterations = 0;
  bool converged = false;
  bool rho_estimated = true;
  bool rho_at_bound = false;
  int clamp_count = 0;
  RhoBounds bounds;
  ModelSpec spec;
  DesignMatrices design;
  Eigen::VectorXd y;
  Eigen::VectorXd wy;
  Eigen::Index weights_n = 0;
  double weights_total = 0.0;
  std::vector<TraceEntry> trace;
  std::vector<std::string> log;

  Parameters parameters() const { return {rho, beta, alpha}; }
  bool has_information() const { return fisher.size() > 0; }
  /// rho W y + X beta.
  Eigen::VectorXd fitted_mean() const;
  /// Ay - X beta.
  Eigen::VectorXd residuals() const;
  /// Sigma^-1/2 (Ay - X beta).
  Eigen::VectorXd standardized_residuals() const;
  /// Mean squared in-sample residual of the fitted conditional mean.
  double mse() const;
  Eigen::Index rho_index() const { return beta.size(); }
  Eigen::Index alpha_offset() const { return beta.size() + (rho_estimated ? 1 : 0); }
};

/// Penalized ML fit of the heteroscedastic semiparametric SAR model.
FitResult fit(const ModelSpec& spec, const DataTable& data, const WeightMatrix& w,
              const ConvergenceOptions& options = {});

/// Classical concentrated-likelihood SAR with homoscedastic errors and the
/// given linear mean (sigma^2 profiled). Shares log|A| and the rho search.
FitResult fit_classical_sar(const std::string& response, const std::vector<std::string>& linear,
                            const DataTable& data, const WeightMatrix& w,
                            bool compute_information = true);

}  // namespace hetsar
