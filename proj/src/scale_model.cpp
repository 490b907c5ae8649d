#include "hetsar/estimator.hpp"

#include <cmath>
#include <sstream>

namespace hetsar {

namespace {

constexpr int kFisherIterations = 3;

std::string scale_failure_message(double norm) {
  std::ostringstream msg;
  msg << "scale-model Fisher scoring did not converge (score norm " << norm << ")";
  return msg.str();
}

// Scale-model part of l_p for fixed mean residuals.
double scale_objective(const Eigen::VectorXd& r, const SubDesign& scale,
                       const Eigen::VectorXd& alpha, double clamp_bound) {
  const ScaleEvaluation sc = evaluate_scale(scale, alpha, clamp_bound);
  const double ll = -sc.sigma.array().log().sum() -
                    0.5 * (r.array() / sc.sigma.array()).square().sum();
  return ll - 0.5 * alpha.dot(scale.penalty_matrix() * alpha);
}

}  // namespace

ScaleConvergenceError::ScaleConvergenceError(Eigen::VectorXd last, double norm)
    : NumericalError(scale_failure_message(norm)), last_iterate(std::move(last)), score_norm(norm) {}

Eigen::VectorXd update_scale_model(const Eigen::VectorXd& residuals, const SubDesign& scale,
                                   const Eigen::VectorXd& alpha_init,
                                   const ScaleFitOptions& options) {
  if (!residuals.allFinite()) throw NumericalError("scale model: non-finite residuals");
  if (alpha_init.size() != scale.cols()) throw InputError("alpha length does not match scale design");
  const Eigen::MatrixXd penalty = scale.penalty_matrix();
  Eigen::VectorXd alpha = alpha_init;
  double norm = INFINITY;
  for (int it = 0; it < options.max_iterations; ++it) {
    const ScaleEvaluation sc = evaluate_scale(scale, alpha, options.clamp_bound);
    const Eigen::VectorXd u =
        ((residuals.array() / sc.sigma.array()).square() - 1.0) * sc.active.array();
    const Eigen::VectorXd score = scale.X.transpose() * u - penalty * alpha;
    norm = score.norm();
    if (norm < options.score_tol) return alpha;

    // Expected information 2 X' X + psi G (clamped rows carry no information).
    // Fisher scoring converges only linearly, so later iterations switch to
    // the observed information 2 X' diag(r^2 / sigma^2) X, which is PD too.
    Eigen::VectorXd curvature = 2.0 * sc.active;
    if (it >= kFisherIterations) {
      curvature = 2.0 * (residuals.array() / sc.sigma.array()).square() * sc.active.array();
    }
    const Eigen::MatrixXd f = scale.X.transpose() * curvature.asDiagonal() * scale.X;
    const Eigen::MatrixXd info = f + penalty + scale.constraint_matrix(f);
    const Eigen::VectorXd step = solve_symmetric(info, score, "scale information");

    const double current = scale_objective(residuals, scale, alpha, options.clamp_bound);
    double t = 1.0;
    Eigen::VectorXd trial = alpha + step;
    while (scale_objective(residuals, scale, trial, options.clamp_bound) <
               current - 1e-12 * std::abs(current) &&
           t > 1e-6) {
      t *= 0.5;
      trial = alpha + t * step;
    }
    alpha = trial;
  }
  throw ScaleConvergenceError(alpha, norm);
}

}  // namespace hetsar
