#include "hetsar/estimator.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <cmath>
#include <numbers>
#include <sstream>

namespace hetsar {

ScaleEvaluation evaluate_scale(const SubDesign& scale, const Eigen::VectorXd& alpha,
                               double clamp_bound) {
  if (alpha.size() != scale.cols()) throw InputError("alpha length does not match scale design");
  const Eigen::VectorXd eta = scale.X * alpha;
  ScaleEvaluation out;
  out.sigma.resize(eta.size());
  out.active = Eigen::VectorXd::Ones(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    double e = eta(i);
    if (!std::isfinite(e)) throw NumericalError("non-finite scale linear predictor");
    if (e > clamp_bound || e < -clamp_bound) {
      e = std::clamp(e, -clamp_bound, clamp_bound);
      out.active(i) = 0.0;
      ++out.clamped;
    }
    out.sigma(i) = std::exp(e);
  }
  return out;
}

double log_det_sigma(const Eigen::VectorXd& sigma) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (!(sigma(i) > 0.0)) throw InputError("sigma must be strictly positive");
    s += std::log(sigma(i));
  }
  return 2.0 * s;
}

double log_det_A_eigen(double rho, const Eigen::VectorXd& eigenvalues) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    const double f = 1.0 - rho * eigenvalues(i);
    if (!(f > 0.0)) {
      std::ostringstream msg;
      msg << "rho = " << rho << " is outside the admissible set (1 - rho*lambda <= 0)";
      throw NumericalError(msg.str());
    }
    s += std::log1p(-rho * eigenvalues(i));
  }
  return s;
}

double log_det_A_lu(double rho, const WeightMatrix& w) {
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(w.n(), w.n()) - rho * w.dense();
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  const Eigen::MatrixXd& u = lu.matrixLU();
  double sign = lu.permutationP().determinant();
  double s = 0.0;
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    const double d = u(i, i);
    if (d == 0.0) throw NumericalError("I - rho W is singular");
    if (d < 0.0) sign = -sign;
    s += std::log(std::abs(d));
  }
  if (sign < 0.0) {
    std::ostringstream msg;
    msg << "rho = " << rho << " gives a negative determinant of I - rho W";
    throw NumericalError(msg.str());
  }
  return s;
}

double log_det_A(double rho, const WeightMatrix& w) {
  if (rho == 0.0) return 0.0;
  if (w.eigenvalues()) return log_det_A_eigen(rho, *w.eigenvalues());
  return log_det_A_lu(rho, w);
}

double trace_Ainv_W(double rho, const WeightMatrix& w) {
  if (w.eigenvalues()) {
    double s = 0.0;
    for (double l : *w.eigenvalues()) s += l / (1.0 - rho * l);
    return s;
  }
  const Eigen::MatrixXd wd = w.dense();
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(w.n(), w.n()) - rho * wd;
  return Eigen::PartialPivLU<Eigen::MatrixXd>(a).solve(wd).trace();
}

Eigen::MatrixXd solve_symmetric(const Eigen::MatrixXd& m, const Eigen::MatrixXd& rhs,
                                const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() == Eigen::Success) return llt.solve(rhs);
  const double scale = std::max(1.0, m.diagonal().cwiseAbs().mean());
  for (double jitter : {1e-10, 1e-9, 1e-8, 1e-7, 1e-6}) {
    Eigen::MatrixXd mj = m;
    mj.diagonal().array() += jitter * scale;
    llt.compute(mj);
    if (llt.info() == Eigen::Success) return llt.solve(rhs);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  std::ostringstream msg;
  msg << what << " are singular after jitter 1e-6 (eigenvalues in [" << ev(0) << ", "
      << ev(ev.size() - 1) << "], condition ~ "
      << (ev(0) != 0.0 ? std::abs(ev(ev.size() - 1) / ev(0)) : INFINITY) << ")";
  throw NumericalError(msg.str());
}

Eigen::VectorXd beta_gls(const SubDesign& mean, const Eigen::VectorXd& sigma,
                         const Eigen::VectorXd& ay) {
  if (sigma.size() != mean.X.rows() || ay.size() != mean.X.rows()) {
    throw InputError("beta_gls: dimension mismatch");
  }
  const Eigen::VectorXd w = sigma.array().square().inverse();
  const Eigen::MatrixXd xw = mean.X.transpose() * w.asDiagonal();
  const Eigen::MatrixXd f = xw * mean.X;
  const Eigen::MatrixXd m = f + mean.penalty_matrix() + mean.constraint_matrix(f);
  return solve_symmetric(m, xw * ay);
}

LikelihoodTerms likelihood_terms(const Parameters& theta, const DesignMatrices& design,
                                 const WeightMatrix& w, const Eigen::VectorXd& y,
                                 double clamp_bound) {
  const auto n = static_cast<double>(y.size());
  const ScaleEvaluation sc = evaluate_scale(design.scale, theta.alpha, clamp_bound);
  const Eigen::VectorXd ay = y - theta.rho * w.lag(y);
  const Eigen::VectorXd r = ay - design.mean.X * theta.beta;
  const double quad = (r.array() / sc.sigma.array()).square().sum();
  LikelihoodTerms t;
  t.loglik = -0.5 * n * std::log(2.0 * std::numbers::pi) - 0.5 * log_det_sigma(sc.sigma) +
             log_det_A(theta.rho, w) - 0.5 * quad;
  t.penalty = 0.5 * (theta.beta.dot(design.mean.penalty_matrix() * theta.beta) +
                     theta.alpha.dot(design.scale.penalty_matrix() * theta.alpha));
  t.penalized = t.loglik - t.penalty;
  t.clamped = sc.clamped;
  return t;
}

double penalized_loglik(const Parameters& theta, const DesignMatrices& design,
                        const WeightMatrix& w, const Eigen::VectorXd& y) {
  return likelihood_terms(theta, design, w, y).penalized;
}

Eigen::VectorXd score_beta(const Parameters& theta, const DesignMatrices& design,
                           const WeightMatrix& w, const Eigen::VectorXd& y) {
  const Eigen::VectorXd sigma = evaluate_scale(design.scale, theta.alpha).sigma;
  const Eigen::VectorXd r = y - theta.rho * w.lag(y) - design.mean.X * theta.beta;
  return design.mean.X.transpose() * (r.array() / sigma.array().square()).matrix() -
         design.mean.penalty_matrix() * theta.beta;
}

double score_rho(const Parameters& theta, const DesignMatrices& design, const WeightMatrix& w,
                 const Eigen::VectorXd& y) {
  const Eigen::VectorXd sigma = evaluate_scale(design.scale, theta.alpha).sigma;
  const Eigen::VectorXd wy = w.lag(y);
  const Eigen::VectorXd r = y - theta.rho * wy - design.mean.X * theta.beta;
  return -trace_Ainv_W(theta.rho, w) + (r.array() * wy.array() / sigma.array().square()).sum();
}

Eigen::VectorXd scale_score(const Eigen::VectorXd& residuals, const SubDesign& scale,
                            const Eigen::VectorXd& alpha, double clamp_bound) {
  const ScaleEvaluation sc = evaluate_scale(scale, alpha, clamp_bound);
  const Eigen::VectorXd u =
      ((residuals.array() / sc.sigma.array()).square() - 1.0) * sc.active.array();
  return scale.X.transpose() * u - scale.penalty_matrix() * alpha;
}

Eigen::VectorXd score_alpha(const Parameters& theta, const DesignMatrices& design,
                            const WeightMatrix& w, const Eigen::VectorXd& y) {
  const Eigen::VectorXd r = y - theta.rho * w.lag(y) - design.mean.X * theta.beta;
  return scale_score(r, design.scale, theta.alpha);
}

}  // namespace hetsar
