#include "hetsar/inference.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <sstream>

namespace hetsar {

namespace {

double chi_square_upper(double statistic, double df) {
  if (statistic <= 0.0) return 1.0;
  const boost::math::chi_squared dist(df);
  return boost::math::cdf(boost::math::complement(dist, statistic));
}

Eigen::Index coefficient_offset(const FitResult& fit, Submodel s) {
  return s == Submodel::mean ? 0 : fit.alpha_offset();
}

const Eigen::VectorXd& coefficients(const FitResult& fit, Submodel s) {
  return s == Submodel::mean ? fit.beta : fit.alpha;
}

void require_covariance(const FitResult& fit) {
  if (!fit.has_information()) throw InputError("fit has no information matrix");
}

}  // namespace

InformationMatrix fisher_information(const FitResult& fit, const WeightMatrix& w) {
  const auto& xm = fit.design.mean.X;
  const auto& xs = fit.design.scale.X;
  const Eigen::Index p = xm.cols();
  const Eigen::Index q = xs.cols();
  const Eigen::Index n = xm.rows();
  if (w.n() != n) throw InputError("weight matrix does not match the fit");

  const ScaleEvaluation sc = evaluate_scale(fit.design.scale, fit.alpha);
  const Eigen::VectorXd inv_var = sc.sigma.array().square().inverse();
  const Eigen::VectorXd var = sc.sigma.array().square();

  InformationMatrix info;
  info.has_rho = fit.rho_estimated;
  const Eigen::MatrixXd xw = xm.transpose() * inv_var.asDiagonal();
  const Eigen::MatrixXd f_mean = xw * xm;
  info.beta_beta = f_mean + fit.design.mean.penalty_matrix();
  info.beta_alpha = Eigen::MatrixXd::Zero(p, q);
  const Eigen::MatrixXd f_scale = 2.0 * xs.transpose() * sc.active.asDiagonal() * xs;
  info.alpha_alpha = f_scale + fit.design.scale.penalty_matrix();

  const Eigen::Index dim = p + q + (info.has_rho ? 1 : 0);
  const Eigen::Index a0 = p + (info.has_rho ? 1 : 0);
  info.assembled = Eigen::MatrixXd::Zero(dim, dim);
  info.assembled.topLeftCorner(p, p) = info.beta_beta + fit.design.mean.constraint_matrix(f_mean);
  info.assembled.block(a0, a0, q, q) =
      info.alpha_alpha + fit.design.scale.constraint_matrix(f_scale);

  if (info.has_rho) {
    // B = W A^-1, formed once.
    const Eigen::MatrixXd wd = w.dense();
    const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - fit.rho * wd;
    const Eigen::MatrixXd b = wd * Eigen::PartialPivLU<Eigen::MatrixXd>(a).inverse();
    const Eigen::VectorXd b_mu = b * (xm * fit.beta);
    info.beta_rho = xw * b_mu;
    const double tr_b2 = (b.array() * b.transpose().array()).sum();
    // tr(Sigma B' Sigma^-1 B) = sum_ij sigma_j^2 B_ij^2 / sigma_i^2
    const double tr_weighted = (inv_var.asDiagonal() * b.array().square().matrix() * var).sum();
    info.rho_rho = tr_b2 + tr_weighted + b_mu.dot(inv_var.asDiagonal() * b_mu);
    const Eigen::VectorXd diag_b = b.diagonal().cwiseProduct(sc.active);
    info.rho_alpha = 2.0 * xs.transpose() * diag_b;
    info.assembled.block(0, p, p, 1) = info.beta_rho;
    info.assembled.block(p, 0, 1, p) = info.beta_rho.transpose();
    info.assembled(p, p) = info.rho_rho;
    info.assembled.block(p, a0, 1, q) = info.rho_alpha.transpose();
    info.assembled.block(a0, p, q, 1) = info.rho_alpha;
  }

  Eigen::LLT<Eigen::MatrixXd> llt(info.assembled);
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(info.assembled, Eigen::EigenvaluesOnly);
    std::ostringstream msg;
    msg << "information matrix is not positive definite (smallest eigenvalue "
        << es.eigenvalues()(0) << ", largest " << es.eigenvalues()(dim - 1) << ")";
    throw NumericalError(msg.str());
  }
  info.covariance = llt.solve(Eigen::MatrixXd::Identity(dim, dim));
  info.covariance = 0.5 * (info.covariance + info.covariance.transpose()).eval();
  return info;
}

TestResult wald_test(double estimate, double null_value, double se) {
  if (!(se > 0.0) || !std::isfinite(se)) throw InputError("Wald test needs a positive standard error");
  TestResult t;
  t.kind = TestKind::wald_z;
  t.statistic = (estimate - null_value) / se;
  t.df = 1.0;
  t.p_value = std::min(1.0, std::erfc(std::abs(t.statistic) / std::sqrt(2.0)));
  return t;
}

TestResult lr_test(const FitResult& fit_null, const FitResult& fit_alt) {
  if (fit_null.y.size() != fit_alt.y.size() || fit_null.y != fit_alt.y) {
    throw InputError("likelihood-ratio test needs fits to the same data");
  }
  if (!fit_null.converged || !fit_alt.converged) {
    throw InputError("likelihood-ratio test needs converged fits");
  }
  TestResult t;
  t.kind = TestKind::lr_chisq;
  double lambda = fit_null.global_deviance - fit_alt.global_deviance;
  // Fits sharing psi maximize the same l_p, so compare that instead: the
  // unpenalized difference can dip below zero at converged fits.
  const bool same_psi = fit_null.design.mean.psi() == fit_alt.design.mean.psi() &&
                        fit_null.design.scale.psi() == fit_alt.design.scale.psi();
  const double shortfall = same_psi ? 2.0 * (fit_null.penalized_loglik - fit_alt.penalized_loglik)
                                    : -lambda;
  if (shortfall > 1e-6) {
    std::ostringstream msg;
    msg << "alternative fits worse than the null (Lambda = " << lambda
        << ", penalized shortfall " << shortfall
        << "); the alternative fit has probably not converged";
    throw NumericalError(msg.str());
  }
  lambda = std::max(lambda, 0.0);
  auto total_df = [](const FitResult& f) {
    return f.edf_mean + f.edf_scale + (f.rho_estimated ? 1.0 : 0.0);
  };
  const double df = total_df(fit_alt) - total_df(fit_null);
  t.statistic = lambda;
  if (std::abs(df) < 1e-8 && lambda <= 1e-6) {
    // Same model: nothing to test.
    t.df = 0.0;
    t.p_value = 1.0;
    return t;
  }
  if (!(df > 0.0)) throw InputError("likelihood-ratio test: alternative is not larger than the null");
  t.df = df;
  t.p_value = chi_square_upper(lambda, df);
  return t;
}

TestResult rho_lr_test(const FitResult& fit_alt, const DataTable& data, const WeightMatrix& w) {
  ConvergenceOptions opts;
  opts.fixed_rho = 0.0;
  opts.fixed_psi_mean = fit_alt.design.mean.psi();
  opts.fixed_psi_scale = fit_alt.design.scale.psi();
  opts.compute_information = false;
  const FitResult null_fit = fit(fit_alt.spec, data, w, opts);
  return lr_test(null_fit, fit_alt);
}

Eigen::VectorXd standard_errors(const FitResult& fit, Submodel submodel) {
  require_covariance(fit);
  const auto& coef = coefficients(fit, submodel);
  const Eigen::Index off = coefficient_offset(fit, submodel);
  return fit.covariance.diagonal().segment(off, coef.size()).cwiseMax(0.0).cwiseSqrt();
}

double rho_standard_error(const FitResult& fit) {
  require_covariance(fit);
  if (!fit.rho_estimated) throw InputError("rho was not estimated in this fit");
  return std::sqrt(fit.covariance(fit.rho_index(), fit.rho_index()));
}

TestResult linear_hypothesis(const FitResult& fit, const Eigen::MatrixXd& c,
                             const Eigen::VectorXd& d, Submodel submodel) {
  require_covariance(fit);
  const SubDesign& design = fit.design.of(submodel);
  const Eigen::Index k = design.num_unpenalized;
  Eigen::MatrixXd cu;
  if (c.cols() == k) {
    cu = c;
  } else if (c.cols() == design.cols()) {
    if (c.rightCols(design.cols() - k).cwiseAbs().maxCoeff() != 0.0) {
      throw InputError("hypothesis matrix touches penalized (smooth) coefficients");
    }
    cu = c.leftCols(k);
  } else {
    throw InputError("hypothesis matrix has the wrong number of columns");
  }
  if (d.size() != cu.rows()) throw InputError("hypothesis vector length mismatch");
  if (cu.rows() == 0 || cu.rows() > k) throw InputError("hypothesis matrix has too many rows");
  const Eigen::Index off = coefficient_offset(fit, submodel);
  const Eigen::MatrixXd v = fit.covariance.block(off, off, k, k);
  const Eigen::VectorXd u = cu * coefficients(fit, submodel).head(k) - d;
  const Eigen::MatrixXd s = cu * v * cu.transpose();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(s);
  if (lu.rank() < s.rows()) throw NumericalError("C V C' is rank deficient");
  TestResult t;
  t.kind = TestKind::f_linear;
  t.statistic = u.dot(lu.solve(u));
  t.df = static_cast<double>(Eigen::FullPivLU<Eigen::MatrixXd>(cu).rank());
  t.p_value = chi_square_upper(t.statistic, t.df);
  return t;
}

std::vector<double> smooth_grid(const FitResult& fit, Submodel submodel, const std::string& term,
                                int points) {
  const PenaltyBlock* block = fit.design.of(submodel).find_block(term);
  if (!block) throw InputError("'" + term + "' is not a smooth term of that submodel");
  if (points < 2) throw InputError("curve grid needs at least 2 points");
  std::vector<double> grid(static_cast<std::size_t>(points));
  const double lo = block->term.knots.lo;
  const double hi = block->term.knots.hi;
  for (int i = 0; i < points; ++i) grid[i] = lo + (hi - lo) * i / (points - 1);
  grid.back() = hi;
  return grid;
}

CurveTable smooth_ci(const FitResult& fit, Submodel submodel, const std::string& term,
                     const std::vector<double>& grid, double level) {
  require_covariance(fit);
  if (!(level > 0.0 && level < 1.0)) throw InputError("confidence level must be in (0, 1)");
  const PenaltyBlock* block = fit.design.of(submodel).find_block(term);
  if (!block) throw InputError("'" + term + "' is not a smooth term of that submodel");
  const Eigen::MatrixXd rows = smooth_design_rows(block->term, grid);
  const Eigen::Index start = coefficient_offset(fit, submodel) + block->columns.start;
  const Eigen::Index k = block->columns.size;
  const Eigen::VectorXd coef = coefficients(fit, submodel).segment(block->columns.start, k);
  const Eigen::MatrixXd v = fit.covariance.block(start, start, k, k);
  const Eigen::VectorXd fhat = rows * coef;
  const Eigen::VectorXd var = (rows * v).cwiseProduct(rows).rowwise().sum();
  const double z = boost::math::quantile(boost::math::normal(), 0.5 + 0.5 * level);
  CurveTable t;
  t.grid = grid;
  for (Eigen::Index i = 0; i < fhat.size(); ++i) {
    const double half = z * std::sqrt(std::max(0.0, var(i)));
    t.fit.push_back(fhat(i));
    t.lower.push_back(fhat(i) - half);
    t.upper.push_back(fhat(i) + half);
  }
  return t;
}

std::vector<double> block_effective_dfs(const SubDesign& design, const Eigen::VectorXd& weights) {
  std::vector<double> out;
  if (design.blocks.empty()) return out;
  const Eigen::MatrixXd f = design.X.transpose() * weights.asDiagonal() * design.X;
  const Eigen::MatrixXd m = f + design.penalty_matrix() + design.constraint_matrix(f);
  const Eigen::MatrixXd h = solve_symmetric(m, f, "effective-df system");
  for (const auto& b : design.blocks) {
    out.push_back(h.diagonal().segment(b.columns.start, b.columns.size).sum());
  }
  return out;
}

EffectiveDf effective_dfs(const FitResult& fit) {
  const ScaleEvaluation sc = evaluate_scale(fit.design.scale, fit.alpha);
  EffectiveDf e;
  e.mean_blocks = block_effective_dfs(fit.design.mean, sc.sigma.array().square().inverse());
  e.scale_blocks = block_effective_dfs(fit.design.scale, 2.0 * sc.active);
  e.mean = static_cast<double>(fit.design.mean.num_unpenalized);
  for (double v : e.mean_blocks) e.mean += v;
  e.scale = static_cast<double>(fit.design.scale.num_unpenalized);
  for (double v : e.scale_blocks) e.scale += v;
  e.error = static_cast<double>(fit.y.size()) - e.mean - e.scale;
  return e;
}

}  // namespace hetsar
