#include "hetsar/estimator.hpp"
#include "hetsar/inference.hpp"

#include <boost/math/tools/minima.hpp>

#include <cmath>
#include <limits>
#include <sstream>

namespace hetsar {

RhoSearch maximize_rho(const std::function<double(double)>& objective,
                       const std::function<double(double)>& derivative, RhoBounds bounds) {
  auto neg = [&](double r) { return -objective(r); };
  boost::uintmax_t max_iter = 500;
  const auto [x, fx] = boost::math::tools::brent_find_minima(
      neg, bounds.lo, bounds.hi, std::numeric_limits<double>::digits / 2, max_iter);
  RhoSearch out{x, -fx, false};
  if (derivative) {
    // Brent locates the optimum to ~sqrt(eps); bisection on the derivative
    // recovers full precision when it brackets the root.
    double a = std::max(bounds.lo, x - 1e-5);
    double b = std::min(bounds.hi, x + 1e-5);
    double da = derivative(a);
    const double db = derivative(b);
    if (da > 0.0 && db < 0.0) {
      for (int i = 0; i < 80 && b - a > 1e-15; ++i) {
        const double mid = 0.5 * (a + b);
        const double dm = derivative(mid);
        if (dm > 0.0) {
          a = mid;
          da = dm;
        } else {
          b = mid;
        }
      }
      const double polished = 0.5 * (a + b);
      const double fp = objective(polished);
      if (fp >= out.value - 1e-12 * std::abs(out.value)) out = {polished, fp, false};
    }
  }
  const double edge = 1e-5 * (bounds.hi - bounds.lo);
  out.at_bound = out.rho - bounds.lo < edge || bounds.hi - out.rho < edge;
  return out;
}

Eigen::VectorXd FitResult::fitted_mean() const { return rho * wy + design.mean.X * beta; }

Eigen::VectorXd FitResult::residuals() const { return y - rho * wy - design.mean.X * beta; }

Eigen::VectorXd FitResult::standardized_residuals() const {
  return residuals().cwiseQuotient(sigma);
}

double FitResult::mse() const { return (y - fitted_mean()).squaredNorm() / y.size(); }

namespace {

struct Workspace {
  DesignMatrices design;
  Eigen::VectorXd y;
  Eigen::VectorXd wy;
  const WeightMatrix& w;
  ConvergenceOptions options;
  bool select_mean = true;
  bool select_scale = true;
  bool scale_failed = false;
  std::vector<std::string> log;

  Workspace(DesignMatrices d, Eigen::VectorXd yy, const WeightMatrix& ww,
            const ConvergenceOptions& o)
      : design(std::move(d)), y(std::move(yy)), w(ww), options(o) {
    wy = w.lag(y);
  }

  double penalized(const Parameters& theta) const {
    return likelihood_terms(theta, design, w, y, options.clamp_bound).penalized;
  }
};

// Mean and scale refit on Ay for fixed rho (the GAMLSS-style inner problem),
// alternating beta | alpha and alpha | beta until l_p stabilizes.
void location_scale(Workspace& ws, Parameters& theta, bool reselect) {
  const Eigen::VectorXd ay = ws.y - theta.rho * ws.wy;
  double prev = -std::numeric_limits<double>::infinity();
  ScaleFitOptions scale_opts{ws.options.scale_score_tol, 100, ws.options.clamp_bound};
  for (int it = 0; it < ws.options.max_inner; ++it) {
    const ScaleEvaluation sc = evaluate_scale(ws.design.scale, theta.alpha, ws.options.clamp_bound);
    if (reselect && ws.select_mean && !ws.design.mean.blocks.empty()) {
      const Eigen::VectorXd weights = sc.sigma.array().square().inverse();
      ws.design.mean.set_psi(select_psi_gcv(ws.design.mean, weights, ay));
    }
    theta.beta = beta_gls(ws.design.mean, sc.sigma, ay);
    const Eigen::VectorXd r = ay - ws.design.mean.X * theta.beta;
    if (reselect && ws.select_scale && !ws.design.scale.blocks.empty()) {
      const Eigen::VectorXd eta = ws.design.scale.X * theta.alpha;
      const Eigen::VectorXd z =
          eta.array() + 0.5 * ((r.array() / sc.sigma.array()).square() - 1.0);
      ws.design.scale.set_psi(
          select_psi_gcv(ws.design.scale, Eigen::VectorXd::Constant(r.size(), 2.0), z));
    }
    try {
      theta.alpha = update_scale_model(r, ws.design.scale, theta.alpha, scale_opts);
    } catch (const ScaleConvergenceError& e) {
      theta.alpha = e.last_iterate;
      ws.scale_failed = true;
      ws.log.emplace_back(e.what());
    }
    const double obj = ws.penalized(theta);
    if (std::abs(obj - prev) <= 1e-10 * (1.0 + std::abs(obj))) return;
    prev = obj;
  }
  ws.log.emplace_back("location-scale refit reached max_inner iterations");
}

// Maximizes l_p over rho with beta profiled analytically and (alpha, psi) held.
// beta(rho) = b0 - rho b1 and the residual is e0 - rho e1, so the quadratic
// part is q0 - 2 rho q1 + rho^2 q2.
RhoSearch rho_step(Workspace& ws, Parameters& theta, RhoBounds bounds) {
  const auto& mean = ws.design.mean;
  const ScaleEvaluation sc = evaluate_scale(ws.design.scale, theta.alpha, ws.options.clamp_bound);
  const Eigen::VectorXd weights = sc.sigma.array().square().inverse();
  const Eigen::MatrixXd xw = mean.X.transpose() * weights.asDiagonal();
  const Eigen::MatrixXd f = xw * mean.X;
  const Eigen::MatrixXd penalty = mean.penalty_matrix();
  Eigen::MatrixXd rhs(mean.cols(), 2);
  rhs.col(0) = xw * ws.y;
  rhs.col(1) = xw * ws.wy;
  const Eigen::MatrixXd b = solve_symmetric(f + penalty + mean.constraint_matrix(f), rhs);
  const Eigen::VectorXd e0 = ws.y - mean.X * b.col(0);
  const Eigen::VectorXd e1 = ws.wy - mean.X * b.col(1);
  const double q0 = (weights.array() * e0.array().square()).sum() + b.col(0).dot(penalty * b.col(0));
  const double q1 = (weights.array() * e0.array() * e1.array()).sum() +
                    b.col(0).dot(penalty * b.col(1));
  const double q2 = (weights.array() * e1.array().square()).sum() + b.col(1).dot(penalty * b.col(1));

  auto objective = [&](double r) {
    return log_det_A(r, ws.w) - 0.5 * (q0 - 2.0 * r * q1 + r * r * q2);
  };
  std::function<double(double)> derivative;
  if (ws.w.eigenvalues()) {
    derivative = [&](double r) { return -trace_Ainv_W(r, ws.w) + q1 - r * q2; };
  }
  const RhoSearch rs = maximize_rho(objective, derivative, bounds);
  theta.rho = rs.rho;
  theta.beta = b.col(0) - rs.rho * b.col(1);
  return rs;
}

Eigen::VectorXd initial_beta(const SubDesign& mean, const Eigen::VectorXd& y) {
  SubDesign unpenalized = mean;
  unpenalized.set_psi(std::vector<double>(mean.blocks.size(), 0.0));
  return beta_gls(unpenalized, Eigen::VectorXd::Ones(y.size()), y);
}

void finalize(FitResult& out, const WeightMatrix& w, double clamp_bound, bool information) {
  const Parameters theta = out.parameters();
  const ScaleEvaluation sc = evaluate_scale(out.design.scale, out.alpha, clamp_bound);
  out.sigma = sc.sigma;
  out.clamp_count = sc.clamped;
  if (sc.clamped > 0) {
    out.log.push_back(std::to_string(sc.clamped) +
                      " scale linear predictor values clamped at +-" + std::to_string(clamp_bound));
  }
  const LikelihoodTerms lt = likelihood_terms(theta, out.design, w, out.y, clamp_bound);
  out.loglik = lt.loglik;
  out.penalized_loglik = lt.penalized;
  out.global_deviance = -2.0 * lt.loglik;
  out.weights_n = w.n();
  out.weights_total = w.total_weight();
  const EffectiveDf edf = effective_dfs(out);
  out.edf_mean = edf.mean;
  out.edf_scale = edf.scale;
  if (information) {
    const InformationMatrix info = fisher_information(out, w);
    out.fisher = info.assembled;
    out.covariance = info.covariance;
  }
}

}  // namespace

FitResult fit(const ModelSpec& spec, const DataTable& data, const WeightMatrix& w,
              const ConvergenceOptions& options) {
  spec.validate();
  if (static_cast<std::size_t>(w.n()) != data.rows()) {
    throw InputError("weight matrix has " + std::to_string(w.n()) + " units but data has " +
                     std::to_string(data.rows()) + " rows");
  }
  if (options.rho_tol <= 0.0 || options.max_outer < 1) {
    throw InputError("invalid convergence options");
  }
  Workspace ws(assemble_design(spec, data), data.column_vector(spec.response), w, options);
  ws.log = ws.design.warnings;
  if (options.fixed_psi_mean) {
    ws.design.mean.set_psi(*options.fixed_psi_mean);
    ws.select_mean = false;
  }
  if (options.fixed_psi_scale) {
    ws.design.scale.set_psi(*options.fixed_psi_scale);
    ws.select_scale = false;
  }
  const RhoBounds bounds = eigen_bounds(w);

  Parameters theta;
  theta.rho = options.fixed_rho.value_or(0.0);
  if (theta.rho <= bounds.lo || theta.rho >= bounds.hi) {
    throw NumericalError("fixed rho is outside the admissible interval");
  }
  const Eigen::VectorXd ay0 = ws.y - theta.rho * ws.wy;
  theta.beta = initial_beta(ws.design.mean, ay0);
  const Eigen::VectorXd r0 = ay0 - ws.design.mean.X * theta.beta;
  const double sd0 = std::sqrt((r0.array() - r0.mean()).square().sum() / std::max<double>(1.0, r0.size() - 1.0));
  theta.alpha = Eigen::VectorXd::Zero(ws.design.scale.cols());
  theta.alpha(0) = std::log(std::max(sd0, 1e-12));

  FitResult out;
  out.spec = spec;
  out.bounds = bounds;
  out.rho_estimated = !options.fixed_rho.has_value();
  auto record = [&](int iteration, const char* step) {
    out.trace.push_back({iteration, step, theta.rho, ws.penalized(theta)});
  };

  // Step 1: location-scale fit at the starting rho, psi selected.
  location_scale(ws, theta, true);
  record(0, "location_scale");
  bool converged = false;
  int iterations = 0;
  bool at_bound = false;
  if (!out.rho_estimated) {
    converged = true;
  } else {
    // Steps 2-3: first rho from the concentrated likelihood.
    at_bound = rho_step(ws, theta, bounds).at_bound;
    record(0, "rho");
    double rho_prev = theta.rho;
    double ll_prev = out.trace.back().penalized_loglik;
    const bool reselect = options.smoothing == SmoothingSchedule::every_iteration;
    for (int it = 1; it <= options.max_outer; ++it) {
      iterations = it;
      // Step 5: refit mean and scale on Ay (psi re-selected per schedule).
      location_scale(ws, theta, reselect);
      record(it, "location_scale");
      // Step 6: re-maximize for rho.
      at_bound = rho_step(ws, theta, bounds).at_bound;
      record(it, "rho");
      const double ll = out.trace.back().penalized_loglik;
      const bool rho_close = std::abs(theta.rho - rho_prev) < options.rho_tol;
      const bool ll_close = std::abs(ll - ll_prev) <= options.loglik_rel_tol * (1.0 + std::abs(ll_prev));
      if (rho_close && ll_close) {
        converged = true;
        break;
      }
      rho_prev = theta.rho;
      ll_prev = ll;
    }
    if (!converged) ws.log.emplace_back("outer loop did not converge within max_outer");
    // Step 8: final mean/scale fit at the converged rho.
    location_scale(ws, theta, reselect);
    record(iterations + 1, "location_scale");
  }
  if (at_bound) {
    ws.log.emplace_back("rho search stopped at an eigenvalue bound");
    converged = false;
  }
  if (ws.scale_failed) converged = false;

  out.rho = theta.rho;
  out.beta = theta.beta;
  out.alpha = theta.alpha;
  out.rho_at_bound = at_bound;
  out.iterations = iterations;
  out.converged = converged;
  out.design = std::move(ws.design);
  out.y = std::move(ws.y);
  out.wy = std::move(ws.wy);
  out.log = std::move(ws.log);
  finalize(out, w, options.clamp_bound, options.compute_information);
  return out;
}

FitResult fit_classical_sar(const std::string& response, const std::vector<std::string>& linear,
                            const DataTable& data, const WeightMatrix& w,
                            bool compute_information) {
  ModelSpec spec;
  spec.response = response;
  spec.mean_linear = linear;
  spec.validate();
  if (static_cast<std::size_t>(w.n()) != data.rows()) {
    throw InputError("weight matrix size does not match the data");
  }
  FitResult out;
  out.spec = spec;
  out.design = assemble_design(spec, data);
  out.y = data.column_vector(response);
  out.wy = w.lag(out.y);
  out.bounds = eigen_bounds(w);
  const auto& x = out.design.mean.X;
  const auto n = static_cast<double>(out.y.size());

  Eigen::MatrixXd rhs(x.cols(), 2);
  rhs.col(0) = x.transpose() * out.y;
  rhs.col(1) = x.transpose() * out.wy;
  const Eigen::MatrixXd b = solve_symmetric(x.transpose() * x, rhs, "OLS normal equations");
  const Eigen::VectorXd e0 = out.y - x * b.col(0);
  const Eigen::VectorXd e1 = out.wy - x * b.col(1);
  const double q0 = e0.squaredNorm();
  const double q1 = e0.dot(e1);
  const double q2 = e1.squaredNorm();
  auto quad = [&](double r) { return q0 - 2.0 * r * q1 + r * r * q2; };
  auto objective = [&](double r) { return log_det_A(r, w) - 0.5 * n * std::log(quad(r) / n); };
  std::function<double(double)> derivative;
  if (w.eigenvalues()) {
    derivative = [&](double r) { return -trace_Ainv_W(r, w) + n * (q1 - r * q2) / quad(r); };
  }
  const RhoSearch rs = maximize_rho(objective, derivative, out.bounds);
  out.rho = rs.rho;
  out.beta = b.col(0) - rs.rho * b.col(1);
  out.alpha = Eigen::VectorXd::Constant(1, 0.5 * std::log(quad(rs.rho) / n));
  out.rho_at_bound = rs.at_bound;
  out.converged = !rs.at_bound;
  out.iterations = 1;
  if (rs.at_bound) out.log.emplace_back("rho search stopped at an eigenvalue bound");
  finalize(out, w, kDefaultClampBound, compute_information);
  out.trace.push_back({1, "rho", out.rho, out.penalized_loglik});
  return out;
}

}  // namespace hetsar
