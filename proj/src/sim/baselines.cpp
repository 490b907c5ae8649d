#include "hetsar/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hetsar {

ModelSpec simulation_spec(const Scenario& scenario, bool heteroscedastic) {
  ModelSpec spec;
  spec.response = "y";
  spec.mean_linear = {"x1", "x2"};
  spec.mean_smooth = {SmoothConfig{"x3", scenario.num_basis, 3, 2}};
  if (heteroscedastic) spec.scale_linear = {"x2"};
  return spec;
}

ConvergenceOptions study_options() {
  ConvergenceOptions o;
  o.compute_information = false;
  return o;
}

FitResult fit_h_am_sar(const DataTable& data, const WeightMatrix& w, const Scenario& scenario,
                       const ConvergenceOptions& options) {
  return fit(simulation_spec(scenario, true), data, w, options);
}

FitResult fit_ml_sar(const DataTable& data, const WeightMatrix& w, bool compute_information) {
  return fit_classical_sar("y", {"x1", "x2", "x3"}, data, w, compute_information);
}

FitResult fit_am_sar(const DataTable& data, const WeightMatrix& w, const Scenario& scenario,
                     const ConvergenceOptions& options) {
  return fit(simulation_spec(scenario, false), data, w, options);
}

FitResult fit_gamlss_lag(const DataTable& data, const WeightMatrix& w, const Scenario& scenario,
                         const ConvergenceOptions& options) {
  DataTable augmented = data;
  const Eigen::VectorXd wy = w.lag(data.column_vector("y"));
  augmented.add_column("Wy", std::vector<double>(wy.data(), wy.data() + wy.size()));
  ModelSpec spec = simulation_spec(scenario, true);
  spec.mean_linear.insert(spec.mean_linear.begin(), "Wy");
  ConvergenceOptions o = options;
  o.fixed_rho = 0.0;
  return fit(spec, augmented, w, o);
}

namespace {

double coefficient(const SubDesign& d, const Eigen::VectorXd& coef, const std::string& name) {
  const auto it = std::find(d.column_names.begin(), d.column_names.end(), name);
  if (it == d.column_names.end()) return std::numeric_limits<double>::quiet_NaN();
  return coef(it - d.column_names.begin());
}

}  // namespace

ReplicateEstimates estimates_of(Estimator e, const FitResult& fit) {
  ReplicateEstimates r;
  r.ok = fit.converged;
  if (!fit.converged) r.failure = fit.log.empty() ? "not converged" : fit.log.back();
  const SubDesign& m = fit.design.mean;
  r.rho = e == Estimator::gamlss_lag ? coefficient(m, fit.beta, "Wy") : fit.rho;
  r.beta0 = coefficient(m, fit.beta, "(Intercept)");
  r.beta1 = coefficient(m, fit.beta, "x1");
  r.beta2 = coefficient(m, fit.beta, "x2");
  r.alpha0 = fit.alpha(0);
  r.alpha1 = -coefficient(fit.design.scale, fit.alpha, "x2");
  r.mse = fit.mse();
  return r;
}

ReplicateEstimates run_estimator(Estimator e, const DataTable& data, const WeightMatrix& w,
                                 const Scenario& scenario) {
  try {
    switch (e) {
      case Estimator::h_am_sar: return estimates_of(e, fit_h_am_sar(data, w, scenario));
      case Estimator::ml_sar: return estimates_of(e, fit_ml_sar(data, w));
      case Estimator::am_sar: return estimates_of(e, fit_am_sar(data, w, scenario));
      case Estimator::gamlss_lag: return estimates_of(e, fit_gamlss_lag(data, w, scenario));
    }
  } catch (const std::exception& ex) {
    ReplicateEstimates r;
    r.failure = ex.what();
    return r;
  }
  return {};
}

}  // namespace hetsar
