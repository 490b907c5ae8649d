#pragma once

#include "hetsar/data_table.hpp"
#include "hetsar/estimator.hpp"
#include "hetsar/weights.hpp"

#include <Eigen/LU>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace hetsar {

/// f(x) = 0.2 x^11 (10(1-x))^6 + 10 (10x)^3 (1-x)^10 on [0, 1].
double true_smooth(double x);
/// E f(U), U ~ U(0,1), by adaptive quadrature.
double true_smooth_mean();

enum class LayoutKind { grid_rook, points_invdist2, adjacency };

/// standard: x1 ~ N(0,1), x2 ~ N(2,1), x3 ~ U(0,1).
/// uniform:  x1 ~ U(1,10), x2 ~ U(0,1), x3 ~ U(0,1) (municipality study).
enum class CovariateSet { standard, uniform };

struct Layout {
  LayoutKind kind = LayoutKind::grid_rook;
  int rows = 0;
  int cols = 0;
  int n_points = 0;
  std::vector<Point> coordinates;  // overrides random points when non-empty
  std::string adjacency_text;      // contents of the adjacency document
};

enum class Estimator { h_am_sar, ml_sar, am_sar, gamlss_lag };

std::string estimator_name(Estimator e);
Estimator parse_estimator(const std::string& name);

struct Scenario {
  Layout layout;
  CovariateSet covariates = CovariateSet::standard;
  double rho = 0.0;
  double beta0 = 2.0;
  double beta1 = -0.5;  // net coefficient on x1
  double beta2 = 1.75;
  double alpha0 = 0.5;
  double alpha1 = 0.3;  // sigma = exp(alpha0 - alpha1 x2)
  int replicates = 1;
  std::uint64_t seed = 1;
  std::vector<Estimator> estimators{Estimator::h_am_sar};
  int num_basis = 20;

  void validate() const;
};

/// Objects shared by every replicate of a study: W with its spectrum, the
/// point set, and the LU of A = I - rho W.
struct StudyLayout {
  WeightMatrix w;
  std::vector<Point> points;
  std::shared_ptr<const Eigen::PartialPivLU<Eigen::MatrixXd>> a_lu;
};

StudyLayout build_study_layout(const Scenario& scenario);

struct SimulatedData {
  DataTable table;  // columns y, x1, x2, x3
  Eigen::VectorXd mu0;
  Eigen::VectorXd sigma;
};

/// Reduced-form draw y = A^-1 (mu0 + omega), deterministic in (seed, replicate).
SimulatedData simulate_dataset(const Scenario& scenario, const StudyLayout& layout,
                               int replicate_index);

struct SimulatedDataset {
  DataTable table;
  WeightMatrix w;
};
SimulatedDataset simulate_dataset(const Scenario& scenario, int replicate_index);

/// Mean/scale specification used for the semiparametric estimators.
ModelSpec simulation_spec(const Scenario& scenario, bool heteroscedastic = true);

ConvergenceOptions study_options();

FitResult fit_h_am_sar(const DataTable& data, const WeightMatrix& w, const Scenario& scenario,
                       const ConvergenceOptions& options = study_options());
FitResult fit_ml_sar(const DataTable& data, const WeightMatrix& w, bool compute_information = false);
FitResult fit_am_sar(const DataTable& data, const WeightMatrix& w, const Scenario& scenario,
                     const ConvergenceOptions& options = study_options());
/// Wy enters as an ordinary regressor named "Wy"; rho is held at 0.
FitResult fit_gamlss_lag(const DataTable& data, const WeightMatrix& w, const Scenario& scenario,
                         const ConvergenceOptions& options = study_options());

/// Estimates recorded per replicate. Absent parameters are NaN.
struct ReplicateEstimates {
  bool ok = false;
  std::string failure;
  double rho = 0.0;
  double beta0 = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
  double alpha0 = 0.0;
  double alpha1 = 0.0;  // table convention: minus the fitted slope on x2
  double mse = 0.0;
};

ReplicateEstimates estimates_of(Estimator e, const FitResult& fit);
ReplicateEstimates run_estimator(Estimator e, const DataTable& data, const WeightMatrix& w,
                                 const Scenario& scenario);

struct ParameterSummary {
  std::string parameter;
  double truth = 0.0;
  double mean = 0.0;
  std::optional<double> sd;  // absent with fewer than 2 successful replicates
  double bias = 0.0;
  int count = 0;
};

struct EstimatorReport {
  Estimator estimator = Estimator::h_am_sar;
  std::vector<ParameterSummary> parameters;
  std::vector<int> replicate_index;  // successful replicates, ascending
  std::vector<double> mse;           // aligned with replicate_index
  std::vector<ReplicateEstimates> replicates;  // all, by replicate index
  int failures = 0;

  const ParameterSummary* find(const std::string& parameter) const;
};

struct SimulationReport {
  Scenario scenario;
  std::string rng;
  std::vector<EstimatorReport> estimators;

  const EstimatorReport* find(Estimator e) const;
};

/// outcomes[r][k] is estimator k on replicate r.
using ReplicateTable = std::vector<std::vector<ReplicateEstimates>>;

namespace kernels {
ReplicateTable run_replicates_parallel(const Scenario& scenario, const StudyLayout& layout);
ReplicateTable run_replicates_serial(const Scenario& scenario, const StudyLayout& layout);
}  // namespace kernels

/// Reduction in replicate order; independent of how outcomes were produced.
SimulationReport aggregate(const Scenario& scenario, const ReplicateTable& outcomes);

struct StudyOptions {
  bool parallel = true;
  int threads = 0;  // 0: OpenMP default
};

SimulationReport run_study(const Scenario& scenario, const StudyOptions& options = {});

}  // namespace hetsar
