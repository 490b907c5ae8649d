#include "hetsar/sim.hpp"
#include "hetsar/rng.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <random>

namespace hetsar {

double true_smooth(double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw InputError("true smooth is defined on [0, 1]");
  return 0.2 * std::pow(x, 11) * std::pow(10.0 * (1.0 - x), 6) +
         10.0 * std::pow(10.0 * x, 3) * std::pow(1.0 - x, 10);
}

double true_smooth_mean() {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(true_smooth, 0.0, 1.0, 15,
                                                                        1e-14);
}

std::string estimator_name(Estimator e) {
  switch (e) {
    case Estimator::h_am_sar: return "H_AM_SAR";
    case Estimator::ml_sar: return "ML_SAR";
    case Estimator::am_sar: return "AM_SAR";
    case Estimator::gamlss_lag: return "GAMLSS_LAG";
  }
  return "?";
}

Estimator parse_estimator(const std::string& name) {
  for (Estimator e : {Estimator::h_am_sar, Estimator::ml_sar, Estimator::am_sar,
                      Estimator::gamlss_lag}) {
    if (estimator_name(e) == name) return e;
  }
  throw InputError("unknown estimator '" + name + "'");
}

void Scenario::validate() const {
  if (replicates < 1) throw InputError("scenario needs replicates >= 1");
  if (estimators.empty()) throw InputError("scenario lists no estimators");
  if (!std::isfinite(rho)) throw InputError("rho must be finite");
  switch (layout.kind) {
    case LayoutKind::grid_rook:
      if (layout.rows < 1 || layout.cols < 1 || layout.rows * layout.cols < 3) {
        throw InputError("grid layout needs rows*cols >= 3");
      }
      break;
    case LayoutKind::points_invdist2:
      if (layout.coordinates.empty() && layout.n_points < 3) {
        throw InputError("points layout needs n >= 3 or a coordinate list");
      }
      break;
    case LayoutKind::adjacency:
      if (layout.adjacency_text.empty()) throw InputError("adjacency layout needs a document");
      break;
  }
}

StudyLayout build_study_layout(const Scenario& scenario) {
  scenario.validate();
  std::vector<Point> points;
  std::optional<WeightMatrix> w;
  switch (scenario.layout.kind) {
    case LayoutKind::grid_rook:
      w = build_rook_grid(scenario.layout.rows, scenario.layout.cols);
      break;
    case LayoutKind::points_invdist2: {
      points = scenario.layout.coordinates;
      if (points.empty()) {
        // One point set per study, from a stream no replicate uses.
        auto rng = substream(scenario.seed, ~std::uint64_t{0});
        std::uniform_real_distribution<double> u(0.0, 1.0);
        points.resize(static_cast<std::size_t>(scenario.layout.n_points));
        for (auto& p : points) {
          p.x = u(rng);
          p.y = u(rng);
        }
      }
      w = build_inverse_distance_squared(points);
      break;
    }
    case LayoutKind::adjacency:
      w = row_standardize(parse_adjacency(scenario.layout.adjacency_text));
      break;
  }
  const RhoBounds b = w->bounds().value_or(RhoBounds{-1.0 + kRhoBoundEpsilon, 1.0 - kRhoBoundEpsilon});
  if (scenario.rho <= b.lo || scenario.rho >= b.hi) {
    throw InputError("rho = " + std::to_string(scenario.rho) + " is outside the eigen bounds (" +
                     std::to_string(b.lo) + ", " + std::to_string(b.hi) + ")");
  }
  StudyLayout out{*w, std::move(points), nullptr};
  if (scenario.rho != 0.0) {
    const Eigen::Index n = out.w.n();
    out.a_lu = std::make_shared<const Eigen::PartialPivLU<Eigen::MatrixXd>>(
        Eigen::MatrixXd(Eigen::MatrixXd::Identity(n, n) - scenario.rho * out.w.dense()));
  }
  return out;
}

SimulatedData simulate_dataset(const Scenario& scenario, const StudyLayout& layout,
                               int replicate_index) {
  if (replicate_index < 0) throw InputError("replicate index must be nonnegative");
  const Eigen::Index n = layout.w.n();
  auto rng = substream(scenario.seed, static_cast<std::uint64_t>(replicate_index));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> x1(n), x2(n), x3(n);
  if (scenario.covariates == CovariateSet::standard) {
    for (auto& v : x1) v = normal(rng);
    for (auto& v : x2) v = 2.0 + normal(rng);
  } else {
    for (auto& v : x1) v = 1.0 + 9.0 * unit(rng);
    for (auto& v : x2) v = unit(rng);
  }
  for (auto& v : x3) v = unit(rng);

  SimulatedData out;
  out.mu0.resize(n);
  out.sigma.resize(n);
  Eigen::VectorXd e(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.mu0(i) = scenario.beta0 + scenario.beta1 * x1[i] + scenario.beta2 * x2[i] +
                 true_smooth(x3[i]);
    out.sigma(i) = std::exp(scenario.alpha0 - scenario.alpha1 * x2[i]);
  }
  for (Eigen::Index i = 0; i < n; ++i) e(i) = out.mu0(i) + out.sigma(i) * normal(rng);
  Eigen::VectorXd y = e;
  if (scenario.rho != 0.0) {
    if (!layout.a_lu) throw InputError("study layout was built for a different rho");
    y = layout.a_lu->solve(e);
  }
  out.table.add_column("y", std::vector<double>(y.data(), y.data() + n));
  out.table.add_column("x1", std::move(x1));
  out.table.add_column("x2", std::move(x2));
  out.table.add_column("x3", std::move(x3));
  return out;
}

SimulatedDataset simulate_dataset(const Scenario& scenario, int replicate_index) {
  StudyLayout layout = build_study_layout(scenario);
  SimulatedData d = simulate_dataset(scenario, layout, replicate_index);
  return {std::move(d.table), std::move(layout.w)};
}

}  // namespace hetsar
