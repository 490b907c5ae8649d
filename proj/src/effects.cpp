#include "hetsar/effects.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>

namespace hetsar {

namespace {

Eigen::VectorXd centered(const Eigen::VectorXd& values, const WeightMatrix& w) {
  if (values.size() != w.n()) throw InputError("values and weight matrix differ in length");
  if (values.size() < 3) throw InputError("Moran's I needs at least 3 units");
  if (!values.allFinite()) throw InputError("Moran's I: values must be finite");
  Eigen::VectorXd z = values.array() - values.mean();
  if (z.squaredNorm() <= 1e-24 * std::max(1.0, values.squaredNorm())) {
    throw InputError("Moran's I: values are constant (zero variance)");
  }
  return z;
}

double statistic_of_centered(const Eigen::VectorXd& z, const WeightMatrix& w) {
  const double n = static_cast<double>(z.size());
  return n / w.total_weight() * z.dot(w.lag(z)) / z.squaredNorm();
}

}  // namespace

ImpactSummary impacts(double beta, double rho, const WeightMatrix& w, const std::string& variable) {
  const Eigen::Index n = w.n();
  if (n > kMaxImpactN) throw InputError("impacts are limited to n <= 2000");
  ImpactSummary s;
  s.variable = variable;
  s.coefficient = beta;
  if (rho == 0.0) {
    s.direct = beta;
    s.total = beta;
    return s;
  }
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) - rho * w.dense();
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  if (!(std::abs(lu.determinant()) > 0.0)) throw NumericalError("I - rho W is singular");
  const Eigen::MatrixXd inv = lu.solve(Eigen::MatrixXd::Identity(n, n));
  const double dn = static_cast<double>(n);
  s.direct = beta * inv.trace() / dn;
  s.total = beta * inv.sum() / dn;
  s.indirect = s.total - s.direct;
  return s;
}

ImpactSummary impacts(const FitResult& fit, const WeightMatrix& w, const std::string& variable) {
  const SubDesign& mean = fit.design.mean;
  if (mean.find_block(variable)) {
    throw InputError("impacts for smooth term '" + variable + "' are not supported");
  }
  const auto it = std::find(mean.column_names.begin(),
                            mean.column_names.begin() + mean.num_unpenalized, variable);
  if (it == mean.column_names.begin() + mean.num_unpenalized || variable == "(Intercept)") {
    throw InputError("'" + variable + "' is not a linear term of the mean model");
  }
  if (w.n() != fit.weights_n) throw InputError("weight matrix does not match the fit");
  return impacts(fit.beta(it - mean.column_names.begin()), fit.rho, w, variable);
}

double moran_statistic(const Eigen::VectorXd& values, const WeightMatrix& w) {
  return statistic_of_centered(centered(values, w), w);
}

std::vector<std::pair<double, double>> moran_scatter(const Eigen::VectorXd& values,
                                                     const WeightMatrix& w) {
  const Eigen::VectorXd z = centered(values, w);
  const Eigen::VectorXd lag = w.lag(z);
  std::vector<std::pair<double, double>> out(static_cast<std::size_t>(z.size()));
  for (Eigen::Index i = 0; i < z.size(); ++i) out[i] = {z(i), lag(i)};
  return out;
}

MoranResult morans_i(const Eigen::VectorXd& values, const WeightMatrix& w, int permutations,
                     std::uint64_t seed) {
  if (permutations < kMinPermutations) throw InputError("at least 99 permutations are required");
  const Eigen::VectorXd z = centered(values, w);
  MoranResult r;
  r.statistic = statistic_of_centered(z, w);
  r.expected = -1.0 / (static_cast<double>(z.size()) - 1.0);
  r.permutations = permutations;
  const int hits = kernels::moran_exceedances_parallel(z, w, r.statistic, permutations, seed);
  r.p_value = (1.0 + hits) / (permutations + 1.0);
  const Eigen::VectorXd lag = w.lag(z);
  r.scatter.resize(static_cast<std::size_t>(z.size()));
  for (Eigen::Index i = 0; i < z.size(); ++i) r.scatter[i] = {z(i), lag(i)};
  return r;
}

}  // namespace hetsar
