#include "hetsar/splines.hpp"

#include "hetsar/errors.hpp"

#include <algorithm>
#include <cmath>

namespace hetsar {

KnotGrid KnotGrid::equidistant(double lo, double hi, int num_basis, int degree) {
  if (degree < 0) throw InputError("spline degree must be nonnegative");
  if (num_basis <= degree) throw InputError("num_basis must exceed the spline degree");
  if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw InputError("spline covariate has zero or non-finite range");
  }
  KnotGrid g{lo, hi, num_basis, degree, {}};
  const int intervals = num_basis - degree;
  const double h = (hi - lo) / intervals;
  g.knots.resize(static_cast<std::size_t>(num_basis + degree + 1));
  for (int j = 0; j < num_basis + degree + 1; ++j) {
    g.knots[j] = lo + (j - degree) * h;
  }
  // Pin the interior end exactly.
  g.knots[static_cast<std::size_t>(num_basis)] = hi;
  return g;
}

Eigen::MatrixXd bspline_basis(const KnotGrid& grid, std::span<const double> x) {
  const int k = grid.num_basis;
  const int d = grid.degree;
  const auto& t = grid.knots;
  const double tol = 1e-10 * (grid.hi - grid.lo);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(x.size()), k);
  std::vector<double> left(d + 1), right(d + 1), vals(d + 1);
  for (std::size_t r = 0; r < x.size(); ++r) {
    double xv = x[r];
    if (!std::isfinite(xv)) throw InputError("non-finite spline covariate value");
    if (xv < grid.lo - tol || xv > grid.hi + tol) {
      throw InputError("point outside the spline knot span (no extrapolation)");
    }
    xv = std::clamp(xv, grid.lo, grid.hi);
    // Interval m with t[m] <= x < t[m+1], m in [d, k-1]; right end goes to the last one.
    int m = d + static_cast<int>(std::floor((xv - grid.lo) / grid.spacing()));
    m = std::clamp(m, d, k - 1);
    while (m > d && xv < t[m]) --m;
    while (m < k - 1 && xv >= t[m + 1]) ++m;
    // Triangular Cox-de Boor scheme for the d+1 nonzero functions.
    vals[0] = 1.0;
    for (int j = 1; j <= d; ++j) {
      left[j] = xv - t[m + 1 - j];
      right[j] = t[m + j] - xv;
      double saved = 0.0;
      for (int q = 0; q < j; ++q) {
        const double tmp = vals[q] / (right[q + 1] + left[j - q]);
        vals[q] = saved + right[q + 1] * tmp;
        saved = left[j - q] * tmp;
      }
      vals[j] = saved;
    }
    for (int q = 0; q <= d; ++q) b(static_cast<Eigen::Index>(r), m - d + q) = vals[q];
  }
  return b;
}

Eigen::MatrixXd bspline_basis(std::span<const double> x, int num_basis, int degree) {
  if (x.empty()) throw InputError("spline covariate is empty");
  const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
  return bspline_basis(KnotGrid::equidistant(*mn, *mx, num_basis, degree), x);
}

Eigen::MatrixXd difference_penalty(int num_basis, int order) {
  if (order < 1) throw InputError("penalty order must be at least 1");
  if (order >= num_basis) throw InputError("penalty order must be below num_basis");
  Eigen::MatrixXd d = Eigen::MatrixXd::Identity(num_basis, num_basis);
  for (int o = 0; o < order; ++o) {
    const Eigen::Index rows = d.rows() - 1;
    d = (d.bottomRows(rows) - d.topRows(rows)).eval();
  }
  return d.transpose() * d;
}

CenteredBasis center_basis(const Eigen::MatrixXd& b) {
  if (b.rows() == 0 || b.cols() == 0) throw InputError("cannot center an empty basis");
  CenteredBasis out;
  out.offsets = b.colwise().mean().transpose();
  out.basis = b.rowwise() - out.offsets.transpose();
  return out;
}

SmoothTermBasis make_smooth_term(const SmoothConfig& config, std::span<const double> x,
                                 double psi) {
  if (x.empty()) throw InputError("smooth term '" + config.variable + "' has no data");
  const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
  if (!(*mx > *mn)) {
    throw InputError("smooth term '" + config.variable + "' has a constant covariate");
  }
  SmoothTermBasis term;
  term.variable_name = config.variable;
  term.knots = KnotGrid::equidistant(*mn, *mx, config.num_basis, config.degree);
  term.degree = config.degree;
  auto centered = center_basis(bspline_basis(term.knots, x));
  term.basis = std::move(centered.basis);
  term.offsets = std::move(centered.offsets);
  term.penalty = difference_penalty(config.num_basis, config.penalty_order);
  term.penalty_order = config.penalty_order;
  term.psi = psi;
  return term;
}

Eigen::MatrixXd smooth_design_rows(const SmoothTermBasis& term, std::span<const double> grid) {
  Eigen::MatrixXd rows = bspline_basis(term.knots, grid);
  rows.rowwise() -= term.offsets.transpose();
  return rows;
}

Eigen::VectorXd evaluate_smooth(const SmoothTermBasis& term, const Eigen::VectorXd& coef,
                                std::span<const double> grid) {
  if (coef.size() != term.size()) throw InputError("smooth coefficient length mismatch");
  return smooth_design_rows(term, grid) * coef;
}

}  // namespace hetsar
