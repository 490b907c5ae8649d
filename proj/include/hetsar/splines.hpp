#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace hetsar {

/// User-facing configuration of one penalized smooth term.
struct SmoothConfig {
  std::string variable;
  int num_basis = 20;
  int degree = 3;
  int penalty_order = 2;
};

/// Equidistant knot layout: interior knots span [lo, hi] in (num_basis - degree)
/// intervals, extended by `degree` knots of the same spacing on each side.
struct KnotGrid {
  double lo = 0.0;
  double hi = 1.0;
  int num_basis = 0;
  int degree = 0;
  std::vector<double> knots;

  static KnotGrid equidistant(double lo, double hi, int num_basis, int degree);
  double spacing() const { return (hi - lo) / (num_basis - degree); }
};

/// Uncentered B-spline design over the observed range of x.
Eigen::MatrixXd bspline_basis(std::span<const double> x, int num_basis, int degree);
/// Uncentered B-spline design on a fixed knot grid; x must lie in [lo, hi].
Eigen::MatrixXd bspline_basis(const KnotGrid& grid, std::span<const double> x);

/// G = D^T D with D the order-th difference operator on num_basis coefficients.
Eigen::MatrixXd difference_penalty(int num_basis, int order);

struct CenteredBasis {
  Eigen::MatrixXd basis;
  Eigen::VectorXd offsets;
};

/// Subtracts column means; offsets hold the removed means.
CenteredBasis center_basis(const Eigen::MatrixXd& b);

/// Centered P-spline basis for one covariate, with its penalty and smoothing
/// parameter. Offsets are frozen at training time so evaluation on new points
/// reproduces the training parameterization.
struct SmoothTermBasis {
  std::string variable_name;
  KnotGrid knots;
  int degree = 3;
  Eigen::MatrixXd basis;    // n x k, centered
  Eigen::VectorXd offsets;  // k
  Eigen::MatrixXd penalty;  // k x k
  int penalty_order = 2;
  double psi = 1.0;

  Eigen::Index size() const { return basis.cols(); }
};

SmoothTermBasis make_smooth_term(const SmoothConfig& config, std::span<const double> x,
                                 double psi = 1.0);

/// Centered basis rows for arbitrary points inside the training range.
Eigen::MatrixXd smooth_design_rows(const SmoothTermBasis& term, std::span<const double> grid);

/// f(grid) = centered basis(grid) * coef. Throws outside the knot span.
Eigen::VectorXd evaluate_smooth(const SmoothTermBasis& term, const Eigen::VectorXd& coef,
                                std::span<const double> grid);

}  // namespace hetsar
