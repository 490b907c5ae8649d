#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <istream>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace hetsar {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Admissible interval for the spatial autoregressive parameter.
struct RhoBounds {
  double lo = -1.0;
  double hi = 1.0;
};

/// Shrink applied to the reciprocal-eigenvalue interval.
inline constexpr double kRhoBoundEpsilon = 1e-6;

/// Spatial weight matrix W with standardization metadata.
///
/// Entries live in compressed-row storage whatever the density; inverse
/// distance matrices are fully dense by construction and still go through
/// the same interface. Values are immutable after construction.
///
/// When the pre-standardization matrix C was symmetric, W = D^-1 C and the
/// spectrum is obtained from the symmetric similarity D^1/2 W D^-1/2, so
/// eigenvalues are real and cached on the object.
class WeightMatrix {
 public:
  using Sparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  /// Validates: square, zero diagonal, nonnegative, rows sum to 1 if standardized.
  /// `base_row_sums` is D (only meaningful when standardized && symmetric_base).
  WeightMatrix(Sparse entries, bool standardized, bool symmetric_base,
               Eigen::VectorXd base_row_sums = {});

  Eigen::Index n() const { return entries_.rows(); }
  const Sparse& entries() const { return entries_; }
  bool standardized() const { return standardized_; }
  bool symmetric_base() const { return symmetric_base_; }
  const Eigen::VectorXd& base_row_sums() const { return base_row_sums_; }

  /// Real spectrum of the standardized matrix, ascending, if available.
  const std::optional<Eigen::VectorXd>& eigenvalues() const { return eigenvalues_; }
  /// (1/lambda_min + eps, 1/lambda_max - eps) when the spectrum is known.
  std::optional<RhoBounds> bounds() const;

  Eigen::VectorXd lag(const Eigen::VectorXd& v) const { return entries_ * v; }
  Eigen::MatrixXd dense() const { return Eigen::MatrixXd(entries_); }
  /// Sum of all weights.
  double total_weight() const;
  double at(Eigen::Index i, Eigen::Index j) const { return entries_.coeff(i, j); }
  Eigen::Index neighbor_count(Eigen::Index i) const;

  /// Returns a copy with the cached spectrum (no-op unless standardized with
  /// symmetric base).
  WeightMatrix with_spectrum() const;

 private:
  Sparse entries_;
  bool standardized_ = false;
  bool symmetric_base_ = false;
  Eigen::VectorXd base_row_sums_;
  std::optional<Eigen::VectorXd> eigenvalues_;
};

/// Binary rook contiguity on a rows x cols lattice (row-major cell order),
/// row-standardized.
WeightMatrix build_rook_grid(int rows, int cols);

/// w_ij = 1/d_ij^2, row-standardized. No cutoff radius: the result is dense.
WeightMatrix build_inverse_distance_squared(std::span<const Point> points);

/// Divides every row by its sum. Isolated units (empty rows) are an error.
/// Idempotent on already standardized input.
WeightMatrix row_standardize(const WeightMatrix& w);

/// Parses an adjacency-list document:
///   n=<count>
///   <i> <j> [weight]
/// with 0-based indices; each edge is entered symmetrically. Blank lines and
/// lines starting with '#' are skipped.
WeightMatrix load_adjacency(std::istream& in);
WeightMatrix parse_adjacency(std::string_view text);

/// Admissible rho interval. Falls back to (-1+eps, 1-eps) when the spectrum
/// is unavailable (asymmetric base).
RhoBounds eigen_bounds(const WeightMatrix& w);

/// Real eigenvalues of the symmetric similarity transform of a standardized
/// W with symmetric base (ascending). Throws if not applicable.
Eigen::VectorXd similarity_eigenvalues(const WeightMatrix& w);

}  // namespace hetsar
