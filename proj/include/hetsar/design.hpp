#pragma once

#include "hetsar/data_table.hpp"
#include "hetsar/splines.hpp"

#include <Eigen/Dense>

#include <map>
#include <string>
#include <vector>

namespace hetsar {

enum class Submodel { mean, scale };

/// Predictors for the location (mean) and log standard deviation.
struct ModelSpec {
  std::string response;
  std::vector<std::string> mean_linear;
  std::vector<SmoothConfig> mean_smooth;
  std::vector<std::string> scale_linear;
  std::vector<SmoothConfig> scale_smooth;

  /// Response not among regressors; no term repeated within a submodel.
  void validate() const;
};

struct ColumnRange {
  Eigen::Index start = 0;
  Eigen::Index size = 0;
};

/// Penalized column block of a design.
struct PenaltyBlock {
  ColumnRange columns;
  SmoothTermBasis term;  // term.penalty is G, term.psi is the smoothing parameter
};

/// One submodel's design: intercept, linear columns, then centered smooth blocks.
struct SubDesign {
  Eigen::MatrixXd X;
  std::vector<std::string> column_names;
  std::vector<PenaltyBlock> blocks;
  std::map<std::string, ColumnRange> term_index;
  Eigen::Index num_unpenalized = 0;

  Eigen::Index cols() const { return X.cols(); }
  /// sum_j psi_j G_j embedded in a cols x cols matrix.
  Eigen::MatrixXd penalty_matrix() const;
  /// Rank-one sum-to-zero constraint per smooth block, scaled by `kappa_scale`
  /// per block (see fit notes: pins the coefficient direction the centering
  /// leaves unidentified; it has no effect on fitted values).
  Eigen::MatrixXd constraint_matrix(const Eigen::MatrixXd& cross_product) const;
  std::vector<double> psi() const;
  void set_psi(const std::vector<double>& psi);
  const PenaltyBlock* find_block(const std::string& variable) const;
};

struct DesignMatrices {
  SubDesign mean;
  SubDesign scale;
  std::vector<std::string> warnings;

  const SubDesign& of(Submodel s) const { return s == Submodel::mean ? mean : scale; }
  SubDesign& of(Submodel s) { return s == Submodel::mean ? mean : scale; }
};

/// Builds both designs. Smooth blocks are centered and registered as penalty
/// blocks with psi = initial_psi.
DesignMatrices assemble_design(const ModelSpec& spec, const DataTable& data,
                               double initial_psi = 1.0);

}  // namespace hetsar
