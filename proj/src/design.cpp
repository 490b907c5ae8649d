#include "hetsar/design.hpp"

#include "hetsar/errors.hpp"

#include <cmath>
#include <set>

namespace hetsar {

namespace {

void check_unique(const std::vector<std::string>& linear, const std::vector<SmoothConfig>& smooth,
                  const std::string& response, const char* which) {
  std::set<std::string> seen;
  auto add = [&](const std::string& name) {
    if (name.empty()) throw InputError(std::string(which) + " model has an unnamed term");
    if (name == response) {
      throw InputError("response '" + response + "' listed as a " + which + " regressor");
    }
    if (!seen.insert(name).second) {
      throw InputError("term '" + name + "' listed twice in the " + which + " model");
    }
  };
  for (const auto& l : linear) add(l);
  for (const auto& s : smooth) add(s.variable);
}

SubDesign build(const std::vector<std::string>& linear, const std::vector<SmoothConfig>& smooth,
                const DataTable& data, double initial_psi) {
  const auto n = static_cast<Eigen::Index>(data.rows());
  SubDesign d;
  std::vector<SmoothTermBasis> terms;
  Eigen::Index cols = 1 + static_cast<Eigen::Index>(linear.size());
  for (const auto& cfg : smooth) {
    terms.push_back(make_smooth_term(cfg, data.column(cfg.variable), initial_psi));
    cols += terms.back().size();
  }
  d.X.resize(n, cols);
  d.X.col(0).setOnes();
  d.column_names.push_back("(Intercept)");
  d.term_index["(Intercept)"] = {0, 1};
  Eigen::Index c = 1;
  for (const auto& name : linear) {
    d.X.col(c) = data.column_vector(name);
    d.column_names.push_back(name);
    d.term_index[name] = {c, 1};
    ++c;
  }
  d.num_unpenalized = c;
  for (auto& term : terms) {
    const Eigen::Index k = term.size();
    d.X.middleCols(c, k) = term.basis;
    for (Eigen::Index j = 0; j < k; ++j) {
      d.column_names.push_back(term.variable_name + ".s" + std::to_string(j + 1));
    }
    d.term_index[term.variable_name] = {c, k};
    d.blocks.push_back({{c, k}, std::move(term)});
    c += k;
  }
  return d;
}

}  // namespace

void ModelSpec::validate() const {
  if (response.empty()) throw InputError("model spec has no response");
  check_unique(mean_linear, mean_smooth, response, "mean");
  check_unique(scale_linear, scale_smooth, response, "scale");
}

Eigen::MatrixXd SubDesign::penalty_matrix() const {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(cols(), cols());
  for (const auto& b : blocks) {
    p.block(b.columns.start, b.columns.start, b.columns.size, b.columns.size) +=
        b.term.psi * b.term.penalty;
  }
  return p;
}

Eigen::MatrixXd SubDesign::constraint_matrix(const Eigen::MatrixXd& cross_product) const {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(cols(), cols());
  for (const auto& b : blocks) {
    const auto s = b.columns.start;
    const auto k = b.columns.size;
    const double kappa = 1.0 + cross_product.diagonal().segment(s, k).mean();
    c.block(s, s, k, k).setConstant(kappa / static_cast<double>(k));
  }
  return c;
}

std::vector<double> SubDesign::psi() const {
  std::vector<double> out;
  for (const auto& b : blocks) out.push_back(b.term.psi);
  return out;
}

void SubDesign::set_psi(const std::vector<double>& psi) {
  if (psi.size() != blocks.size()) throw InputError("psi vector length mismatch");
  for (std::size_t i = 0; i < psi.size(); ++i) {
    if (!(psi[i] >= 0.0)) throw InputError("smoothing parameters must be nonnegative");
    blocks[i].term.psi = psi[i];
  }
}

const PenaltyBlock* SubDesign::find_block(const std::string& variable) const {
  for (const auto& b : blocks) {
    if (b.term.variable_name == variable) return &b;
  }
  return nullptr;
}

DesignMatrices assemble_design(const ModelSpec& spec, const DataTable& data, double initial_psi) {
  spec.validate();
  auto check_column = [&](const std::string& name) {
    for (double v : data.column(name)) {
      if (!std::isfinite(v)) throw InputError("column '" + name + "' has non-finite values");
    }
  };
  check_column(spec.response);
  for (const auto& l : spec.mean_linear) check_column(l);
  for (const auto& s : spec.mean_smooth) check_column(s.variable);
  for (const auto& l : spec.scale_linear) check_column(l);
  for (const auto& s : spec.scale_smooth) check_column(s.variable);

  DesignMatrices d;
  d.mean = build(spec.mean_linear, spec.mean_smooth, data, initial_psi);
  d.scale = build(spec.scale_linear, spec.scale_smooth, data, initial_psi);
  const auto n = static_cast<Eigen::Index>(data.rows());
  if (n < d.mean.cols()) {
    d.warnings.push_back("n = " + std::to_string(n) + " is below the " +
                         std::to_string(d.mean.cols()) +
                         " mean-model columns; relying on the penalty to regularize");
  }
  return d;
}

}  // namespace hetsar
