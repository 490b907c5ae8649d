#include "hetsar/estimator.hpp"

#include <boost/math/tools/minima.hpp>

#include <cmath>
#include <limits>

namespace hetsar {

namespace {

// Cached cross products of one PWLS working problem.
struct WorkingProblem {
  const SubDesign& design;
  const Eigen::VectorXd& weights;
  const Eigen::VectorXd& z;
  Eigen::MatrixXd f;  // X' W X
  Eigen::VectorXd g;  // X' W z
  Eigen::MatrixXd constraint;

  WorkingProblem(const SubDesign& d, const Eigen::VectorXd& w, const Eigen::VectorXd& zz)
      : design(d), weights(w), z(zz) {
    const Eigen::MatrixXd xw = d.X.transpose() * w.asDiagonal();
    f = xw * d.X;
    g = xw * zz;
    constraint = d.constraint_matrix(f);
  }

  double gcv(const std::vector<double>& psi) const {
    Eigen::MatrixXd m = f + constraint;
    for (std::size_t b = 0; b < design.blocks.size(); ++b) {
      const auto& blk = design.blocks[b];
      m.block(blk.columns.start, blk.columns.start, blk.columns.size, blk.columns.size) +=
          psi[b] * blk.term.penalty;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
    const Eigen::VectorXd coef = llt.solve(g);
    const double trace_h = llt.solve(f).trace();
    const Eigen::VectorXd resid = z - design.X * coef;
    const double rss = (weights.array() * resid.array().square()).sum();
    const auto n = static_cast<double>(z.size());
    const double denom = n - trace_h;
    if (!(denom > 0.0)) return std::numeric_limits<double>::infinity();
    return n * rss / (denom * denom);
  }
};

}  // namespace

double gcv_score(const SubDesign& design, const Eigen::VectorXd& weights,
                 const Eigen::VectorXd& z, const std::vector<double>& psi) {
  if (psi.size() != design.blocks.size()) throw InputError("psi vector length mismatch");
  return WorkingProblem(design, weights, z).gcv(psi);
}

std::vector<double> select_psi_gcv(const SubDesign& design, const Eigen::VectorXd& weights,
                                   const Eigen::VectorXd& z) {
  std::vector<double> psi = design.psi();
  if (design.blocks.empty()) return psi;
  const WorkingProblem problem(design, weights, z);
  const double step = (kLogPsiMax - kLogPsiMin) / (kPsiGridPoints - 1);
  for (std::size_t b = 0; b < psi.size(); ++b) {
    auto score_at = [&](double log_psi) {
      std::vector<double> trial = psi;
      trial[b] = std::pow(10.0, log_psi);
      return problem.gcv(trial);
    };
    int best = 0;
    double best_score = std::numeric_limits<double>::infinity();
    for (int i = 0; i < kPsiGridPoints; ++i) {
      const double s = score_at(kLogPsiMin + i * step);
      if (s < best_score) {
        best_score = s;
        best = i;
      }
    }
    double best_log = kLogPsiMin + best * step;
    const double lo = std::max(kLogPsiMin, best_log - step);
    const double hi = std::min(kLogPsiMax, best_log + step);
    boost::uintmax_t max_iter = 60;
    const auto refined = boost::math::tools::brent_find_minima(score_at, lo, hi, 30, max_iter);
    if (refined.second < best_score) best_log = refined.first;
    psi[b] = std::pow(10.0, best_log);
  }
  return psi;
}

SmoothingChoice select_smoothing(const DesignMatrices& design, const WeightMatrix& w,
                                 const Eigen::VectorXd& y, const Parameters& current,
                                 double clamp_bound) {
  SmoothingChoice out{design.mean.psi(), design.scale.psi()};
  const ScaleEvaluation sc = evaluate_scale(design.scale, current.alpha, clamp_bound);
  const Eigen::VectorXd ay = y - current.rho * w.lag(y);
  if (!design.mean.blocks.empty()) {
    const Eigen::VectorXd weights = sc.sigma.array().square().inverse();
    out.mean = select_psi_gcv(design.mean, weights, ay);
  }
  if (!design.scale.blocks.empty()) {
    const Eigen::VectorXd r = ay - design.mean.X * current.beta;
    const Eigen::VectorXd eta = design.scale.X * current.alpha;
    const Eigen::VectorXd z = eta.array() + 0.5 * ((r.array() / sc.sigma.array()).square() - 1.0);
    const Eigen::VectorXd weights = Eigen::VectorXd::Constant(y.size(), 2.0);
    out.scale = select_psi_gcv(design.scale, weights, z);
  }
  return out;
}

}  // namespace hetsar
