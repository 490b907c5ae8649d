#include "fixtures.hpp"
#include "hetsar/inference.hpp"

#include <doctest.h>

using namespace hetsar;

namespace {

// GCV through the explicit n x n hat matrix.
double gcv_oracle(const SubDesign& d, const Eigen::VectorXd& w, const Eigen::VectorXd& z) {
  const Eigen::MatrixXd f = d.X.transpose() * w.asDiagonal() * d.X;
  const Eigen::MatrixXd m = f + d.penalty_matrix() + d.constraint_matrix(f);
  const Eigen::MatrixXd h = d.X * m.inverse() * d.X.transpose() * w.asDiagonal();
  const auto n = static_cast<double>(z.size());
  const Eigen::VectorXd e = z - h * z;
  const double rss = (w.array() * e.array().square()).sum();
  return n * rss / std::pow(n - h.trace(), 2);
}

}  // namespace

TEST_CASE("GCV score against the explicit hat matrix") {
  oracle::Gen g(31);
  auto p = fixture::small_problem(6, 0.0, 3, true);
  for (int rep = 0; rep < 8; ++rep) {
    const std::vector<double> psi{std::pow(10.0, g.uniform(-3, 4))};
    p.design.mean.set_psi(psi);
    const Eigen::VectorXd w = g.vector(p.y.size()).array().abs() + 0.2;
    CHECK(gcv_score(p.design.mean, w, p.y, psi) ==
          doctest::Approx(gcv_oracle(p.design.mean, w, p.y)).epsilon(1e-9));
  }
}

TEST_CASE("GCV selection lands on the grid minimum or better") {
  auto p = fixture::small_problem(8, 0.0, 4, false);
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(p.y.size());
  const std::vector<double> psi = select_psi_gcv(p.design.mean, w, p.y);
  REQUIRE(psi.size() == 1);
  CHECK(psi[0] >= std::pow(10.0, kLogPsiMin));
  CHECK(psi[0] <= std::pow(10.0, kLogPsiMax));
  const double chosen = gcv_score(p.design.mean, w, p.y, psi);
  for (int i = 0; i < kPsiGridPoints; ++i) {
    const double lp = kLogPsiMin + i * (kLogPsiMax - kLogPsiMin) / (kPsiGridPoints - 1);
    CHECK(chosen <= gcv_score(p.design.mean, w, p.y, {std::pow(10.0, lp)}) + 1e-12);
  }
}

TEST_CASE("block effective df runs from k-1 to order-1") {
  auto p = fixture::small_problem(8, 0.0, 5, false, 10);
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(p.y.size());
  p.design.mean.set_psi({1e-10});
  CHECK(block_effective_dfs(p.design.mean, w)[0] == doctest::Approx(9.0).epsilon(1e-4));
  p.design.mean.set_psi({1e12});
  CHECK(block_effective_dfs(p.design.mean, w)[0] == doctest::Approx(1.0).epsilon(1e-4));
  double prev = 100.0;
  for (double lp = -4; lp <= 6; lp += 1) {
    p.design.mean.set_psi({std::pow(10.0, lp)});
    const double e = block_effective_dfs(p.design.mean, w)[0];
    CHECK(e <= prev + 1e-9);
    prev = e;
  }
}

TEST_CASE("Fisher scoring reaches a zero scale score") {
  oracle::Gen g(7);
  auto p = fixture::small_problem(7, 0.0, 9, true);
  p.design.scale.set_psi({3.0});
  const Eigen::VectorXd r = g.vector(p.y.size()).cwiseProduct(
      (0.5 * p.data.column_vector("x2")).array().exp().matrix());
  const Eigen::VectorXd alpha =
      update_scale_model(r, p.design.scale, Eigen::VectorXd::Zero(p.design.scale.cols()));
  CHECK(scale_score(r, p.design.scale, alpha).norm() < 1e-8);
  // Homoscedastic intercept-only model: alpha0 = log of the RMS residual.
  ModelSpec spec;
  spec.response = "y";
  const DesignMatrices d0 = assemble_design(spec, p.data);
  const Eigen::VectorXd a0 = update_scale_model(r, d0.scale, Eigen::VectorXd::Zero(1));
  CHECK(a0(0) == doctest::Approx(0.5 * std::log(r.squaredNorm() / r.size())).epsilon(1e-10));
}

TEST_CASE("scale model with too few iterations reports the last iterate") {
  oracle::Gen g(8);
  auto p = fixture::small_problem(5, 0.0, 9, false);
  const Eigen::VectorXd r = 3.0 * g.vector(p.y.size());
  ScaleFitOptions o;
  o.max_iterations = 1;
  try {
    update_scale_model(r, p.design.scale, Eigen::VectorXd::Zero(p.design.scale.cols()), o);
    FAIL("expected ScaleConvergenceError");
  } catch (const ScaleConvergenceError& e) {
    CHECK(e.last_iterate.size() == p.design.scale.cols());
    CHECK(e.score_norm > 1e-8);
  }
}
