#include "hetsar/errors.hpp"
#include "hetsar/weights.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

using namespace hetsar;

TEST_CASE("rook grid: neighbour counts and row sums") {
  const WeightMatrix w = build_rook_grid(3, 4);
  CHECK(w.n() == 12);
  CHECK(w.neighbor_count(0) == 2);   // corner
  CHECK(w.neighbor_count(1) == 3);   // edge
  CHECK(w.neighbor_count(5) == 4);   // interior
  for (Eigen::Index i = 0; i < w.n(); ++i) {
    CHECK(w.dense().row(i).sum() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(w.at(i, i) == 0.0);
  }
  CHECK(w.at(5, 4) == doctest::Approx(0.25));
  CHECK(w.at(0, 5) == 0.0);
  CHECK(w.total_weight() == doctest::Approx(12.0));
}

TEST_CASE("similarity spectrum matches a general eigen solver on the dense W") {
  oracle::Gen g(17);
  for (int rep = 0; rep < 5; ++rep) {
    const WeightMatrix w = g.row_stochastic(g.integer(4, 25));
    REQUIRE(w.eigenvalues());
    Eigen::EigenSolver<Eigen::MatrixXd> es(w.dense(), false);
    std::vector<double> ref;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
      CHECK(std::abs(es.eigenvalues()(i).imag()) < 1e-8);
      ref.push_back(es.eigenvalues()(i).real());
    }
    std::sort(ref.begin(), ref.end());
    for (std::size_t i = 0; i < ref.size(); ++i) {
      CHECK((*w.eigenvalues())(static_cast<Eigen::Index>(i)) == doctest::Approx(ref[i]).epsilon(1e-9));
    }
    CHECK(w.eigenvalues()->maxCoeff() == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("eigen bounds bracket the admissible rho interval") {
  const WeightMatrix w = build_rook_grid(5, 5);
  const RhoBounds b = eigen_bounds(w);
  const auto& ev = *w.eigenvalues();
  CHECK(b.lo == doctest::Approx(1.0 / ev.minCoeff() + kRhoBoundEpsilon));
  CHECK(b.hi == doctest::Approx(1.0 - kRhoBoundEpsilon));
  // Bipartite grid: smallest eigenvalue is -1.
  CHECK(ev.minCoeff() == doctest::Approx(-1.0).epsilon(1e-10));
}

TEST_CASE("inverse distance squared weights") {
  const std::vector<Point> pts{{0, 0}, {1, 0}, {0, 2}};
  const WeightMatrix w = build_inverse_distance_squared(pts);
  // Row 0: raw weights 1 and 1/4.
  CHECK(w.at(0, 1) == doctest::Approx(0.8));
  CHECK(w.at(0, 2) == doctest::Approx(0.2));
  CHECK(w.eigenvalues().has_value());
  const std::vector<Point> dup{{0, 0}, {1, 1}, {0, 0}};
  CHECK_THROWS_AS(build_inverse_distance_squared(dup), InputError);
}

TEST_CASE("row standardization is idempotent") {
  oracle::Gen g(3);
  const WeightMatrix w = g.row_stochastic(10, 0.4, false);
  const WeightMatrix w2 = row_standardize(w);
  CHECK((w.dense() - w2.dense()).cwiseAbs().maxCoeff() == 0.0);
  CHECK_FALSE(w.eigenvalues().has_value());  // asymmetric base
  CHECK(eigen_bounds(w).lo == doctest::Approx(-1.0 + kRhoBoundEpsilon));
}

TEST_CASE("isolated unit is rejected") {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(3, 3);
  c(0, 1) = c(1, 0) = 1.0;
  WeightMatrix::Sparse s = c.sparseView();
  CHECK_THROWS_AS(row_standardize(WeightMatrix(s, false, true)), InputError);
}

TEST_CASE("adjacency document parsing") {
  const WeightMatrix w = row_standardize(parse_adjacency("# ring\nn=4\n0 1\n1 2\n2 3 2.0\n3 0\n"));
  CHECK(w.n() == 4);
  CHECK(w.at(2, 3) == doctest::Approx(2.0 / 3.0));
  CHECK(w.at(2, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(w.at(3, 2) == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(parse_adjacency("0 1\n"), InputError);
  CHECK_THROWS_AS(parse_adjacency("n=3\n0 0\n"), InputError);
  CHECK_THROWS_AS(parse_adjacency("n=3\n0 5\n"), InputError);
  CHECK_THROWS_AS(parse_adjacency("n=3\n0 1 -1\n"), InputError);
  CHECK_THROWS_AS(row_standardize(parse_adjacency("n=3\n0 1\n")), InputError);
}

TEST_CASE("invalid matrices are rejected") {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(2, 2);
  c(0, 0) = 1.0;
  CHECK_THROWS_AS(WeightMatrix(WeightMatrix::Sparse(c.sparseView()), false, false), InputError);
  c(0, 0) = 0.0;
  c(0, 1) = -1.0;
  CHECK_THROWS_AS(WeightMatrix(WeightMatrix::Sparse(c.sparseView()), false, false), InputError);
  CHECK_THROWS_AS(build_rook_grid(1, 1), InputError);
}
