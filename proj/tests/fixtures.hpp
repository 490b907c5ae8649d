#pragma once

#include "hetsar/estimator.hpp"
#include "hetsar/sim.hpp"
#include "oracles.hpp"

namespace fixture {

inline hetsar::Scenario grid_scenario(int side, double rho, int replicates = 1,
                                      std::uint64_t seed = 1) {
  hetsar::Scenario s;
  s.layout.kind = hetsar::LayoutKind::grid_rook;
  s.layout.rows = side;
  s.layout.cols = side;
  s.rho = rho;
  s.replicates = replicates;
  s.seed = seed;
  return s;
}

// Mean: x1, x2 linear, smooth x3. Scale: x2 linear plus optional smooth x1.
inline hetsar::ModelSpec rich_spec(bool scale_smooth, int k = 8) {
  hetsar::ModelSpec spec;
  spec.response = "y";
  spec.mean_linear = {"x1", "x2"};
  spec.mean_smooth = {hetsar::SmoothConfig{"x3", k, 3, 2}};
  spec.scale_linear = {"x2"};
  if (scale_smooth) spec.scale_smooth = {hetsar::SmoothConfig{"x1", k, 3, 2}};
  return spec;
}

struct Problem {
  hetsar::DataTable data;
  hetsar::WeightMatrix w;
  hetsar::DesignMatrices design;
  Eigen::VectorXd y;
};

inline Problem small_problem(int side, double rho, std::uint64_t seed, bool scale_smooth,
                             int k = 8) {
  const hetsar::Scenario s = grid_scenario(side, rho, 1, seed);
  auto d = hetsar::simulate_dataset(s, 0);
  Problem p{d.table, d.w, hetsar::assemble_design(rich_spec(scale_smooth, k), d.table), {}};
  p.y = p.data.column_vector("y");
  return p;
}

inline hetsar::Parameters random_parameters(oracle::Gen& g, const hetsar::DesignMatrices& d,
                                            double rho_range = 0.6) {
  hetsar::Parameters th;
  th.rho = g.uniform(-rho_range, rho_range);
  th.beta = g.vector(d.mean.cols(), 0.7);
  th.alpha = g.vector(d.scale.cols(), 0.2);
  return th;
}

}  // namespace fixture
