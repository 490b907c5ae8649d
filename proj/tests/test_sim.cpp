#include "fixtures.hpp"

#include <doctest.h>

using namespace hetsar;

TEST_CASE("true smooth values") {
  CHECK(true_smooth(0.0) == 0.0);
  CHECK(true_smooth(1.0) == 0.0);
  CHECK(true_smooth(0.5) == doctest::Approx(0.2 * std::pow(0.5, 11) * std::pow(5.0, 6) +
                                            10 * std::pow(5.0, 3) * std::pow(0.5, 10)));
  CHECK(true_smooth(0.5) == doctest::Approx(2.74658).epsilon(1e-5));
  CHECK_THROWS_AS(true_smooth(1.5), InputError);
  CHECK(true_smooth_mean() == doctest::Approx(oracle::smooth_mean_closed_form()).epsilon(1e-12));
  CHECK(2.0 + true_smooth_mean() == doctest::Approx(5.397).epsilon(5e-4));
}

TEST_CASE("simulation is deterministic and reduced form") {
  const Scenario s = fixture::grid_scenario(10, 0.5, 3, 9);
  const StudyLayout layout = build_study_layout(s);
  const SimulatedData a = simulate_dataset(s, layout, 2);
  const SimulatedData b = simulate_dataset(s, layout, 2);
  for (const auto& name : a.table.names()) {
    const auto x = a.table.column(name);
    const auto y = b.table.column(name);
    CHECK(std::equal(x.begin(), x.end(), y.begin()));
  }
  const SimulatedData c = simulate_dataset(s, layout, 1);
  CHECK(a.table.column("x1")[0] != c.table.column("x1")[0]);
  // A y - mu0 is the noise, whose standardized values look standard normal.
  const Eigen::VectorXd y = a.table.column_vector("y");
  const Eigen::VectorXd omega = y - s.rho * layout.w.lag(y) - a.mu0;
  const Eigen::VectorXd v = omega.cwiseQuotient(a.sigma);
  CHECK(std::abs(v.mean()) < 0.35);
  CHECK(std::sqrt(v.squaredNorm() / v.size()) == doctest::Approx(1.0).epsilon(0.2));
}

TEST_CASE("rho = 0 skips the solve and gives mu0 + omega") {
  Scenario s = fixture::grid_scenario(20, 0.0, 1, 4);
  s.alpha0 = 0.0;
  s.alpha1 = 0.0;
  const StudyLayout layout = build_study_layout(s);
  CHECK_FALSE(layout.a_lu);
  const SimulatedData d = simulate_dataset(s, layout, 0);
  const Eigen::VectorXd e = d.table.column_vector("y") - d.mu0;
  const double sd = std::sqrt((e.array() - e.mean()).square().sum() / (e.size() - 1));
  CHECK(std::abs(sd - 1.0) < 0.1);
  // Same draw through a tiny rho approaches it.
  Scenario t = s;
  t.rho = 1e-12;
  const SimulatedData dt = simulate_dataset(t, build_study_layout(t), 0);
  CHECK((dt.table.column_vector("y") - d.table.column_vector("y")).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("reduced-form noise averages out across replicates") {
  const Scenario s = fixture::grid_scenario(5, -0.6, 200, 12);
  const StudyLayout layout = build_study_layout(s);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(25);
  for (int r = 0; r < s.replicates; ++r) {
    const SimulatedData d = simulate_dataset(s, layout, r);
    const Eigen::VectorXd y = d.table.column_vector("y");
    acc += (y - s.rho * layout.w.lag(y) - d.mu0).cwiseQuotient(d.sigma);
  }
  acc /= s.replicates;
  CHECK(acc.cwiseAbs().maxCoeff() < 4.5 / std::sqrt(200.0));
}

TEST_CASE("covariate sets") {
  Scenario s = fixture::grid_scenario(10, 0.0, 1, 2);
  s.covariates = CovariateSet::uniform;
  const auto d = simulate_dataset(s, 0);
  for (double v : d.table.column("x1")) CHECK((v >= 1.0 && v <= 10.0));
  for (double v : d.table.column("x2")) CHECK((v >= 0.0 && v <= 1.0));
}

TEST_CASE("points layout draws one point set per study") {
  Scenario s;
  s.layout.kind = LayoutKind::points_invdist2;
  s.layout.n_points = 30;
  s.rho = 0.5;
  s.seed = 8;
  const StudyLayout a = build_study_layout(s);
  const StudyLayout b = build_study_layout(s);
  REQUIRE(a.points.size() == 30);
  CHECK(a.points[7].x == b.points[7].x);
  CHECK(a.w.eigenvalues().has_value());
}

TEST_CASE("scenario validation") {
  Scenario s = fixture::grid_scenario(5, 1.2, 1, 1);
  CHECK_THROWS_AS(build_study_layout(s), InputError);
  s.rho = 0.2;
  s.replicates = 0;
  CHECK_THROWS_AS(build_study_layout(s), InputError);
  CHECK_THROWS_AS(parse_estimator("OLS"), InputError);
  CHECK(parse_estimator("GAMLSS_LAG") == Estimator::gamlss_lag);
}

TEST_CASE("parallel and serial studies produce identical reports") {
  Scenario s = fixture::grid_scenario(7, 0.3, 6, 21);
  s.estimators = {Estimator::h_am_sar, Estimator::ml_sar, Estimator::am_sar, Estimator::gamlss_lag};
  const SimulationReport par = run_study(s, {true, 0});
  const SimulationReport ser = run_study(s, {false, 0});
  REQUIRE(par.estimators.size() == 4);
  for (std::size_t k = 0; k < 4; ++k) {
    const auto& a = par.estimators[k];
    const auto& b = ser.estimators[k];
    CHECK(a.mse == b.mse);
    REQUIRE(a.parameters.size() == b.parameters.size());
    for (std::size_t j = 0; j < a.parameters.size(); ++j) {
      CHECK(a.parameters[j].mean == b.parameters[j].mean);
      CHECK(a.parameters[j].sd == b.parameters[j].sd);
    }
  }
}

TEST_CASE("report bookkeeping") {
  Scenario s = fixture::grid_scenario(7, -0.2, 1, 3);
  s.estimators = {Estimator::h_am_sar, Estimator::ml_sar};
  const SimulationReport r = run_study(s);
  const auto* h = r.find(Estimator::h_am_sar);
  REQUIRE(h);
  for (const auto& p : h->parameters) {
    CHECK_FALSE(p.sd.has_value());
    CHECK(std::abs(p.bias - (p.mean - p.truth)) <= 1e-12);
  }
  CHECK(h->find("beta0")->truth == doctest::Approx(2.0 + true_smooth_mean()));
  const auto* ml = r.find(Estimator::ml_sar);
  REQUIRE(ml);
  CHECK(ml->find("alpha1") == nullptr);
  CHECK(ml->find("alpha0") != nullptr);
}

TEST_CASE("aggregation excludes failures and rejects all-failed estimators") {
  Scenario s = fixture::grid_scenario(5, 0.0, 3, 1);
  ReplicateEstimates ok;
  ok.ok = true;
  ok.rho = 0.1;
  ok.alpha1 = std::nan("");
  ReplicateEstimates bad;
  bad.failure = "boom";
  bad.rho = 100.0;
  ReplicateTable t{{ok}, {bad}, {ok}};
  const SimulationReport r = aggregate(s, t);
  CHECK(r.estimators[0].failures == 1);
  CHECK(r.estimators[0].find("rho")->mean == doctest::Approx(0.1));
  CHECK(r.estimators[0].find("rho")->count == 2);
  CHECK(r.estimators[0].find("alpha1") == nullptr);
  ReplicateTable all_bad{{bad}, {bad}, {bad}};
  CHECK_THROWS_AS(aggregate(s, all_bad), NumericalError);
}

TEST_CASE("GAMLSS-lag reports the Wy coefficient as rho") {
  const Scenario s = fixture::grid_scenario(10, 0.0, 1, 5);
  const auto d = simulate_dataset(s, 0);
  const FitResult f = fit_gamlss_lag(d.table, d.w, s);
  CHECK_FALSE(f.rho_estimated);
  CHECK(f.rho == 0.0);
  const ReplicateEstimates e = estimates_of(Estimator::gamlss_lag, f);
  CHECK(e.rho == f.beta(1));
  CHECK(std::abs(e.rho) < 0.3);
}
