// Acceptance suite. One line per criterion; exit status 1 if any fails.

#include "fixtures.hpp"
#include "hetsar/effects.hpp"
#include "hetsar/inference.hpp"
#include "hetsar/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace hetsar;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& details) {
  if (!pass) ++failures;
  std::printf("criterion %d: %s %s\n", id, pass ? "PASS" : "FAIL", details.c_str());
  std::fflush(stdout);
}

bool within(double value, double target, double tol) { return std::abs(value - target) <= tol; }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

Scenario grid(int side, double rho, int reps, std::uint64_t seed) {
  return fixture::grid_scenario(side, rho, reps, seed);
}

Scenario points(int n, double rho, int reps, std::uint64_t seed) {
  Scenario s;
  s.layout.kind = LayoutKind::points_invdist2;
  s.layout.n_points = n;
  s.rho = rho;
  s.replicates = reps;
  s.seed = seed;
  return s;
}

struct Pooled {
  double sum = 0.0;
  int count = 0;
  void add(const ParameterSummary& p) {
    sum += p.mean * p.count;
    count += p.count;
  }
};

Pooled beta0_pool;

void criterion_1() {
  const SimulationReport r = run_study(grid(12, -0.4, 100, 1));
  const auto& rho = *r.find(Estimator::h_am_sar)->find("rho");
  const auto& b1 = *r.find(Estimator::h_am_sar)->find("beta1");
  const auto& a1 = *r.find(Estimator::h_am_sar)->find("alpha1");
  beta0_pool.add(*r.find(Estimator::h_am_sar)->find("beta0"));
  const double sd = rho.sd.value_or(NAN);
  const bool ok = within(rho.mean, -0.395, 0.03) && within(sd, 0.079, 0.03) &&
                  within(b1.mean, -0.511, 0.05) && within(a1.mean, 0.326, 0.04);
  report(1, ok,
         "mean rho " + fmt("%.4f", rho.mean) + " (target -0.395 +- 0.03), sd rho " + fmt("%.4f", sd) +
             " (target 0.079 +- 0.03), mean beta1 " + fmt("%.4f", b1.mean) +
             " (target -0.511 +- 0.05), mean alpha1 " + fmt("%.4f", a1.mean) +
             " (target 0.326 +- 0.04), reps " + std::to_string(rho.count));
}

void criterion_2() {
  const SimulationReport r = run_study(grid(15, 0.4, 100, 2));
  const auto& rho = *r.find(Estimator::h_am_sar)->find("rho");
  beta0_pool.add(*r.find(Estimator::h_am_sar)->find("beta0"));
  report(2, within(rho.mean, 0.391, 0.03),
         "mean rho " + fmt("%.4f", rho.mean) + " (target 0.391 +- 0.03), reps " +
             std::to_string(rho.count));
}

void criterion_3() {
  const SimulationReport r = run_study(points(400, 0.8, 100, 3));
  const auto& rho = *r.find(Estimator::h_am_sar)->find("rho");
  beta0_pool.add(*r.find(Estimator::h_am_sar)->find("beta0"));
  report(3, within(rho.mean, 0.785, 0.03),
         "mean rho " + fmt("%.4f", rho.mean) + " (target 0.785 +- 0.03), reps " +
             std::to_string(rho.count));
}

void criterion_4() {
  const double truth = 2.0 + oracle::smooth_mean_closed_form();
  const double quad = 2.0 + true_smooth_mean();
  const double pooled = beta0_pool.sum / beta0_pool.count;
  report(4, within(pooled, truth, 0.15) && within(quad, truth, 1e-8),
         "pooled mean beta0 " + fmt("%.4f", pooled) + " over " + std::to_string(beta0_pool.count) +
             " replicates (target " + fmt("%.4f", truth) + " +- 0.15, quadrature " +
             fmt("%.6f", quad) + ")");
}

void criterion_5() {
  const std::vector<double> rhos{-0.8, -0.4, -0.2, 0.2, 0.4, 0.8};
  int decreasing = 0;
  double gam_small = 0.0;
  double gam_large = 0.0;
  std::ostringstream detail;
  for (std::size_t i = 0; i < rhos.size(); ++i) {
    double bias[2][2];
    int j = 0;
    for (int side : {9, 20}) {
      Scenario s = grid(side, rhos[i], 50, 50 + 10 * i + j);
      s.estimators = {Estimator::h_am_sar, Estimator::gamlss_lag};
      const SimulationReport r = run_study(s);
      bias[j][0] = std::abs(r.find(Estimator::h_am_sar)->find("rho")->bias);
      bias[j][1] = std::abs(r.find(Estimator::gamlss_lag)->find("rho")->bias);
      ++j;
    }
    if (bias[1][0] < bias[0][0]) ++decreasing;
    gam_small += bias[0][1] / rhos.size();
    gam_large += bias[1][1] / rhos.size();
    detail << " rho=" << rhos[i] << ":" << fmt("%.4f", bias[0][0]) << "->" << fmt("%.4f", bias[1][0]);
  }
  const bool ok = decreasing >= 5 && gam_large >= 0.5 * gam_small;
  report(5, ok,
         "H-AM-SAR |bias| n81->n400 decreasing in " + std::to_string(decreasing) + "/6 (need 5);" +
             detail.str() + "; GAMLSS-lag mean |bias| " + fmt("%.4f", gam_small) + "->" +
             fmt("%.4f", gam_large) + " (must stay >= half)");
}

void criterion_6() {
  Scenario s = grid(20, 0.4, 50, 60);
  s.estimators = {Estimator::h_am_sar, Estimator::ml_sar};
  const SimulationReport r = run_study(s);
  const double h = median(r.find(Estimator::h_am_sar)->mse);
  const double m = median(r.find(Estimator::ml_sar)->mse);
  report(6, h < m, "median MSE H-AM-SAR " + fmt("%.4f", h) + " vs ML-SAR " + fmt("%.4f", m));
}

double rel_err(double a, double fd) { return std::abs(a - fd) / std::max(std::abs(fd), 1e-2); }

void criterion_7() {
  oracle::Gen g(70);
  double worst = 0.0;
  int points_checked = 0;
  for (bool smooth_scale : {false, true}) {
    auto p = fixture::small_problem(6, 0.4, 71, smooth_scale);
    p.design.mean.set_psi({2.0});
    if (smooth_scale) p.design.scale.set_psi({5.0});
    for (int rep = 0; rep < 10; ++rep, ++points_checked) {
      const Parameters th = fixture::random_parameters(g, p.design);
      auto lp = [&](const Parameters& t) { return penalized_loglik(t, p.design, p.w, p.y); };
      const Eigen::VectorXd sb = score_beta(th, p.design, p.w, p.y);
      const Eigen::VectorXd sa = score_alpha(th, p.design, p.w, p.y);
      for (Eigen::Index j = 0; j < sb.size(); ++j) {
        const double fd = oracle::central_difference(
            [&](double v) { Parameters t = th; t.beta(j) = v; return lp(t); }, th.beta(j), 1e-5);
        worst = std::max(worst, rel_err(sb(j), fd));
      }
      for (Eigen::Index j = 0; j < sa.size(); ++j) {
        const double fd = oracle::central_difference(
            [&](double v) { Parameters t = th; t.alpha(j) = v; return lp(t); }, th.alpha(j), 1e-5);
        worst = std::max(worst, rel_err(sa(j), fd));
      }
      const double fd = oracle::central_difference(
          [&](double v) { Parameters t = th; t.rho = v; return lp(t); }, th.rho, 1e-6);
      worst = std::max(worst, rel_err(score_rho(th, p.design, p.w, p.y), fd));
    }
  }
  report(7, worst < 1e-5,
         "max relative error " + fmt("%.2e", worst) + " over " + std::to_string(points_checked) +
             " random points (limit 1e-5)");
}

void criterion_8() {
  oracle::Gen g(80);
  double sigma_err = 0.0;
  for (int n = 1; n <= 8; ++n) {
    const Eigen::VectorXd sigma = g.vector(n).array().exp();
    const Eigen::MatrixXd s = sigma.array().square().matrix().asDiagonal();
    sigma_err = std::max(sigma_err, std::abs(log_det_sigma(sigma) - std::log(oracle::determinant(s))));
  }
  double logdet_err = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const WeightMatrix w = g.row_stochastic(g.integer(3, 40), 0.5);
    const RhoBounds b = eigen_bounds(w);
    const double rho = g.uniform(b.lo * 0.95, b.hi * 0.95);
    logdet_err = std::max(logdet_err, std::abs(log_det_A_eigen(rho, *w.eigenvalues()) - log_det_A_lu(rho, w)));
  }
  const WeightMatrix rook = build_rook_grid(12, 12);
  for (double rho : {-0.9, -0.4, 0.0, 0.4, 0.9}) {
    logdet_err = std::max(logdet_err, std::abs(log_det_A_eigen(rho, *rook.eigenvalues()) - log_det_A_lu(rho, rook)));
  }
  double score_res = 0.0;
  double dual_err = 0.0;
  for (bool smooth_scale : {false, true}) {
    auto p = fixture::small_problem(6, -0.3, 81, smooth_scale);
    const Eigen::MatrixXd wd = p.w.dense();
    for (int rep = 0; rep < 10; ++rep) {
      p.design.mean.set_psi({g.uniform(0.01, 50)});
      if (smooth_scale) p.design.scale.set_psi({g.uniform(0.01, 50)});
      Parameters th = fixture::random_parameters(g, p.design);
      const double lib = penalized_loglik(th, p.design, p.w, p.y);
      const double ref = oracle::penalized_loglik(th, p.design, wd, p.y);
      dual_err = std::max(dual_err, std::abs(lib - ref) / std::max(1.0, std::abs(ref)));
      const ScaleEvaluation sc = evaluate_scale(p.design.scale, th.alpha);
      th.beta = beta_gls(p.design.mean, sc.sigma, p.y - th.rho * p.w.lag(p.y));
      score_res = std::max(score_res, score_beta(th, p.design, p.w, p.y).cwiseAbs().maxCoeff());
    }
  }
  const bool ok = sigma_err <= 1e-10 && logdet_err <= 1e-9 && score_res < 1e-8 && dual_err <= 1e-10;
  report(8, ok,
         "log|Sigma| err " + fmt("%.1e", sigma_err) + " (1e-10), log|A| eigen vs LU " +
             fmt("%.1e", logdet_err) + " (1e-9), beta score residual " + fmt("%.1e", score_res) +
             " (1e-8), l_p dual " + fmt("%.1e", dual_err) + " (1e-10)");
}

void criterion_9() {
  oracle::Gen g(90);
  double identity_err = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const WeightMatrix w = g.row_stochastic(g.integer(5, 60), 0.4);
    const RhoBounds b = eigen_bounds(w);
    const double rho = g.uniform(std::max(b.lo, -0.95) * 0.95, b.hi * 0.95);
    const double beta = 2.0 * g.normal();
    const ImpactSummary s = impacts(beta, rho, w, "x");
    identity_err = std::max(identity_err, std::abs(s.total * (1.0 - rho) - beta));
  }
  const ImpactSummary bath = impacts(0.0175, 0.6282, build_rook_grid(10, 10), "Bathrooms");
  const bool ok = identity_err <= 1e-10 && within(bath.total, 0.0473, 3e-4);
  report(9, ok,
         "max |total(1-rho) - beta| " + fmt("%.1e", identity_err) + " (1e-10); Bathrooms total " +
             fmt("%.5f", bath.total) + " vs 0.0473 (3e-4)");
}

void criterion_10() {
  Scenario null = grid(20, 0.0, 200, 100);
  const StudyLayout layout = build_study_layout(null);
  ConvergenceOptions opts = study_options();
  opts.compute_information = true;
  int wald_rej = 0;
  int lr_rej = 0;
  int used = 0;
  for (int r = 0; r < null.replicates; ++r) {
    const SimulatedData d = simulate_dataset(null, layout, r);
    try {
      const FitResult f = fit_h_am_sar(d.table, layout.w, null, opts);
      const TestResult wald = wald_test(f.rho, 0.0, rho_standard_error(f));
      const TestResult lr = rho_lr_test(f, d.table, layout.w);
      ++used;
      if (wald.p_value < 0.05) ++wald_rej;
      if (lr.p_value < 0.05) ++lr_rej;
    } catch (const std::exception&) {
    }
  }
  const double wald_size = static_cast<double>(wald_rej) / used;
  const double lr_size = static_cast<double>(lr_rej) / used;

  Scenario cov = grid(20, 0.4, 50, 101);
  const StudyLayout cov_layout = build_study_layout(cov);
  double coverage_sum = 0.0;
  int cov_used = 0;
  for (int r = 0; r < cov.replicates; ++r) {
    const SimulatedData d = simulate_dataset(cov, cov_layout, r);
    try {
      const FitResult f = fit_h_am_sar(d.table, cov_layout.w, cov, opts);
      // The fitted smooth is centred over the sample.
      double centre = 0.0;
      for (double x : d.table.column("x3")) centre += true_smooth(x);
      centre /= static_cast<double>(d.table.rows());
      const auto xs = smooth_grid(f, Submodel::mean, "x3", 100);
      const CurveTable c = smooth_ci(f, Submodel::mean, "x3", xs);
      int inside = 0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const double t = true_smooth(xs[i]) - centre;
        if (c.lower[i] <= t && t <= c.upper[i]) ++inside;
      }
      coverage_sum += static_cast<double>(inside) / xs.size();
      ++cov_used;
    } catch (const std::exception&) {
    }
  }
  const double coverage = coverage_sum / cov_used;
  const bool ok = used == null.replicates && cov_used == cov.replicates &&
                  within(wald_size, 0.05, 0.03) && within(lr_size, 0.05, 0.03) && coverage >= 0.90;
  report(10, ok,
         "Wald size " + fmt("%.3f", wald_size) + ", LR size " + fmt("%.3f", lr_size) +
             " (0.05 +- 0.03) over " + std::to_string(used) + " fits; band coverage " +
             fmt("%.3f", coverage) + " (>= 0.90) over " + std::to_string(cov_used) + " fits");
}

void criterion_11() {
  Scenario s = grid(20, 0.8, 50, 110);
  const StudyLayout layout = build_study_layout(s);
  int raw_sig = 0;
  int resid_insig = 0;
  double raw_i = 0.0;
  double resid_i = 0.0;
  for (int r = 0; r < s.replicates; ++r) {
    const SimulatedData d = simulate_dataset(s, layout, r);
    const MoranResult raw = morans_i(d.table.column_vector("y"), layout.w, 999, 2 * r);
    if (raw.statistic > raw.expected && raw.p_value <= 0.05) ++raw_sig;
    raw_i += raw.statistic / s.replicates;
    try {
      const FitResult f = fit_h_am_sar(d.table, layout.w, s);
      const MoranResult res = morans_i(f.standardized_residuals(), layout.w, 999, 2 * r + 1);
      if (res.p_value > 0.05) ++resid_insig;
      resid_i += res.statistic / s.replicates;
    } catch (const std::exception&) {
    }
  }
  const bool ok = raw_sig == s.replicates && resid_insig >= 45;
  report(11, ok,
         "raw y significant positive in " + std::to_string(raw_sig) + "/50 (mean I " +
             fmt("%.3f", raw_i) + "); residuals insignificant in " + std::to_string(resid_insig) +
             "/50 (need 45, mean I " + fmt("%.3f", resid_i) + ")");
}

}  // namespace

int main() {
  const std::vector<std::function<void()>> all{criterion_1, criterion_2, criterion_3, criterion_4,
                                               criterion_5, criterion_6, criterion_7, criterion_8,
                                               criterion_9, criterion_10, criterion_11};
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      all[i]();
    } catch (const std::exception& e) {
      report(static_cast<int>(i + 1), false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::fprintf(stderr, "  (criterion %zu took %.1f s)\n", i + 1, secs);
  }
  std::printf("%d of %zu criteria failed\n", failures, all.size());
  return failures == 0 ? 0 : 1;
}
