#include "hetsar/sim.hpp"
#include "hetsar/rng.hpp"

#include <omp.h>

#include <cmath>

namespace hetsar {

const ParameterSummary* EstimatorReport::find(const std::string& parameter) const {
  for (const auto& p : parameters) {
    if (p.parameter == parameter) return &p;
  }
  return nullptr;
}

const EstimatorReport* SimulationReport::find(Estimator e) const {
  for (const auto& r : estimators) {
    if (r.estimator == e) return &r;
  }
  return nullptr;
}

SimulationReport aggregate(const Scenario& scenario, const ReplicateTable& outcomes) {
  SimulationReport report;
  report.scenario = scenario;
  report.rng = kRngName;
  const double intercept_truth = scenario.beta0 + true_smooth_mean();
  struct Field {
    const char* name;
    double ReplicateEstimates::*member;
    double truth;
  };
  const Field fields[] = {
      {"rho", &ReplicateEstimates::rho, scenario.rho},
      {"beta0", &ReplicateEstimates::beta0, intercept_truth},
      {"beta1", &ReplicateEstimates::beta1, scenario.beta1},
      {"beta2", &ReplicateEstimates::beta2, scenario.beta2},
      {"alpha0", &ReplicateEstimates::alpha0, scenario.alpha0},
      {"alpha1", &ReplicateEstimates::alpha1, scenario.alpha1},
  };
  for (std::size_t k = 0; k < scenario.estimators.size(); ++k) {
    EstimatorReport er;
    er.estimator = scenario.estimators[k];
    for (std::size_t r = 0; r < outcomes.size(); ++r) {
      const ReplicateEstimates& est = outcomes[r].at(k);
      er.replicates.push_back(est);
      if (!est.ok) {
        ++er.failures;
        continue;
      }
      er.replicate_index.push_back(static_cast<int>(r));
      er.mse.push_back(est.mse);
    }
    if (er.replicate_index.empty()) {
      throw NumericalError("every replicate failed for " + estimator_name(er.estimator));
    }
    for (const Field& f : fields) {
      ParameterSummary s;
      s.parameter = f.name;
      s.truth = f.truth;
      double sum = 0.0;
      int count = 0;
      for (int r : er.replicate_index) {
        const double v = er.replicates[r].*f.member;
        if (!std::isfinite(v)) continue;
        sum += v;
        ++count;
      }
      if (count == 0) continue;  // parameter absent from this estimator
      s.count = count;
      s.mean = sum / count;
      s.bias = s.mean - s.truth;
      if (count > 1) {
        double ss = 0.0;
        for (int r : er.replicate_index) {
          const double v = er.replicates[r].*f.member;
          if (std::isfinite(v)) ss += (v - s.mean) * (v - s.mean);
        }
        s.sd = std::sqrt(ss / (count - 1));
      }
      er.parameters.push_back(s);
    }
    report.estimators.push_back(std::move(er));
  }
  return report;
}

SimulationReport run_study(const Scenario& scenario, const StudyOptions& options) {
  const StudyLayout layout = build_study_layout(scenario);
  ReplicateTable outcomes;
  if (options.parallel) {
    const int saved = omp_get_max_threads();
    if (options.threads > 0) omp_set_num_threads(options.threads);
    outcomes = kernels::run_replicates_parallel(scenario, layout);
    omp_set_num_threads(saved);
  } else {
    outcomes = kernels::run_replicates_serial(scenario, layout);
  }
  return aggregate(scenario, outcomes);
}

}  // namespace hetsar
