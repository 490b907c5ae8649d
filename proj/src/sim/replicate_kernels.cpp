#include "hetsar/sim.hpp"

namespace hetsar::kernels {

namespace {

std::vector<ReplicateEstimates> one_replicate(const Scenario& scenario, const StudyLayout& layout,
                                              int r) {
  std::vector<ReplicateEstimates> row;
  try {
    const SimulatedData d = simulate_dataset(scenario, layout, r);
    for (Estimator e : scenario.estimators) {
      row.push_back(run_estimator(e, d.table, layout.w, scenario));
    }
  } catch (const std::exception& ex) {
    ReplicateEstimates failed;
    failed.failure = ex.what();
    row.assign(scenario.estimators.size(), failed);
  }
  return row;
}

}  // namespace

ReplicateTable run_replicates_parallel(const Scenario& scenario, const StudyLayout& layout) {
  ReplicateTable out(static_cast<std::size_t>(scenario.replicates));
#pragma omp parallel for schedule(dynamic, 1)
  for (int r = 0; r < scenario.replicates; ++r) out[r] = one_replicate(scenario, layout, r);
  return out;
}

ReplicateTable run_replicates_serial(const Scenario& scenario, const StudyLayout& layout) {
  ReplicateTable out(static_cast<std::size_t>(scenario.replicates));
  for (int r = 0; r < scenario.replicates; ++r) out[r] = one_replicate(scenario, layout, r);
  return out;
}

}  // namespace hetsar::kernels
