#include "hetsar/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Heteroscedastic semiparametric spatial autoregressive models"};
  app.require_subcommand(1);

  hetsar::FitCommand fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a model to a CSV file");
  fit_cmd->add_option("--data", fit.data, "CSV data file")->required();
  fit_cmd->add_option("--spec", fit.spec, "Model-spec document")->required();
  fit_cmd->add_option("--weights", fit.weights, "Weight-spec document")->required();
  fit_cmd->add_option("--out", fit.out, "Output fit document")->required();
  fit_cmd->add_option("--rho-tol", fit.rho_tol, "Outer convergence tolerance on rho")
      ->check(CLI::PositiveNumber);
  fit_cmd->add_option("--max-outer", fit.max_outer, "Maximum outer iterations")
      ->check(CLI::PositiveNumber);

  hetsar::SimulateCommand sim;
  std::string emit;
  auto* sim_cmd = app.add_subcommand("simulate", "Run a simulation study");
  sim_cmd->add_option("--scenario", sim.scenario, "Scenario document")->required();
  sim_cmd->add_option("--out", sim.out, "Output report document")->required();
  auto* emit_opt = sim_cmd->add_option("--emit-data", emit, "Write each replicate's data here");
  sim_cmd->add_option("--threads", sim.threads, "Worker threads (0: default)")
      ->check(CLI::NonNegativeNumber);

  hetsar::ImpactsCommand imp;
  auto* imp_cmd = app.add_subcommand("impacts", "Direct, indirect and total effects");
  imp_cmd->add_option("--fit", imp.fit, "Fit document")->required();
  imp_cmd->add_option("--weights", imp.weights, "Weight-spec document")->required();
  imp_cmd->add_option("--variable", imp.variable, "Linear mean term")->required();

  hetsar::MoranCommand mor;
  auto* mor_cmd = app.add_subcommand("moran", "Moran's I with a permutation test");
  mor_cmd->add_option("--data", mor.data, "CSV data file")->required();
  mor_cmd->add_option("--column", mor.column, "Column to test")->required();
  mor_cmd->add_option("--weights", mor.weights, "Weight-spec document")->required();
  mor_cmd->add_option("--permutations", mor.permutations, "Permutations (>= 99)");
  mor_cmd->add_option("--seed", mor.seed, "Permutation seed");
  mor_cmd->add_option("--scatter", mor.scatter, "Scatter CSV output (value, lag)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : hetsar::kExitInput;
  }

  if (*fit_cmd) return hetsar::cmd_fit(fit, std::cout, std::cerr);
  if (*sim_cmd) {
    if (*emit_opt) sim.emit_data = emit;
    return hetsar::cmd_simulate(sim, std::cout, std::cerr);
  }
  if (*imp_cmd) return hetsar::cmd_impacts(imp, std::cout, std::cerr);
  return hetsar::cmd_moran(mor, std::cout, std::cerr);
}
