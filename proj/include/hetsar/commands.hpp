#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace hetsar {

/// Exit codes shared by every subcommand.
enum ExitCode : int {
  kExitOk = 0,
  kExitInput = 1,
  kExitNumerical = 2,
  kExitNotConverged = 3,
};

struct FitCommand {
  std::string data;
  std::string spec;
  std::string weights;
  std::string out;
  double rho_tol = 1e-6;
  int max_outer = 50;
};

struct SimulateCommand {
  std::string scenario;
  std::string out;
  std::optional<std::string> emit_data;
  int threads = 0;
};

struct ImpactsCommand {
  std::string fit;
  std::string weights;
  std::string variable;
};

struct MoranCommand {
  std::string data;
  std::string column;
  std::string weights;
  int permutations = 999;
  std::uint64_t seed = 0;
  std::string scatter;
};

int cmd_fit(const FitCommand& c, std::ostream& out, std::ostream& err);
int cmd_simulate(const SimulateCommand& c, std::ostream& out, std::ostream& err);
int cmd_impacts(const ImpactsCommand& c, std::ostream& out, std::ostream& err);
int cmd_moran(const MoranCommand& c, std::ostream& out, std::ostream& err);

}  // namespace hetsar
