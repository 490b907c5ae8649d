#pragma once

#include "hetsar/effects.hpp"
#include "hetsar/estimator.hpp"
#include "hetsar/sim.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace hetsar {

using json = nlohmann::json;

inline constexpr const char* kFormatVersion = "1.0";
inline constexpr const char* kToolVersion = "hetsar 0.1.0";

/// Throws InputError when the document's format_version has an unknown major.
/// A missing field is accepted only when `required` is false.
void check_format_version(const json& doc, bool required);

json read_json_file(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string sha256_hex(const std::string& bytes);

ModelSpec model_spec_from_json(const json& doc);
json model_spec_to_json(const ModelSpec& spec);

/// Weight-spec document: {"kind": "grid_rook", "rows", "cols"} |
/// {"kind": "inverse_distance_squared", "points": [[x, y], ...] | "coordinates_file"} |
/// {"kind": "adjacency", "file"}. Relative paths resolve against base_dir.
struct LoadedWeights {
  WeightMatrix w;
  std::string digest;  // over the document and any file it references
};
LoadedWeights load_weights(const std::filesystem::path& path);
LoadedWeights weights_from_json(const json& doc, const std::filesystem::path& base_dir);

std::vector<Point> read_points_csv(const std::filesystem::path& path);

Scenario scenario_from_json(const json& doc, const std::filesystem::path& base_dir);
json scenario_to_json(const Scenario& scenario);

struct FitProvenance {
  std::string data_path;
  std::string data_sha256;
  std::string weights_sha256;
  ConvergenceOptions options;
};

json fit_document(const FitResult& fit, const FitProvenance& provenance);
json report_document(const SimulationReport& report);
/// replicate,estimator,mse rows for box plots.
std::string report_mse_csv(const SimulationReport& report);

/// Human table with 4 significant digits.
std::string format_impacts(const ImpactSummary& s);

}  // namespace hetsar
