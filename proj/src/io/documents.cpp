#include "hetsar/inference.hpp"
#include "hetsar/io.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace hetsar {

namespace fs = std::filesystem;

void check_format_version(const json& doc, bool required) {
  if (!doc.is_object()) throw InputError("document must be a JSON object");
  if (!doc.contains("format_version")) {
    if (required) throw InputError("document has no format_version");
    return;
  }
  const auto& v = doc.at("format_version");
  if (!v.is_string()) throw InputError("format_version must be a string");
  const std::string s = v.get<std::string>();
  const std::string major = s.substr(0, s.find('.'));
  const std::string ours = std::string(kFormatVersion).substr(0, 1);
  if (major != ours) throw InputError("unsupported format_version " + s);
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
  if (!out) throw InputError("error writing " + path.string());
}

json read_json_file(const fs::path& path) {
  try {
    return json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw NumericalError("SHA-256 failed");
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  }
  return hex.str();
}

namespace {

template <class T>
T field(const json& doc, const char* key, const T& fallback) {
  if (!doc.contains(key)) return fallback;
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InputError(std::string("field '") + key + "': " + e.what());
  }
}

template <class T>
T required(const json& doc, const char* key) {
  if (!doc.contains(key)) throw InputError(std::string("missing field '") + key + "'");
  return field<T>(doc, key, T{});
}

std::vector<SmoothConfig> smooth_list(const json& sub) {
  std::vector<SmoothConfig> out;
  if (!sub.contains("smooth")) return out;
  if (!sub.at("smooth").is_array()) throw InputError("'smooth' must be a list");
  for (const auto& s : sub.at("smooth")) {
    SmoothConfig c;
    c.variable = required<std::string>(s, "var");
    c.num_basis = field<int>(s, "num_basis", c.num_basis);
    c.degree = field<int>(s, "degree", c.degree);
    c.penalty_order = field<int>(s, "penalty_order", c.penalty_order);
    out.push_back(c);
  }
  return out;
}

json smooth_json(const std::vector<SmoothConfig>& list) {
  json out = json::array();
  for (const auto& c : list) {
    out.push_back({{"var", c.variable},
                   {"num_basis", c.num_basis},
                   {"degree", c.degree},
                   {"penalty_order", c.penalty_order}});
  }
  return out;
}

json vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

// Finite doubles pass through; anything else becomes null.
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

ModelSpec model_spec_from_json(const json& doc) {
  try {
    check_format_version(doc, false);
    ModelSpec spec;
    spec.response = required<std::string>(doc, "response");
    const json mean = field<json>(doc, "mean", json::object());
    const json scale = field<json>(doc, "scale", json::object());
    spec.mean_linear = field<std::vector<std::string>>(mean, "linear", {});
    spec.mean_smooth = smooth_list(mean);
    spec.scale_linear = field<std::vector<std::string>>(scale, "linear", {});
    spec.scale_smooth = smooth_list(scale);
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    throw InputError(std::string("model spec: ") + e.what());
  }
}

json model_spec_to_json(const ModelSpec& spec) {
  return {{"response", spec.response},
          {"mean", {{"linear", spec.mean_linear}, {"smooth", smooth_json(spec.mean_smooth)}}},
          {"scale", {{"linear", spec.scale_linear}, {"smooth", smooth_json(spec.scale_smooth)}}}};
}

std::vector<Point> read_points_csv(const fs::path& path) {
  const DataTable t = read_csv_file(path.string());
  if (!t.has_column("x") || !t.has_column("y")) {
    throw InputError(path.string() + ": coordinate file needs columns x and y");
  }
  std::vector<Point> pts(t.rows());
  for (std::size_t i = 0; i < t.rows(); ++i) pts[i] = {t.column("x")[i], t.column("y")[i]};
  return pts;
}

namespace {

std::vector<Point> points_from_json(const json& doc, const fs::path& base_dir,
                                    std::string& digest_input) {
  if (doc.contains("points")) {
    std::vector<Point> pts;
    for (const auto& p : doc.at("points")) {
      if (!p.is_array() || p.size() != 2) throw InputError("points must be [x, y] pairs");
      pts.push_back({p[0].get<double>(), p[1].get<double>()});
    }
    return pts;
  }
  if (doc.contains("coordinates_file")) {
    const fs::path file = base_dir / required<std::string>(doc, "coordinates_file");
    digest_input += read_text_file(file);
    return read_points_csv(file);
  }
  return {};
}

}  // namespace

LoadedWeights weights_from_json(const json& doc, const fs::path& base_dir) {
  try {
    check_format_version(doc, false);
    const std::string kind = required<std::string>(doc, "kind");
    std::string digest_input = doc.dump();
    if (kind == "grid_rook") {
      WeightMatrix w = build_rook_grid(required<int>(doc, "rows"), required<int>(doc, "cols"));
      return {std::move(w), sha256_hex(digest_input)};
    }
    if (kind == "inverse_distance_squared" || kind == "points_invdist2") {
      const auto pts = points_from_json(doc, base_dir, digest_input);
      if (pts.empty()) throw InputError("inverse-distance weights need points or coordinates_file");
      WeightMatrix w = build_inverse_distance_squared(pts);
      return {std::move(w), sha256_hex(digest_input)};
    }
    if (kind == "adjacency") {
      const std::string text = read_text_file(base_dir / required<std::string>(doc, "file"));
      digest_input += text;
      WeightMatrix w = row_standardize(parse_adjacency(text));
      return {std::move(w), sha256_hex(digest_input)};
    }
    throw InputError("unknown weight kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw InputError(std::string("weight spec: ") + e.what());
  }
}

LoadedWeights load_weights(const fs::path& path) {
  return weights_from_json(read_json_file(path), path.parent_path());
}

Scenario scenario_from_json(const json& doc, const fs::path& base_dir) {
  try {
    check_format_version(doc, false);
    Scenario s;
    const json layout = required<json>(doc, "layout");
    const std::string kind = required<std::string>(layout, "kind");
    std::string unused;
    if (kind == "grid_rook") {
      s.layout.kind = LayoutKind::grid_rook;
      s.layout.rows = required<int>(layout, "rows");
      s.layout.cols = required<int>(layout, "cols");
    } else if (kind == "points_invdist2" || kind == "inverse_distance_squared") {
      s.layout.kind = LayoutKind::points_invdist2;
      s.layout.n_points = field<int>(layout, "n", 0);
      s.layout.coordinates = points_from_json(layout, base_dir, unused);
    } else if (kind == "adjacency") {
      s.layout.kind = LayoutKind::adjacency;
      s.layout.adjacency_text = read_text_file(base_dir / required<std::string>(layout, "file"));
      s.covariates = CovariateSet::uniform;
    } else {
      throw InputError("unknown layout kind '" + kind + "'");
    }
    if (doc.contains("covariates")) {
      const std::string c = doc.at("covariates").get<std::string>();
      if (c == "standard") {
        s.covariates = CovariateSet::standard;
      } else if (c == "uniform") {
        s.covariates = CovariateSet::uniform;
      } else {
        throw InputError("covariates must be 'standard' or 'uniform'");
      }
    }
    s.rho = required<double>(doc, "rho");
    s.beta0 = field(doc, "beta0", s.beta0);
    s.beta1 = field(doc, "beta1", s.beta1);
    s.beta2 = field(doc, "beta2", s.beta2);
    s.alpha0 = field(doc, "alpha0", s.alpha0);
    s.alpha1 = field(doc, "alpha1", s.alpha1);
    s.replicates = field(doc, "replicates", s.replicates);
    s.seed = field<std::uint64_t>(doc, "seed", s.seed);
    s.num_basis = field(doc, "num_basis", s.num_basis);
    if (doc.contains("estimators")) {
      s.estimators.clear();
      for (const auto& e : doc.at("estimators")) s.estimators.push_back(parse_estimator(e.get<std::string>()));
    }
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw InputError(std::string("scenario: ") + e.what());
  }
}

json scenario_to_json(const Scenario& s) {
  json layout;
  switch (s.layout.kind) {
    case LayoutKind::grid_rook:
      layout = {{"kind", "grid_rook"}, {"rows", s.layout.rows}, {"cols", s.layout.cols}};
      break;
    case LayoutKind::points_invdist2:
      layout = {{"kind", "points_invdist2"}};
      if (s.layout.coordinates.empty()) {
        layout["n"] = s.layout.n_points;
      } else {
        json pts = json::array();
        for (const auto& p : s.layout.coordinates) pts.push_back({p.x, p.y});
        layout["points"] = pts;
      }
      break;
    case LayoutKind::adjacency:
      layout = {{"kind", "adjacency"}, {"sha256", sha256_hex(s.layout.adjacency_text)}};
      break;
  }
  json est = json::array();
  for (Estimator e : s.estimators) est.push_back(estimator_name(e));
  return {{"layout", layout},
          {"covariates", s.covariates == CovariateSet::standard ? "standard" : "uniform"},
          {"rho", s.rho},
          {"beta0", s.beta0},
          {"beta1", s.beta1},
          {"beta2", s.beta2},
          {"alpha0", s.alpha0},
          {"alpha1", s.alpha1},
          {"replicates", s.replicates},
          {"seed", s.seed},
          {"num_basis", s.num_basis},
          {"estimators", est}};
}

namespace {

json coefficient_table(const FitResult& fit, Submodel sub) {
  const SubDesign& d = fit.design.of(sub);
  const Eigen::VectorXd& coef = sub == Submodel::mean ? fit.beta : fit.alpha;
  Eigen::VectorXd se;
  if (fit.has_information()) se = standard_errors(fit, sub);
  json rows = json::array();
  for (Eigen::Index j = 0; j < d.num_unpenalized; ++j) {
    json row = {{"name", d.column_names[j]}, {"estimate", coef(j)}};
    if (se.size() > 0 && se(j) > 0.0) {
      const TestResult t = wald_test(coef(j), 0.0, se(j));
      row["se"] = se(j);
      row["z"] = t.statistic;
      row["p"] = t.p_value;
    } else {
      row["se"] = nullptr;
      row["z"] = nullptr;
      row["p"] = nullptr;
    }
    rows.push_back(row);
  }
  return rows;
}

json smoothing_table(const SubDesign& d, const std::vector<double>& edf) {
  json rows = json::array();
  for (std::size_t b = 0; b < d.blocks.size(); ++b) {
    rows.push_back({{"term", d.blocks[b].term.variable_name},
                    {"psi", d.blocks[b].term.psi},
                    {"edf", edf.at(b)}});
  }
  return rows;
}

json curve_tables(const FitResult& fit, Submodel sub) {
  json rows = json::array();
  if (!fit.has_information()) return rows;
  for (const auto& b : fit.design.of(sub).blocks) {
    const std::string& term = b.term.variable_name;
    const CurveTable c = smooth_ci(fit, sub, term, smooth_grid(fit, sub, term));
    rows.push_back({{"term", term},
                    {"level", 0.95},
                    {"grid", c.grid},
                    {"fit", c.fit},
                    {"lower", c.lower},
                    {"upper", c.upper}});
  }
  return rows;
}

}  // namespace

json fit_document(const FitResult& fit, const FitProvenance& prov) {
  json doc;
  doc["format_version"] = kFormatVersion;
  doc["tool_version"] = kToolVersion;
  doc["converged"] = fit.converged;
  doc["iterations"] = fit.iterations;
  doc["n"] = fit.y.size();
  doc["spec"] = model_spec_to_json(fit.spec);

  json rho = {{"estimate", fit.rho},
              {"estimated", fit.rho_estimated},
              {"at_bound", fit.rho_at_bound},
              {"bounds", {fit.bounds.lo, fit.bounds.hi}},
              {"se", nullptr},
              {"z", nullptr},
              {"p", nullptr}};
  double rho_se = std::numeric_limits<double>::quiet_NaN();
  if (fit.rho_estimated && fit.has_information()) {
    rho_se = rho_standard_error(fit);
    const TestResult t = wald_test(fit.rho, 0.0, rho_se);
    rho["se"] = rho_se;
    rho["z"] = t.statistic;
    rho["p"] = t.p_value;
  }
  doc["rho"] = rho;
  doc["coefficients"] = {{"mean", coefficient_table(fit, Submodel::mean)},
                         {"scale", coefficient_table(fit, Submodel::scale)}};
  doc["parameters"] = {{"beta", vec(fit.beta)},
                       {"alpha", vec(fit.alpha)},
                       {"mean_columns", fit.design.mean.column_names},
                       {"scale_columns", fit.design.scale.column_names}};
  const EffectiveDf edf = effective_dfs(fit);
  doc["smoothing"] = {{"mean", smoothing_table(fit.design.mean, edf.mean_blocks)},
                      {"scale", smoothing_table(fit.design.scale, edf.scale_blocks)}};
  doc["curves"] = {{"mean", curve_tables(fit, Submodel::mean)},
                   {"scale", curve_tables(fit, Submodel::scale)}};
  doc["summary"] = {{"rho", fit.rho},
                    {"rho_se", num(rho_se)},
                    {"global_deviance", fit.global_deviance},
                    {"loglik", fit.loglik},
                    {"penalized_loglik", fit.penalized_loglik},
                    {"df_mean", edf.mean},
                    {"df_scale", edf.scale},
                    {"df_error", edf.error},
                    {"mse", fit.mse()},
                    {"clamp_count", fit.clamp_count}};
  json trace = json::array();
  for (const auto& t : fit.trace) {
    trace.push_back({{"iteration", t.iteration},
                     {"step", t.step},
                     {"rho", t.rho},
                     {"penalized_loglik", t.penalized_loglik}});
  }
  doc["trace"] = trace;
  doc["log"] = fit.log;
  const auto& o = prov.options;
  doc["provenance"] = {{"data_path", prov.data_path},
                       {"data_sha256", prov.data_sha256},
                       {"weights_sha256", prov.weights_sha256},
                       {"tool_version", kToolVersion},
                       {"options",
                        {{"rho_tol", o.rho_tol},
                         {"max_outer", o.max_outer},
                         {"loglik_rel_tol", o.loglik_rel_tol},
                         {"scale_score_tol", o.scale_score_tol},
                         {"clamp_bound", o.clamp_bound}}}};
  return doc;
}

json report_document(const SimulationReport& report) {
  json doc;
  doc["format_version"] = kFormatVersion;
  doc["tool_version"] = kToolVersion;
  doc["rng"] = report.rng;
  doc["seed"] = report.scenario.seed;
  doc["scenario"] = scenario_to_json(report.scenario);
  doc["conventions"] = {
      {"beta0", "truth is beta0 + E f(x3); the intercept absorbs the mean of the centered smooth"},
      {"beta1", "net coefficient on x1"},
      {"alpha1", "sigma = exp(alpha0 - alpha1 x2); reported value is minus the fitted x2 slope"},
      {"mse", "mean of (y - rho W y - X beta)^2 over units"}};
  json ests = json::array();
  for (const auto& er : report.estimators) {
    json params = json::array();
    for (const auto& p : er.parameters) {
      params.push_back({{"parameter", p.parameter},
                        {"truth", p.truth},
                        {"mean", p.mean},
                        {"sd", p.sd ? json(*p.sd) : json(nullptr)},
                        {"bias", p.bias},
                        {"count", p.count}});
    }
    json reps = json::array();
    for (std::size_t r = 0; r < er.replicates.size(); ++r) {
      const auto& e = er.replicates[r];
      json row = {{"replicate", r}, {"ok", e.ok}};
      if (!e.failure.empty()) row["failure"] = e.failure;
      if (e.ok) {
        row["rho"] = num(e.rho);
        row["beta0"] = num(e.beta0);
        row["beta1"] = num(e.beta1);
        row["beta2"] = num(e.beta2);
        row["alpha0"] = num(e.alpha0);
        row["alpha1"] = num(e.alpha1);
        row["mse"] = num(e.mse);
      }
      reps.push_back(row);
    }
    ests.push_back({{"estimator", estimator_name(er.estimator)},
                    {"failures", er.failures},
                    {"successful", er.replicate_index.size()},
                    {"parameters", params},
                    {"replicate_index", er.replicate_index},
                    {"mse", er.mse},
                    {"replicates", reps}});
  }
  doc["estimators"] = ests;
  return doc;
}

std::string report_mse_csv(const SimulationReport& report) {
  std::string out = "replicate,estimator,mse\n";
  char buf[64];
  for (const auto& er : report.estimators) {
    for (std::size_t i = 0; i < er.mse.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", er.mse[i]);
      out += std::to_string(er.replicate_index[i]) + "," + estimator_name(er.estimator) + "," +
             buf + "\n";
    }
  }
  return out;
}

std::string format_impacts(const ImpactSummary& s) {
  std::ostringstream out;
  out << std::setprecision(4);
  out << std::left << std::setw(16) << "variable" << std::setw(12) << "coefficient"
      << std::setw(12) << "direct" << std::setw(12) << "indirect" << "total\n";
  out << std::setw(16) << s.variable << std::setw(12) << s.coefficient << std::setw(12)
      << s.direct << std::setw(12) << s.indirect << s.total << "\n";
  return out.str();
}

}  // namespace hetsar
