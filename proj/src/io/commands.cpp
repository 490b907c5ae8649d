#include "hetsar/commands.hpp"
#include "hetsar/io.hpp"

#include <cstdio>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace hetsar {

namespace fs = std::filesystem;

namespace {

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
}

DataTable load_csv(const std::string& path, std::string* digest) {
  const std::string text = read_text_file(path);
  if (digest) *digest = sha256_hex(text);
  std::istringstream in(text);
  return read_csv(in);
}

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

int cmd_fit(const FitCommand& c, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    FitProvenance prov;
    prov.data_path = fs::path(c.data).filename().string();
    const DataTable data = load_csv(c.data, &prov.data_sha256);
    const ModelSpec spec = model_spec_from_json(read_json_file(c.spec));
    const LoadedWeights lw = load_weights(c.weights);
    prov.weights_sha256 = lw.digest;
    prov.options.rho_tol = c.rho_tol;
    prov.options.max_outer = c.max_outer;
    const FitResult result = fit(spec, data, lw.w, prov.options);
    write_text_file(c.out, fit_document(result, prov).dump(2) + "\n");
    out << std::setprecision(6) << "rho = " << result.rho << "  GD = " << result.global_deviance
        << "  iterations = " << result.iterations
        << (result.converged ? "  converged" : "  NOT converged") << "\n";
    if (!result.converged) {
      for (const auto& line : result.log) err << "note: " << line << "\n";
      return static_cast<int>(kExitNotConverged);
    }
    return static_cast<int>(kExitOk);
  });
}

int cmd_simulate(const SimulateCommand& c, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Scenario scenario =
        scenario_from_json(read_json_file(c.scenario), fs::path(c.scenario).parent_path());
    if (c.threads < 0) throw InputError("--threads must be nonnegative");
    const SimulationReport report = run_study(scenario, StudyOptions{true, c.threads});
    write_text_file(c.out, report_document(report).dump(2) + "\n");
    fs::path mse_path = c.out;
    mse_path.replace_extension(".mse.csv");
    write_text_file(mse_path, report_mse_csv(report));

    if (c.emit_data) {
      const fs::path dir = *c.emit_data;
      fs::create_directories(dir);
      const StudyLayout layout = build_study_layout(scenario);
      json wdoc;
      switch (scenario.layout.kind) {
        case LayoutKind::grid_rook:
          wdoc = {{"kind", "grid_rook"}, {"rows", scenario.layout.rows}, {"cols", scenario.layout.cols}};
          break;
        case LayoutKind::points_invdist2: {
          std::string csv = "x,y\n";
          for (const auto& p : layout.points) csv += g17(p.x) + "," + g17(p.y) + "\n";
          write_text_file(dir / "points.csv", csv);
          wdoc = {{"kind", "inverse_distance_squared"}, {"coordinates_file", "points.csv"}};
          break;
        }
        case LayoutKind::adjacency:
          write_text_file(dir / "weights.adj", scenario.layout.adjacency_text);
          wdoc = {{"kind", "adjacency"}, {"file", "weights.adj"}};
          break;
      }
      wdoc["format_version"] = kFormatVersion;
      write_text_file(dir / "weights.json", wdoc.dump(2) + "\n");
      json sdoc = model_spec_to_json(simulation_spec(scenario, true));
      sdoc["format_version"] = kFormatVersion;
      write_text_file(dir / "spec.json", sdoc.dump(2) + "\n");
      for (int r = 0; r < scenario.replicates; ++r) {
        const SimulatedData d = simulate_dataset(scenario, layout, r);
        char name[40];
        std::snprintf(name, sizeof name, "replicate_%04d.csv", r);
        std::ostringstream csv;
        write_csv(csv, d.table);
        write_text_file(dir / name, csv.str());
      }
    }

    out << std::setprecision(4);
    for (const auto& er : report.estimators) {
      out << estimator_name(er.estimator) << " (" << er.replicate_index.size() << " ok, "
          << er.failures << " failed)\n";
      for (const auto& p : er.parameters) {
        out << "  " << std::left << std::setw(8) << p.parameter << " mean " << std::setw(10)
            << p.mean << " sd " << std::setw(10);
        if (p.sd) {
          out << *p.sd;
        } else {
          out << "-";
        }
        out << " bias " << p.bias << "\n";
      }
    }
    return static_cast<int>(kExitOk);
  });
}

int cmd_impacts(const ImpactsCommand& c, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const json doc = read_json_file(c.fit);
    check_format_version(doc, true);
    const LoadedWeights lw = load_weights(c.weights);
    if (doc.at("n").get<Eigen::Index>() != lw.w.n()) {
      throw InputError("weight matrix does not match the fit (different n)");
    }
    for (const auto& s : doc.at("smoothing").at("mean")) {
      if (s.at("term").get<std::string>() == c.variable) {
        err << "'" << c.variable
            << "' is a smooth term; impact decomposition is only defined for linear mean terms\n";
        return static_cast<int>(kExitNumerical);
      }
    }
    const json& mean = doc.at("coefficients").at("mean");
    for (const auto& row : mean) {
      const std::string name = row.at("name").get<std::string>();
      if (name == c.variable && name != "(Intercept)") {
        const ImpactSummary s = impacts(row.at("estimate").get<double>(),
                                        doc.at("rho").at("estimate").get<double>(), lw.w, name);
        out << format_impacts(s);
        return static_cast<int>(kExitOk);
      }
    }
    const auto& spec = doc.at("spec").at("scale");
    bool scale_term = false;
    for (const auto& v : spec.at("linear")) scale_term |= v.get<std::string>() == c.variable;
    for (const auto& v : spec.at("smooth")) scale_term |= v.at("var").get<std::string>() == c.variable;
    if (scale_term) {
      err << "'" << c.variable
          << "' enters only the scale model; impacts are defined for linear mean terms\n";
      return static_cast<int>(kExitNumerical);
    }
    throw InputError("'" + c.variable + "' is not a term of the fitted model");
  });
}

int cmd_moran(const MoranCommand& c, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const DataTable data = load_csv(c.data, nullptr);
    if (!data.has_column(c.column)) throw InputError("no column '" + c.column + "'");
    const LoadedWeights lw = load_weights(c.weights);
    const MoranResult m = morans_i(data.column_vector(c.column), lw.w, c.permutations, c.seed);
    if (!c.scatter.empty()) {
      std::string csv = "value,lag\n";
      for (const auto& [v, l] : m.scatter) csv += g17(v) + "," + g17(l) + "\n";
      write_text_file(c.scatter, csv);
    }
    out << std::setprecision(4) << "Moran's I = " << m.statistic << "  E[I] = " << m.expected
        << "  p = " << m.p_value << " (" << m.permutations << " permutations, one-sided)\n";
    return static_cast<int>(kExitOk);
  });
}

}  // namespace hetsar
