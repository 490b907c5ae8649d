#include "hetsar/data_table.hpp"

#include "hetsar/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace hetsar {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r\"");
    const auto e = field.find_last_not_of(" \t\r\"");
    out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_number(const std::string& s, double& v) {
  if (s.empty()) return false;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  if (*b == '+') ++b;
  auto [ptr, ec] = std::from_chars(b, e, v);
  return ec == std::errc() && ptr == e;
}

}  // namespace

void DataTable::add_column(std::string name, std::vector<double> values) {
  if (has_column(name)) throw InputError("duplicate column '" + name + "'");
  if (!names_.empty() && values.size() != rows_) {
    throw InputError("column '" + name + "' has a different length");
  }
  rows_ = values.size();
  names_.push_back(std::move(name));
  columns_.push_back(std::move(values));
}

bool DataTable::has_column(const std::string& name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::span<const double> DataTable::column(const std::string& name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw InputError("missing column '" + name + "'");
  return columns_[static_cast<std::size_t>(it - names_.begin())];
}

Eigen::VectorXd DataTable::column_vector(const std::string& name) const {
  const auto c = column(name);
  return Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
}

DataTable read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("CSV is empty");
  const auto header = split_fields(line);
  std::vector<std::vector<double>> cols(header.size());
  std::vector<std::string> bad;
  std::vector<std::size_t> missing_rows;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++row;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw InputError("CSV row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                       " fields, expected " + std::to_string(header.size()));
    }
    bool missing = false;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      double v = 0.0;
      if (fields[c].empty() || fields[c] == "NA" || fields[c] == "NaN" || fields[c] == "nan") {
        missing = true;
        v = std::nan("");
      } else if (!parse_number(fields[c], v) || !std::isfinite(v)) {
        throw InputError("CSV row " + std::to_string(row) + ", column '" + header[c] +
                         "': non-numeric value '" + fields[c] + "'");
      }
      cols[c].push_back(v);
    }
    if (missing) missing_rows.push_back(row);
  }
  if (!missing_rows.empty()) {
    std::string msg = "missing values in CSV rows:";
    for (std::size_t i = 0; i < missing_rows.size() && i < 20; ++i) {
      msg += " " + std::to_string(missing_rows[i]);
    }
    if (missing_rows.size() > 20) msg += " ...";
    throw InputError(msg);
  }
  DataTable t;
  for (std::size_t c = 0; c < header.size(); ++c) t.add_column(header[c], std::move(cols[c]));
  return t;
}

DataTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open CSV '" + path + "'");
  return read_csv(in);
}

void write_csv(std::ostream& out, const DataTable& table) {
  const auto& names = table.names();
  for (std::size_t c = 0; c < names.size(); ++c) out << (c ? "," : "") << names[c];
  out << '\n';
  char buf[40];
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (std::size_t c = 0; c < names.size(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", table.column(names[c])[r]);
      out << (c ? "," : "") << buf;
    }
    out << '\n';
  }
}

}  // namespace hetsar
