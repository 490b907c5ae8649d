#pragma once

#include <Eigen/Dense>

#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace hetsar {

/// Named numeric columns of equal length.
class DataTable {
 public:
  DataTable() = default;

  void add_column(std::string name, std::vector<double> values);
  bool has_column(const std::string& name) const;
  std::span<const double> column(const std::string& name) const;
  Eigen::VectorXd column_vector(const std::string& name) const;

  std::size_t rows() const { return rows_; }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::vector<std::vector<double>> columns_;
  std::size_t rows_ = 0;
};

/// Header row then numeric rows. Empty cells and NA/NaN are missing values and
/// are rejected with the offending row numbers listed.
DataTable read_csv(std::istream& in);
DataTable read_csv_file(const std::string& path);

/// Writes with 17 significant digits so values round-trip exactly.
void write_csv(std::ostream& out, const DataTable& table);

}  // namespace hetsar
