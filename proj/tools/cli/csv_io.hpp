#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace rflr::cli {

/// Wide curve table: one row per observation, columns id[,y],t_1..t_m.
struct CurveTable {
  std::vector<std::string> ids;
  std::optional<Eigen::VectorXi> labels;
  Eigen::MatrixXd curves;
  /// Grid read from the header when every curve column name is numeric.
  std::optional<std::vector<double>> header_grid;
};

CurveTable read_curve_csv(const std::string& path, bool require_labels);
CurveTable parse_curve_csv(std::istream& in, const std::string& source, bool require_labels);

/// Grid points from a sidecar file or an inline comma-separated list.
std::vector<double> read_grid_spec(const std::string& spec);

void write_curve_csv(std::ostream& out, const CurveTable& table);

}  // namespace rflr::cli
