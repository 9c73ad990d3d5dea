#include "cli/csv_io.hpp"

#include "cli/commands.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace rflr::cli {
namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::optional<double> to_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE) return std::nullopt;
  return v;
}

[[noreturn]] void malformed(const std::string& source, std::size_t line, const std::string& what) {
  throw CliError(kExitMalformed, source + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

CurveTable parse_curve_csv(std::istream& in, const std::string& source, bool require_labels) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty()) {
      header = split(line);
      break;
    }
  }
  if (header.empty()) throw CliError(kExitMalformed, source + ": empty file");
  if (header[0] != "id") malformed(source, lineno, "first column must be 'id'");
  const bool has_y = header.size() > 1 && header[1] == "y";
  if (require_labels && !has_y) malformed(source, lineno, "second column must be 'y'");
  const std::size_t first_curve = has_y ? 2 : 1;
  if (header.size() < first_curve + 2) malformed(source, lineno, "need at least two curve columns");
  const std::size_t m = header.size() - first_curve;

  CurveTable table;
  std::vector<double> grid;
  for (std::size_t j = first_curve; j < header.size(); ++j) {
    const auto v = to_double(header[j]);
    if (!v) {
      grid.clear();
      break;
    }
    grid.push_back(*v);
  }
  if (grid.size() == m) table.header_grid = std::move(grid);

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size())
      malformed(source, lineno, "expected " + std::to_string(header.size()) + " fields, found " +
                                    std::to_string(cells.size()));
    table.ids.push_back(cells[0]);
    if (has_y) {
      const auto y = to_double(cells[1]);
      if (!y || (*y != 0.0 && *y != 1.0)) malformed(source, lineno, "label '" + cells[1] + "' is not 0 or 1");
      labels.push_back(static_cast<int>(*y));
    }
    std::vector<double> row(m);
    for (std::size_t j = 0; j < m; ++j) {
      const auto v = to_double(cells[first_curve + j]);
      if (!v || !std::isfinite(*v)) malformed(source, lineno, "bad curve value '" + cells[first_curve + j] + "'");
      row[j] = *v;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw CliError(kExitMalformed, source + ": no data rows");

  table.curves.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < m; ++j)
      table.curves(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  if (has_y) table.labels = Eigen::Map<Eigen::VectorXi>(labels.data(), static_cast<Eigen::Index>(labels.size()));
  return table;
}

CurveTable read_curve_csv(const std::string& path, bool require_labels) {
  std::ifstream in(path);
  if (!in) throw CliError(kExitMalformed, "cannot open input file: " + path);
  return parse_curve_csv(in, path, require_labels);
}

std::vector<double> read_grid_spec(const std::string& spec) {
  std::string text = spec;
  std::string source = "--grid";
  if (std::filesystem::is_regular_file(spec)) {
    std::ifstream in(spec);
    if (!in) throw CliError(kExitMalformed, "cannot open grid file: " + spec);
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
    source = spec;
  }
  for (char& c : text)
    if (c == ',' || c == ';' || c == '\n' || c == '\r' || c == '\t') c = ' ';
  std::istringstream ss(text);
  std::vector<double> points;
  std::string token;
  while (ss >> token) {
    const auto v = to_double(token);
    if (!v) throw CliError(kExitMalformed, source + ": bad grid value '" + token + "'");
    points.push_back(*v);
  }
  if (points.size() < 2) throw CliError(kExitMalformed, source + ": grid needs at least two points");
  return points;
}

void write_curve_csv(std::ostream& out, const CurveTable& table) {
  const Eigen::Index m = table.curves.cols();
  out << "id";
  if (table.labels) out << ",y";
  out << std::setprecision(17);
  for (Eigen::Index j = 0; j < m; ++j) {
    if (table.header_grid)
      out << ',' << (*table.header_grid)[static_cast<std::size_t>(j)];
    else
      out << ",t_" << (j + 1);
  }
  out << '\n';
  for (Eigen::Index i = 0; i < table.curves.rows(); ++i) {
    out << table.ids[static_cast<std::size_t>(i)];
    if (table.labels) out << ',' << (*table.labels)[i];
    for (Eigen::Index j = 0; j < m; ++j) out << ',' << table.curves(i, j);
    out << '\n';
  }
}

}  // namespace rflr::cli
