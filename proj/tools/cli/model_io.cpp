#include "cli/model_io.hpp"

#include "cli/commands.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace rflr::cli {
namespace {

using nlohmann::json;

json vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

// NaN round-trips through JSON null.
double number(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.get<double>();
}

Eigen::VectorXd to_vector(const json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = number(j[i]);
  return v;
}

}  // namespace

Grid GridSpec::make() const {
  if (uniform) return make_uniform_grid(size);
  return Grid::from_points(points);
}

FitResult ModelFile::as_fit() const {
  FitResult f;
  f.alpha = alpha;
  f.theta = theta;
  f.kappa = kappa_hat;
  f.lambda = lambda_hat;
  f.link = link;
  f.edf = edf;
  f.cov = cov;
  f.converged = converged;
  f.iterations = iterations;
  f.probs = probs;
  return f;
}

json to_json(const ModelFile& m) {
  json j;
  j["schema"] = kModelSchema;
  j["tool_version"] = m.tool_version;
  j["config"] = m.config;
  j["basis"] = {{"order", m.order},
                {"dimension", m.theta.size()},
                {"penalty_order", m.penalty_order},
                {"interior_knots", m.interior_knots}};
  json grid = {{"kind", m.grid.uniform ? "uniform" : "points"}, {"size", m.grid.size}};
  if (!m.grid.uniform) grid["points"] = m.grid.points;
  j["grid"] = grid;
  j["link"] = m.link.name();
  j["alpha"] = m.alpha;
  j["theta"] = vec(m.theta);
  j["beta_on_grid"] = vec(m.beta_on_grid);
  j["kappa_hat"] = m.kappa_hat;
  j["lambda_hat"] = m.lambda_hat;
  j["edf"] = m.edf;
  j["aic"] = m.aic;
  j["objective"] = m.objective;
  j["converged"] = m.converged;
  j["iterations"] = m.iterations;
  j["grad_norm"] = m.grad_norm;
  j["grad_norm_init"] = m.grad_norm_init;
  std::vector<double> cov;
  cov.reserve(static_cast<std::size_t>(m.cov.size()));
  for (Eigen::Index r = 0; r < m.cov.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cov.cols(); ++c) cov.push_back(m.cov(r, c));
  j["cov"] = {{"rows", m.cov.rows()}, {"cols", m.cov.cols()}, {"data", cov}};
  j["ids"] = m.ids;
  j["probs"] = vec(m.probs);
  j["residuals"] = vec(m.residuals);
  j["flagged_outliers"] = m.flagged_outliers;
  j["warnings"] = m.warnings;
  j["selection"] = m.selection;
  return j;
}

ModelFile model_from_json(const json& j) {
  try {
    if (!j.is_object() || j.value("schema", "") != kModelSchema)
      throw CliError(kExitMalformed, "model file is not an rflr fit report (schema mismatch)");
    ModelFile m;
    m.tool_version = j.at("tool_version").get<std::string>();
    m.config = j.value("config", json::object());
    const json& basis = j.at("basis");
    m.order = basis.at("order").get<int>();
    m.penalty_order = basis.at("penalty_order").get<int>();
    m.interior_knots = basis.at("interior_knots").get<std::vector<double>>();
    const json& grid = j.at("grid");
    m.grid.uniform = grid.at("kind").get<std::string>() == "uniform";
    m.grid.size = grid.at("size").get<int>();
    if (!m.grid.uniform) m.grid.points = grid.at("points").get<std::vector<double>>();
    m.link = Link::parse(j.at("link").get<std::string>());
    m.alpha = number(j.at("alpha"));
    m.theta = to_vector(j.at("theta"));
    m.beta_on_grid = to_vector(j.at("beta_on_grid"));
    m.kappa_hat = number(j.at("kappa_hat"));
    m.lambda_hat = number(j.at("lambda_hat"));
    m.edf = number(j.at("edf"));
    m.aic = number(j.at("aic"));
    m.objective = number(j.at("objective"));
    m.converged = j.at("converged").get<bool>();
    m.iterations = j.at("iterations").get<int>();
    m.grad_norm = number(j.at("grad_norm"));
    m.grad_norm_init = number(j.at("grad_norm_init"));
    const json& cov = j.at("cov");
    const auto rows = cov.at("rows").get<Eigen::Index>();
    const auto cols = cov.at("cols").get<Eigen::Index>();
    const json& data = cov.at("data");
    if (static_cast<Eigen::Index>(data.size()) != rows * cols)
      throw CliError(kExitMalformed, "model covariance has inconsistent dimensions");
    m.cov.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m.cov(r, c) = number(data[static_cast<std::size_t>(r * cols + c)]);
    m.ids = j.at("ids").get<std::vector<std::string>>();
    m.probs = to_vector(j.at("probs"));
    m.residuals = to_vector(j.at("residuals"));
    m.flagged_outliers = j.at("flagged_outliers").get<std::vector<std::string>>();
    m.warnings = j.value("warnings", std::vector<std::string>{});
    m.selection = j.value("selection", json());
    if (m.theta.size() != static_cast<Eigen::Index>(m.interior_knots.size()) + m.order)
      throw CliError(kExitMalformed, "model theta length disagrees with its basis");
    if (!std::isfinite(m.alpha) || !m.theta.allFinite())
      throw CliError(kExitMalformed, "model coefficients are not finite");
    return m;
  } catch (const json::exception& e) {
    throw CliError(kExitMalformed, std::string("malformed model file: ") + e.what());
  }
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw CliError(kExitMalformed, "cannot write " + path);
  out << j.dump(2) << '\n';
}

ModelFile read_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliError(kExitMalformed, "cannot open model file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw CliError(kExitMalformed, "malformed model file " + path + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace rflr::cli
