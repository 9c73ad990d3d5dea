#pragma once

#include "rflr/basis.hpp"
#include "rflr/grid.hpp"
#include "rflr/link.hpp"
#include "rflr/model.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <string>
#include <vector>

namespace rflr::cli {

inline constexpr const char* kModelSchema = "rflr.fit.v1";
inline constexpr const char* kStudySchema = "rflr.study.v1";

struct GridSpec {
  bool uniform = true;
  std::vector<double> points;  ///< empty when uniform
  int size = 0;

  Grid make() const;
};

/// Persisted fit: enough to rebuild the slope function and predict.
struct ModelFile {
  std::string tool_version;
  nlohmann::json config = nlohmann::json::object();
  int order = 4;
  int penalty_order = 2;
  std::vector<double> interior_knots;
  GridSpec grid;
  Link link{};
  double alpha = 0.0;
  Eigen::VectorXd theta;
  Eigen::VectorXd beta_on_grid;
  double kappa_hat = 0.0;
  double lambda_hat = 0.0;
  double edf = 0.0;
  double aic = 0.0;
  double objective = 0.0;
  bool converged = false;
  int iterations = 0;
  double grad_norm = 0.0;
  double grad_norm_init = 0.0;
  Eigen::MatrixXd cov;
  std::vector<std::string> ids;
  Eigen::VectorXd probs;
  Eigen::VectorXd residuals;
  std::vector<std::string> flagged_outliers;
  std::vector<std::string> warnings;
  nlohmann::json selection = nullptr;

  BSplineBasis basis() const { return BSplineBasis(order, interior_knots); }
  FitResult as_fit() const;
};

nlohmann::json to_json(const ModelFile& model);
ModelFile model_from_json(const nlohmann::json& j);

void write_json(const std::string& path, const nlohmann::json& j);
ModelFile read_model(const std::string& path);

}  // namespace rflr::cli
