#pragma once

#include "rflr/design.hpp"
#include "rflr/model.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace rflr {

struct SelectionConfig {
  std::vector<double> kappa_grid = default_kappa_grid();
  std::vector<double> lambda_grid = default_lambda_grid();
  int max_outer_iter = 20;
  double pilot_kappa = 2.0;
  /// Fits for every kappa are warm-started from the fit at the grid value
  /// nearest to this one, which itself starts from (H^{-1}(mean y), 0).
  double start_kappa = 2.0;
  Link link{};
  double tol = 1e-8;
  int max_iter = 100;

  /// 20 equidistant values spanning [0, 2].
  static std::vector<double> default_kappa_grid();
  /// 30 log-spaced values from 1e-8 to 1e2.
  static std::vector<double> default_lambda_grid();

  void validate() const;
};

/// AIC(lambda) = 2 sum_i l_kappa(Y_i, p_i) + 2 edf.
double aic(const Eigen::VectorXi& labels, const FitResult& fit, double kappa);
double aic(const Eigen::VectorXi& labels, const FitResult& fit, const DesignMatrices& design, double kappa,
           double lambda);

struct LambdaSelection {
  double lambda_hat = 0.0;
  std::size_t index = 0;           ///< position of lambda_hat in the supplied grid
  std::vector<double> lambdas;     ///< the grid, as supplied
  std::vector<double> aic;         ///< +inf where the fit failed
  std::vector<bool> converged;
  std::vector<bool> stationary;
  FitResult fit;                   ///< fit at lambda_hat
};

/// Minimizes AIC over the grid (ties go to the smaller lambda). Fits are
/// warm-started along the grid from the largest lambda down; `init` seeds the
/// first fit. Throws std::runtime_error if every fit fails.
LambdaSelection select_lambda(const DesignMatrices& design, const Eigen::VectorXi& labels, double kappa,
                              const std::vector<double>& lambda_grid, const FitConfig& base = {},
                              const std::optional<Eigen::VectorXd>& init = std::nullopt);
LambdaSelection select_lambda(const FunctionalDataset& data, const BSplineBasis& basis, double kappa,
                              const std::vector<double>& lambda_grid, const FitConfig& base = {});

/// (theta_c - theta_p)^T P0 (theta_c - theta_p) + Tr{P0 Cov(theta_c)}.
double amise(const Eigen::VectorXd& candidate_theta, const Eigen::VectorXd& pilot_theta, const Eigen::MatrixXd& gram,
             const Eigen::MatrixXd& cov_slope);

struct KappaIterate {
  double pilot_kappa = 0.0;
  double selected_kappa = 0.0;
  std::vector<double> amise;  ///< one entry per kappa grid value, under this pilot
};

struct KappaSelection {
  double kappa_hat = 0.0;
  double lambda_hat = 0.0;
  bool converged = false;  ///< reached a fixed point of the pilot update
  bool cycled = false;     ///< stopped on a cycle; kappa_hat is its lowest-AMISE member
  std::vector<KappaIterate> trace;
  std::vector<LambdaSelection> per_kappa;  ///< aligned with the kappa grid
  FitResult fit;                           ///< fit at (kappa_hat, lambda_hat)

  /// Selection for a grid value (exact match), or nullptr.
  const LambdaSelection* at(double kappa) const;
};

/// Iterated AMISE minimisation over the kappa grid. Each kappa gets its own
/// AIC-selected lambda; the pilot starts at `pilot_kappa` and is replaced by
/// the current minimiser until it stops moving.
KappaSelection select_kappa(const DesignMatrices& design, const Eigen::VectorXi& labels,
                            const SelectionConfig& config = {});
KappaSelection select_kappa(const FunctionalDataset& data, const BSplineBasis& basis,
                            const SelectionConfig& config = {}, int penalty_order = 2);

}  // namespace rflr
