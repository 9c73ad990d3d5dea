#pragma once

#include "rflr/basis.hpp"
#include "rflr/design.hpp"
#include "rflr/divergence.hpp"
#include "rflr/link.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace rflr {

/// Hyperparameters of one penalized DPD fit.
///
/// `lambda` multiplies the penalty in the summed objective
///   sum_i l_kappa(Y_i, p_i) + lambda * theta^T P theta.
/// The averaged objective (1/n) sum_i l + lambda' J is the same problem with
/// lambda = n * lambda'; see mean_to_sum_lambda().
struct FitConfig {
  double kappa = 0.0;
  double lambda = 0.0;
  Link link{};
  double tol = 1e-8;
  int max_iter = 100;
  std::optional<Eigen::VectorXd> init;  ///< (alpha, theta); default is (H^{-1}(mean y), 0)

  void validate(int basis_dimension) const;
};

inline double mean_to_sum_lambda(double lambda_mean, Eigen::Index n) { return lambda_mean * static_cast<double>(n); }

struct FitResult {
  double alpha = 0.0;
  Eigen::VectorXd theta;
  Eigen::VectorXd eta;
  Eigen::VectorXd probs;
  Eigen::MatrixXd cov;  ///< (K+1) x (K+1) sandwich; empty if the bread was singular
  double edf = 0.0;
  double objective = 0.0;
  bool converged = false;
  int iterations = 0;
  double kappa = 0.0;
  double lambda = 0.0;
  Link link{};
  double grad_norm = 0.0;       ///< sup-norm of the objective gradient at the solution
  double grad_norm_init = 0.0;  ///< same at the starting point
  std::vector<std::string> warnings;

  Eigen::VectorXd coefficients() const;
  /// Slope block of the covariance (drops the intercept row/column).
  Eigen::MatrixXd slope_covariance() const;
  /// converged fits must satisfy grad_norm < 1e-6 (1 + grad_norm_init).
  bool stationary(double rel = 1e-6) const { return grad_norm < rel * (1.0 + grad_norm_init); }
};

struct IrlsWeight {
  double w;  ///< expected second derivative of the loss in eta
  double z;  ///< working response
};

/// Fisher-scoring weight and working response for one observation.
///
///   w = (1+k) E_p{f_p^k(Y) |Y-p|^2} / (p(1-p))^2 * H'(eta)^2
///     = (1+k) (p^{k-1} + (1-p)^{k-1}) H'(eta)^2
///   z = eta - l'(eta) / w
/// At kappa = 0 these are the classical IRLS weight H'^2/(p(1-p)) and
/// response eta + (y-p)/H'.
IrlsWeight irls_weights(int y, double p, double eta, double kappa, const Link& link);

/// sum_i l_kappa(Y_i, p_i) + lambda * theta^T P theta.
double objective(const DesignMatrices& design, const Eigen::VectorXi& labels, const Eigen::VectorXd& coef,
                 double kappa, double lambda, const Link& link);

/// Analytic gradient of objective() with respect to (alpha, theta).
Eigen::VectorXd gradient(const DesignMatrices& design, const Eigen::VectorXi& labels, const Eigen::VectorXd& coef,
                         double kappa, double lambda, const Link& link);

/// Penalized Fisher scoring, each step solving
///   (B*^T W B* + 2 lambda P*) c = B*^T W z
/// with step halving (up to 10 times) whenever the objective would increase.
/// Non-convergence is reported through FitResult::converged.
FitResult fit(const DesignMatrices& design, const Eigen::VectorXi& labels, const FitConfig& config);
FitResult fit(const FunctionalDataset& data, const BSplineBasis& basis, const FitConfig& config,
              int penalty_order = 2);

/// Sandwich covariance
///   [B*^T D B* + 2 lambda P*]^{-1} B*^T C B* [B*^T D B* + 2 lambda P*]^{-1}
/// with C = diag(l'^2) and D = diag(l'') (observed). Throws SingularMatrix.
Eigen::MatrixXd covariance(const FitResult& fit, const DesignMatrices& design, const Eigen::VectorXi& labels,
                           double kappa, double lambda);

/// Tr{[B*^T D B* + 2 lambda P*]^{-1} B*^T D B*}.
double edf(const FitResult& fit, const DesignMatrices& design, const Eigen::VectorXi& labels, double kappa,
           double lambda);

/// beta_hat(t_j) on the grid.
Eigen::VectorXd beta_on_grid(const Eigen::VectorXd& theta, const BSplineBasis& basis, const Grid& grid);

/// H(alpha + <X, beta_hat>) for each row of new_curves (sampled on grid).
Eigen::VectorXd predict(const FitResult& fit, const BSplineBasis& basis, const Eigen::MatrixXd& new_curves,
                        const Grid& grid);

}  // namespace rflr
