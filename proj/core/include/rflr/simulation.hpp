#pragma once

#include "rflr/design.hpp"
#include "rflr/grid.hpp"
#include "rflr/link.hpp"
#include "rflr/selection.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace rflr {

using Rng = std::mt19937_64;

/// Independent stream for (seed, stream, index): SplitMix64 over the three
/// words seeds a Mersenne Twister. Replicate r of a study always gets the
/// same stream no matter which worker runs it.
Rng make_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

/// X(t) = sum_{j=1}^{50} Z_j / j * sqrt(2) sin((j - 1/2) pi t), Z_j iid N(0,1).
/// Returns n x |grid|.
Eigen::MatrixXd generate_curves(int n, const Grid& grid, Rng& rng);

/// Evaluates the same expansion for given scores (n x 50).
Eigen::MatrixXd curves_from_scores(const Eigen::MatrixXd& scores, const Grid& grid);

/// beta_1 = 3(t-0.3)^2 + 1, beta_2 = 3 sin(3.4 t^2), beta_3 = -sin(5t/1.2)/0.5 - 1.
Eigen::VectorXd beta_true(int index, const Grid& grid);

/// Bernoulli(H(<X_i, beta>)) draws, inner products by the grid's Riemann rule.
Eigen::VectorXi generate_labels(const Eigen::MatrixXd& curves, const Eigen::VectorXd& beta, const Grid& grid,
                                const Link& link, Rng& rng);

/// Picks floor(epsilon * n) rows uniformly without replacement, multiplies
/// their curves by 5 and flips their labels. `rows` (optional) receives the
/// chosen indices in ascending order.
FunctionalDataset contaminate(const FunctionalDataset& data, double epsilon, Rng& rng,
                              std::vector<Eigen::Index>* rows = nullptr);

/// (1/m) sum_j (beta_hat(t_j) - beta(t_j))^2.
double mse(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta);

/// Mean over fresh curves of <X, beta_hat - beta>^2.
double empirical_prediction_error(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta,
                                  const Eigen::MatrixXd& fresh_curves, const Grid& grid);

enum class Estimator { ml, dpd_adaptive, dpd1, dpd2 };

std::string estimator_name(Estimator e);    ///< "ML", "DPD(kappa_hat)", "DPD(1)", "DPD(2)"
Estimator parse_estimator(const std::string& name);  ///< accepts ML, DPD, DPD1, DPD2 (case-insensitive) and the display names

struct StudyConfig {
  int beta_index = 1;
  double epsilon = 0.0;
  int n = 400;
  int replications = 100;
  int grid_size = 200;
  std::vector<Estimator> estimators{Estimator::dpd_adaptive, Estimator::ml, Estimator::dpd1, Estimator::dpd2};
  std::uint64_t seed = 1;
  int bootstrap_resamples = 2000;
  int basis_dim = 0;  ///< 0: default_dimension(n)
  int order = 4;
  int penalty_order = 2;
  SelectionConfig selection{};
  /// Also compute the empirical prediction error on this many fresh curves (0 = skip).
  int fresh_curves = 0;
  int workers = 0;  ///< 0: RFLR_WORKERS env var, else hardware concurrency

  void validate() const;
};

struct EstimatorSummary {
  Estimator estimator{};
  double median_mse = 0.0;
  double bootstrap_se = 0.0;
  std::vector<double> mse;                ///< one per replicate, NaN on failure
  std::vector<double> kappa;              ///< kappa used per replicate
  std::vector<double> lambda;             ///< selected lambda per replicate
  std::vector<double> prediction_error;   ///< empty unless fresh_curves > 0
  double median_prediction_error = 0.0;
};

struct StudyReport {
  StudyConfig config;
  std::vector<EstimatorSummary> estimators;
  std::vector<double> kappa_hat;  ///< selected kappa per replicate (NaN when not run)
  int failures = 0;
  std::vector<std::string> failure_messages;
  int fits = 0;                      ///< individual Fisher-scoring fits performed
  int converged_fits = 0;
  int stationarity_violations = 0;   ///< converged fits failing the gradient check

  const EstimatorSummary* find(Estimator e) const;
};

/// Median with the usual midpoint rule for even sizes; NaNs are skipped.
double median(std::vector<double> values);

/// Standard deviation of the median over `resamples` bootstrap resamples.
double bootstrap_median_se(const std::vector<double>& values, int resamples, Rng& rng);

/// Runs every replicate (in parallel), fitting the configured estimators.
/// Output depends only on the configuration, never on the worker count.
StudyReport run_study(const StudyConfig& config);

}  // namespace rflr
