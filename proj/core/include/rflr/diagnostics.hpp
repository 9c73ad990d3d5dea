#pragma once

#include "rflr/model.hpp"

#include <Eigen/Dense>

#include <vector>

namespace rflr {

/// Unregularised incomplete beta integral  int_0^x t^{a-1} (1-t)^{b-1} dt.
///
/// Evaluated as the regularised function from its continued fraction
/// (modified Lentz), scaled by B(a,b). Absolute error is around 1e-13 for
/// a, b in [0.1, 5].
double incomplete_beta(double x, double a, double b);

/// Complete beta function B(a,b).
double complete_beta(double a, double b);

struct ResidualReport {
  Eigen::VectorXd residuals;
  std::vector<Eigen::Index> flagged;  ///< indices with |r_A| >= threshold, ascending
  double threshold = 2.0;
  int clamped = 0;                    ///< fitted values moved off {0,1} before evaluation
};

/// Bernoulli Anscombe residuals
///   r_A = (IB(y, 2/3, 2/3) - IB(mu, 2/3, 2/3)) / (mu (1-mu))^{1/6}
/// and the |r_A| >= threshold outlier rule.
ResidualReport anscombe_residuals(const Eigen::VectorXi& labels, const Eigen::VectorXd& fitted,
                                  double threshold = 2.0);
ResidualReport anscombe_residuals(const FitResult& fit, const Eigen::VectorXi& labels, double threshold = 2.0);

}  // namespace rflr
