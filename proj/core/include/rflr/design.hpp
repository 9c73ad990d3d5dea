#pragma once

#include "rflr/basis.hpp"
#include "rflr/grid.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace rflr {

/// n curves sampled on a shared grid plus binary labels.
class FunctionalDataset {
 public:
  /// curves is n x |grid|; labels must be 0/1.
  FunctionalDataset(Eigen::MatrixXd curves, Eigen::VectorXi labels, Grid grid);

  const Eigen::MatrixXd& curves() const noexcept { return curves_; }
  const Eigen::VectorXi& labels() const noexcept { return labels_; }
  const Grid& grid() const noexcept { return grid_; }
  Eigen::Index size() const noexcept { return labels_.size(); }

  /// Both label values present.
  bool has_both_classes() const;

 private:
  Eigen::MatrixXd curves_;
  Eigen::VectorXi labels_;
  Grid grid_;
};

/// Matrices shared by every fit on one (dataset, basis, penalty) triple.
///
/// Coefficient vectors are ordered (alpha, theta_1..theta_K). The penalty is
/// also held in spectral form pstar = U diag(values) U^T with the numerical
/// null space (intercept plus polynomials of degree < q) set exactly to zero;
/// all solver, objective and covariance code uses that form so that huge
/// smoothing parameters stay well conditioned.
struct DesignMatrices {
  Eigen::MatrixXd bstar;  ///< n x (K+1): ones, then <X_i, theta_k>
  Eigen::MatrixXd pstar;  ///< (K+1) x (K+1): penalty with a zero row/column for alpha
  Eigen::MatrixXd gram;   ///< K x K Gram matrix P0 (slope only)
  Eigen::MatrixXd penalty_vectors;
  Eigen::VectorXd penalty_values;
  int null_dimension = 0;
  std::vector<std::string> warnings;

  int basis_dimension() const noexcept { return static_cast<int>(bstar.cols()) - 1; }
  Eigen::Index rows() const noexcept { return bstar.rows(); }

  /// theta^T P theta for the coefficient vector (alpha, theta).
  double penalty(const Eigen::Ref<const Eigen::VectorXd>& coef) const;
  /// Gradient of penalty(): 2 P* coef.
  Eigen::VectorXd penalty_gradient(const Eigen::Ref<const Eigen::VectorXd>& coef) const;
};

/// Builds B*, P* (derivative order q) and P0. Warns when K exceeds n.
DesignMatrices build_design(const FunctionalDataset& data, const BSplineBasis& basis, int penalty_order = 2);

/// Same as above from precomputed inner products (n x K) and penalty pieces.
DesignMatrices build_design(const Eigen::MatrixXd& inner_products, const PenaltyMatrix& penalty,
                            const PenaltyMatrix& gram);

/// eta_i = c_0 + sum_k B_ik c_k, summed left to right so that fitting and
/// prediction produce identical values on identical rows.
Eigen::VectorXd linear_predictor(const Eigen::MatrixXd& bstar, const Eigen::VectorXd& coef);

}  // namespace rflr
