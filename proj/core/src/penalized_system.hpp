#pragma once

#include "rflr/design.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace rflr::detail {

/// Linear algebra for B*^T diag(d) B* + 2 lambda P* in rescaled coordinates.
///
/// With P* = U diag(v) U^T, the map c = T u, T = U diag(s), s_i = (1 + 2 lambda v_i)^{-1/2}
/// turns the penalty block into diag(2 lambda v s^2) <= 1, so the system stays
/// well conditioned even for lambda around 1e12.
class PenalizedSystem {
 public:
  PenalizedSystem(const DesignMatrices& design, double lambda);

  /// Returns (B*^T diag(w) B* + 2 lambda P*)^{-1} v. Adds a small ridge and
  /// records a warning if the scaled matrix is nearly singular; throws
  /// SingularMatrix if that does not help.
  Eigen::VectorXd solve(const Eigen::VectorXd& w, const Eigen::VectorXd& v, std::vector<std::string>* warnings) const;

  /// Same system in eigen-coordinates a = U^T c: returns (U^T M U)^{-1} g.
  Eigen::VectorXd solve_spectral(const Eigen::VectorXd& w, const Eigen::VectorXd& g,
                                 std::vector<std::string>* warnings) const;

  /// [B*^T diag(d) B* + 2 lambda P*]^{-1} in original coordinates. d may be indefinite.
  Eigen::MatrixXd bread_inverse(const Eigen::VectorXd& d) const;

  /// Tr{[B*^T D B* + 2 lambda P*]^{-1} B*^T D B*}.
  double trace_hat(const Eigen::VectorXd& d) const;

  /// Sandwich bread^{-1} (B*^T diag(m) B*) bread^{-1}.
  Eigen::MatrixXd sandwich(const Eigen::VectorXd& d, const Eigen::VectorXd& m) const;

 private:
  Eigen::MatrixXd scaled_gram(const Eigen::VectorXd& d) const;  // G^T diag(d) G

  const DesignMatrices* design_;
  double lambda_;
  Eigen::VectorXd scale_;      // s
  Eigen::MatrixXd transform_;  // T
  Eigen::MatrixXd scaled_;     // G = B* T
  Eigen::VectorXd penalty_diag_;
};

}  // namespace rflr::detail
