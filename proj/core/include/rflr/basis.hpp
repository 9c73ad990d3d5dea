#pragma once

#include "rflr/grid.hpp"

#include <Eigen/Dense>

#include <vector>

namespace rflr {

/// Clamped B-spline basis on [0,1].
///
/// Boundary knots 0 and 1 are repeated `order` times, so the dimension is
/// interior knot count + order. Basis functions are nonnegative and sum to
/// one everywhere on [0,1]. The right endpoint belongs to the last span.
class BSplineBasis {
 public:
  BSplineBasis(int order, std::vector<double> interior_knots);

  int order() const noexcept { return order_; }
  int dimension() const noexcept { return static_cast<int>(interior_.size()) + order_; }
  const std::vector<double>& interior_knots() const noexcept { return interior_; }
  /// Full knot vector including repeated boundary knots.
  const std::vector<double>& knots() const noexcept { return knots_; }

  /// Values of the `deriv`-th derivative of all K basis functions at t.
  Eigen::VectorXd evaluate(double t, int deriv = 0) const;

  /// Knot averages; spline coefficients equal to a linear function sampled
  /// here reproduce that linear function exactly.
  Eigen::VectorXd greville_abscissae() const;

 private:
  int order_;
  std::vector<double> interior_;
  std::vector<double> knots_;
};

/// Symmetric K x K quadrature matrix of integrated products of basis
/// derivatives. derivative_order 0 is the Gram matrix.
struct PenaltyMatrix {
  Eigen::MatrixXd entries;
  int derivative_order = 2;

  double quadratic_form(const Eigen::Ref<const Eigen::VectorXd>& v) const {
    return v.dot(entries * v);
  }
};

/// Basis of dimension k_target with equidistant interior knots.
BSplineBasis make_basis(int k_target, int order = 4);

/// floor(min(30, n/4)) clamped below at `order`.
int default_dimension(int n, int order = 4);

/// |grid| x K matrix of theta_k^{(deriv)}(t_j).
Eigen::MatrixXd eval_basis(const BSplineBasis& basis, const Grid& grid, int deriv = 0);

PenaltyMatrix gram_matrix(const BSplineBasis& basis, const Grid& grid);

/// Quadrature of integral theta_i^{(q)} theta_j^{(q)}; derivatives are analytic,
/// weights are the grid's Riemann weights.
PenaltyMatrix penalty_matrix(const BSplineBasis& basis, const Grid& grid, int q = 2);

/// n x K matrix of <X_i, theta_k> using the grid's Riemann weights.
/// `curves` is n x |grid|.
Eigen::MatrixXd curve_basis_inner_products(const Eigen::Ref<const Eigen::MatrixXd>& curves,
                                           const BSplineBasis& basis, const Grid& grid);

}  // namespace rflr
