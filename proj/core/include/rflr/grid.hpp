#pragma once

#include <Eigen/Dense>

#include <span>

namespace rflr {

/// Evaluation abscissae on [0,1] paired with Riemann quadrature weights.
///
/// On a uniform grid of m points every weight is 1/m, so the rule integrates
/// constants exactly and a grid average equals the quadrature of the integrand.
/// Non-uniform grids use cell-length weights normalised to the same total.
class Grid {
 public:
  /// Builds a grid from user supplied abscissae. Points must be strictly
  /// increasing, lie in [0,1] and number at least two.
  static Grid from_points(std::span<const double> points);

  const Eigen::VectorXd& points() const noexcept { return points_; }
  const Eigen::VectorXd& weights() const noexcept { return weights_; }
  Eigen::Index size() const noexcept { return points_.size(); }

  /// Riemann sum of f sampled on the grid.
  double integrate(const Eigen::Ref<const Eigen::VectorXd>& values) const;

  bool same_points(const Grid& other, double tol = 1e-12) const;

 private:
  Grid(Eigen::VectorXd points, Eigen::VectorXd weights)
      : points_(std::move(points)), weights_(std::move(weights)) {}
  friend Grid make_uniform_grid(int m);

  Eigen::VectorXd points_;
  Eigen::VectorXd weights_;
};

/// m equidistant points j/(m-1), j = 0..m-1, each with weight 1/m.
/// Swapping to a midpoint rule only means shifting the points by 1/(2m).
Grid make_uniform_grid(int m);

}  // namespace rflr
