#include "rflr/grid.hpp"

#include "rflr/errors.hpp"

#include <cmath>
#include <string>

namespace rflr {

Grid make_uniform_grid(int m) {
  if (m < 2) throw InvalidArgument("uniform grid needs at least 2 points, got " + std::to_string(m));
  Eigen::VectorXd points(m);
  for (int j = 0; j < m; ++j) points[j] = static_cast<double>(j) / (m - 1);
  points[m - 1] = 1.0;
  Eigen::VectorXd weights = Eigen::VectorXd::Constant(m, 1.0 / m);
  return Grid(std::move(points), std::move(weights));
}

Grid Grid::from_points(std::span<const double> pts) {
  const auto m = static_cast<Eigen::Index>(pts.size());
  if (m < 2) throw InvalidArgument("grid needs at least 2 points");
  Eigen::VectorXd points(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double t = pts[static_cast<std::size_t>(j)];
    if (!std::isfinite(t) || t < 0.0 || t > 1.0)
      throw InvalidArgument("grid point " + std::to_string(t) + " outside [0,1]");
    if (j > 0 && !(t > points[j - 1])) throw InvalidArgument("grid points must be strictly increasing");
    points[j] = t;
  }
  // Cell lengths with half-gaps on each side; the end cells mirror their neighbour.
  Eigen::VectorXd cells(m);
  cells[0] = points[1] - points[0];
  cells[m - 1] = points[m - 1] - points[m - 2];
  for (Eigen::Index j = 1; j + 1 < m; ++j) cells[j] = 0.5 * (points[j + 1] - points[j - 1]);
  const double span = points[m - 1] - points[0];
  Eigen::VectorXd weights = cells * (span / cells.sum());
  return Grid(std::move(points), std::move(weights));
}

double Grid::integrate(const Eigen::Ref<const Eigen::VectorXd>& values) const {
  if (values.size() != points_.size())
    throw ShapeMismatch("integrand has " + std::to_string(values.size()) + " samples, grid has " +
                        std::to_string(points_.size()));
  return weights_.dot(values);
}

bool Grid::same_points(const Grid& other, double tol) const {
  if (other.size() != size()) return false;
  return ((points_ - other.points_).array().abs() <= tol).all();
}

}  // namespace rflr
