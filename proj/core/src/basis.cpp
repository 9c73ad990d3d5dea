#include "rflr/basis.hpp"

#include "rflr/errors.hpp"

#include <algorithm>
#include <string>

namespace rflr {

BSplineBasis::BSplineBasis(int order, std::vector<double> interior_knots)
    : order_(order), interior_(std::move(interior_knots)) {
  if (order_ < 2) throw InvalidArgument("B-spline order must be at least 2");
  for (std::size_t i = 0; i < interior_.size(); ++i) {
    const double k = interior_[i];
    if (!(k > 0.0 && k < 1.0)) throw InvalidArgument("interior knots must lie strictly inside (0,1)");
    if (i > 0 && !(k > interior_[i - 1])) throw InvalidArgument("interior knots must be strictly increasing");
  }
  knots_.reserve(interior_.size() + 2 * static_cast<std::size_t>(order_));
  knots_.insert(knots_.end(), static_cast<std::size_t>(order_), 0.0);
  knots_.insert(knots_.end(), interior_.begin(), interior_.end());
  knots_.insert(knots_.end(), static_cast<std::size_t>(order_), 1.0);
}

Eigen::VectorXd BSplineBasis::evaluate(double t, int deriv) const {
  if (!(t >= 0.0 && t <= 1.0)) throw InvalidArgument("evaluation point " + std::to_string(t) + " outside [0,1]");
  if (deriv < 0) throw InvalidArgument("derivative order must be nonnegative");
  const int K = dimension();
  if (deriv >= order_) return Eigen::VectorXd::Zero(K);

  const auto& tk = knots_;
  const int n_knots = static_cast<int>(tk.size());
  // Span index mu with tk[mu] <= t < tk[mu+1]; t == 1 falls in the last nonempty span.
  int mu = static_cast<int>(std::upper_bound(tk.begin(), tk.end(), t) - tk.begin()) - 1;
  mu = std::clamp(mu, order_ - 1, K - 1);

  // Order-1 indicator functions, then Cox-de Boor up to order - deriv.
  std::vector<double> b(static_cast<std::size_t>(n_knots - 1), 0.0);
  b[static_cast<std::size_t>(mu)] = 1.0;
  const int low_order = order_ - deriv;
  for (int k = 2; k <= low_order; ++k) {
    const int count = n_knots - k;
    for (int i = 0; i < count; ++i) {
      double v = 0.0;
      const double d1 = tk[i + k - 1] - tk[i];
      const double d2 = tk[i + k] - tk[i + 1];
      if (d1 > 0.0) v += (t - tk[i]) / d1 * b[i];
      if (d2 > 0.0) v += (tk[i + k] - t) / d2 * b[i + 1];
      b[i] = v;
    }
  }
  // Raise the order back with the derivative recurrence.
  for (int k = low_order + 1; k <= order_; ++k) {
    const int count = n_knots - k;
    for (int i = 0; i < count; ++i) {
      double v = 0.0;
      const double d1 = tk[i + k - 1] - tk[i];
      const double d2 = tk[i + k] - tk[i + 1];
      if (d1 > 0.0) v += b[i] / d1;
      if (d2 > 0.0) v -= b[i + 1] / d2;
      b[i] = (k - 1) * v;
    }
  }
  Eigen::VectorXd out(K);
  for (int i = 0; i < K; ++i) out[i] = b[i];
  return out;
}

Eigen::VectorXd BSplineBasis::greville_abscissae() const {
  const int K = dimension();
  Eigen::VectorXd xi(K);
  for (int i = 0; i < K; ++i) {
    double s = 0.0;
    for (int j = 1; j < order_; ++j) s += knots_[i + j];
    xi[i] = s / (order_ - 1);
  }
  return xi;
}

BSplineBasis make_basis(int k_target, int order) {
  if (order < 2) throw InvalidArgument("B-spline order must be at least 2");
  if (k_target < order)
    throw InvalidArgument("basis dimension " + std::to_string(k_target) + " is below the order " +
                          std::to_string(order));
  const int n_interior = k_target - order;
  std::vector<double> interior(static_cast<std::size_t>(n_interior));
  for (int j = 0; j < n_interior; ++j) interior[j] = static_cast<double>(j + 1) / (n_interior + 1);
  return BSplineBasis(order, std::move(interior));
}

int default_dimension(int n, int order) {
  const int k = std::min(30, n / 4);
  return std::max(k, order);
}

Eigen::MatrixXd eval_basis(const BSplineBasis& basis, const Grid& grid, int deriv) {
  const auto& t = grid.points();
  Eigen::MatrixXd phi(t.size(), basis.dimension());
  for (Eigen::Index j = 0; j < t.size(); ++j) phi.row(j) = basis.evaluate(t[j], deriv).transpose();
  return phi;
}

namespace {

PenaltyMatrix weighted_cross_product(const Eigen::MatrixXd& phi, const Grid& grid, int q) {
  PenaltyMatrix p;
  p.derivative_order = q;
  p.entries = phi.transpose() * grid.weights().asDiagonal() * phi;
  p.entries = 0.5 * (p.entries + p.entries.transpose()).eval();
  return p;
}

}  // namespace

PenaltyMatrix gram_matrix(const BSplineBasis& basis, const Grid& grid) {
  return weighted_cross_product(eval_basis(basis, grid, 0), grid, 0);
}

PenaltyMatrix penalty_matrix(const BSplineBasis& basis, const Grid& grid, int q) {
  if (q < 0) throw InvalidArgument("penalty derivative order must be nonnegative");
  if (q >= basis.order())
    throw InvalidArgument("penalty derivative order " + std::to_string(q) + " must be below the spline order " +
                          std::to_string(basis.order()));
  return weighted_cross_product(eval_basis(basis, grid, q), grid, q);
}

Eigen::MatrixXd curve_basis_inner_products(const Eigen::Ref<const Eigen::MatrixXd>& curves,
                                           const BSplineBasis& basis, const Grid& grid) {
  if (curves.cols() != grid.size())
    throw ShapeMismatch("curves have " + std::to_string(curves.cols()) + " samples, grid has " +
                        std::to_string(grid.size()));
  const Eigen::MatrixXd phi = eval_basis(basis, grid, 0);
  return curves * (grid.weights().asDiagonal() * phi);
}

}  // namespace rflr
