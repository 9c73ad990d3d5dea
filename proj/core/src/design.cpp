#include "rflr/design.hpp"

#include "rflr/errors.hpp"

#include <Eigen/Eigenvalues>

#include <string>

namespace rflr {

namespace {

// Relative eigenvalue level below which the penalty is treated as exactly null.
constexpr double kNullSpaceTol = 1e-9;

}  // namespace

FunctionalDataset::FunctionalDataset(Eigen::MatrixXd curves, Eigen::VectorXi labels, Grid grid)
    : curves_(std::move(curves)), labels_(std::move(labels)), grid_(std::move(grid)) {
  if (labels_.size() < 1) throw InvalidArgument("dataset needs at least one observation");
  if (curves_.rows() != labels_.size())
    throw ShapeMismatch("dataset has " + std::to_string(curves_.rows()) + " curves but " +
                        std::to_string(labels_.size()) + " labels");
  if (curves_.cols() != grid_.size())
    throw ShapeMismatch("curves have " + std::to_string(curves_.cols()) + " samples, grid has " +
                        std::to_string(grid_.size()));
  for (Eigen::Index i = 0; i < labels_.size(); ++i)
    if (labels_[i] != 0 && labels_[i] != 1)
      throw InvalidArgument("label " + std::to_string(labels_[i]) + " at row " + std::to_string(i) + " is not 0/1");
  if (!curves_.allFinite()) throw InvalidArgument("curves contain non-finite values");
}

bool FunctionalDataset::has_both_classes() const {
  const int ones = labels_.sum();
  return ones > 0 && ones < labels_.size();
}

double DesignMatrices::penalty(const Eigen::Ref<const Eigen::VectorXd>& coef) const {
  const Eigen::VectorXd u = penalty_vectors.transpose() * coef;
  return (penalty_values.array() * u.array().square()).sum();
}

Eigen::VectorXd DesignMatrices::penalty_gradient(const Eigen::Ref<const Eigen::VectorXd>& coef) const {
  const Eigen::VectorXd u = penalty_vectors.transpose() * coef;
  return 2.0 * (penalty_vectors * (penalty_values.array() * u.array()).matrix());
}

DesignMatrices build_design(const Eigen::MatrixXd& inner, const PenaltyMatrix& penalty, const PenaltyMatrix& gram) {
  const Eigen::Index n = inner.rows();
  const Eigen::Index K = inner.cols();
  if (penalty.entries.rows() != K || penalty.entries.cols() != K || gram.entries.rows() != K ||
      gram.entries.cols() != K)
    throw ShapeMismatch("penalty/Gram matrices do not match basis dimension " + std::to_string(K));

  DesignMatrices d;
  d.bstar.resize(n, K + 1);
  d.bstar.col(0).setOnes();
  d.bstar.rightCols(K) = inner;

  d.pstar = Eigen::MatrixXd::Zero(K + 1, K + 1);
  d.pstar.bottomRightCorner(K, K) = penalty.entries;
  d.gram = gram.entries;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(d.pstar);
  d.penalty_vectors = eig.eigenvectors();
  d.penalty_values = eig.eigenvalues();
  const double top = d.penalty_values.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < d.penalty_values.size(); ++i) {
    if (d.penalty_values[i] <= kNullSpaceTol * top) {
      d.penalty_values[i] = 0.0;
      ++d.null_dimension;
    }
  }
  if (K > n)
    d.warnings.push_back("basis dimension " + std::to_string(K) + " exceeds sample size " + std::to_string(n));
  return d;
}

DesignMatrices build_design(const FunctionalDataset& data, const BSplineBasis& basis, int penalty_order) {
  return build_design(curve_basis_inner_products(data.curves(), basis, data.grid()),
                      penalty_matrix(basis, data.grid(), penalty_order), gram_matrix(basis, data.grid()));
}

Eigen::VectorXd linear_predictor(const Eigen::MatrixXd& bstar, const Eigen::VectorXd& coef) {
  if (bstar.cols() != coef.size())
    throw ShapeMismatch("coefficient vector has " + std::to_string(coef.size()) + " entries, design has " +
                        std::to_string(bstar.cols()) + " columns");
  const Eigen::Index n = bstar.rows();
  Eigen::VectorXd eta = Eigen::VectorXd::Constant(n, 0.0);
  for (Eigen::Index j = 0; j < bstar.cols(); ++j) {
    const double c = coef[j];
    for (Eigen::Index i = 0; i < n; ++i) eta[i] += bstar(i, j) * c;
  }
  return eta;
}

}  // namespace rflr
