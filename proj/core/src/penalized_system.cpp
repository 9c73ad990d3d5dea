#include "penalized_system.hpp"

#include "rflr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rflr::detail {

namespace {

constexpr double kMaxCondition = 1e12;
constexpr double kRidgeScale = 1e-8;

std::string condition_message(const char* what, double cond) {
  std::ostringstream os;
  os << what << " is singular (condition number estimate " << cond << ")";
  return os.str();
}

// LDLT skips exactly zero pivots, so its rcond estimate alone misses exact rank loss.
double reciprocal_condition(const Eigen::LDLT<Eigen::MatrixXd>& ldlt) {
  if (ldlt.info() != Eigen::Success) return 0.0;
  const Eigen::VectorXd d = ldlt.vectorD().cwiseAbs();
  const double dmax = d.maxCoeff();
  if (!(dmax > 0.0)) return 0.0;
  return std::min(ldlt.rcond(), d.minCoeff() / dmax);
}

}  // namespace

PenalizedSystem::PenalizedSystem(const DesignMatrices& design, double lambda) : design_(&design), lambda_(lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be finite and nonnegative");
  const Eigen::ArrayXd v = design.penalty_values.array();
  const Eigen::ArrayXd s = (1.0 + 2.0 * lambda * v).rsqrt();
  scale_ = s.matrix();
  transform_ = design.penalty_vectors * scale_.asDiagonal();
  scaled_ = design.bstar * transform_;
  penalty_diag_ = (2.0 * lambda * v * s.square()).matrix();
}

Eigen::MatrixXd PenalizedSystem::scaled_gram(const Eigen::VectorXd& d) const {
  Eigen::MatrixXd m = scaled_.transpose() * d.asDiagonal() * scaled_;
  m.diagonal() += penalty_diag_;
  return 0.5 * (m + m.transpose());
}

Eigen::VectorXd PenalizedSystem::solve(const Eigen::VectorXd& w, const Eigen::VectorXd& v,
                                       std::vector<std::string>* warnings) const {
  return design_->penalty_vectors * solve_spectral(w, design_->penalty_vectors.transpose() * v, warnings);
}

Eigen::VectorXd PenalizedSystem::solve_spectral(const Eigen::VectorXd& w, const Eigen::VectorXd& g,
                                                std::vector<std::string>* warnings) const {
  Eigen::MatrixXd m = scaled_gram(w);
  const Eigen::VectorXd rhs = scale_.cwiseProduct(g);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
  double rcond = reciprocal_condition(ldlt);
  if (!(rcond * kMaxCondition >= 1.0)) {
    const double ridge = kRidgeScale * m.diagonal().cwiseAbs().mean();
    m.diagonal().array() += ridge;
    ldlt.compute(m);
    const double cond_before = rcond > 0 ? 1.0 / rcond : INFINITY;
    rcond = reciprocal_condition(ldlt);
    if (!(rcond > 0.0) || !(rcond * kMaxCondition * 1e4 >= 1.0))
      throw SingularMatrix(condition_message("penalized normal matrix", cond_before), cond_before);
    if (warnings) {
      std::ostringstream os;
      os << "normal equations nearly singular (condition ~" << cond_before << "); added ridge " << ridge;
      warnings->push_back(os.str());
    }
  }
  return scale_.cwiseProduct(ldlt.solve(rhs));
}

Eigen::MatrixXd PenalizedSystem::bread_inverse(const Eigen::VectorXd& d) const {
  const Eigen::MatrixXd m = scaled_gram(d);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
  const double rcond = reciprocal_condition(ldlt);
  if (!(rcond * kMaxCondition >= 1.0)) {
    const double cond = rcond > 0 ? 1.0 / rcond : INFINITY;
    throw SingularMatrix(condition_message("sandwich bread matrix", cond), cond);
  }
  const Eigen::Index p = m.rows();
  const Eigen::MatrixXd inv = ldlt.solve(Eigen::MatrixXd::Identity(p, p));
  Eigen::MatrixXd out = transform_ * (0.5 * (inv + inv.transpose())) * transform_.transpose();
  return 0.5 * (out + out.transpose());
}

double PenalizedSystem::trace_hat(const Eigen::VectorXd& d) const {
  const Eigen::MatrixXd m = scaled_gram(d);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
  const double rcond = reciprocal_condition(ldlt);
  if (!(rcond * kMaxCondition >= 1.0)) {
    const double cond = rcond > 0 ? 1.0 / rcond : INFINITY;
    throw SingularMatrix(condition_message("sandwich bread matrix", cond), cond);
  }
  // In scaled coordinates A' = M' - penalty, so Tr(M'^{-1} A') = p - Tr(M'^{-1} diag(penalty)).
  const Eigen::Index p = m.rows();
  const Eigen::MatrixXd inv = ldlt.solve(Eigen::MatrixXd::Identity(p, p));
  return static_cast<double>(p) - (inv.diagonal().array() * penalty_diag_.array()).sum();
}

Eigen::MatrixXd PenalizedSystem::sandwich(const Eigen::VectorXd& d, const Eigen::VectorXd& meat_w) const {
  const Eigen::MatrixXd bread = bread_inverse(d);
  const Eigen::MatrixXd meat = design_->bstar.transpose() * meat_w.asDiagonal() * design_->bstar;
  Eigen::MatrixXd out = bread * meat * bread;
  return 0.5 * (out + out.transpose());
}

}  // namespace rflr::detail
