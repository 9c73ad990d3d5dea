#include "rflr/model.hpp"

#include "penalized_system.hpp"
#include "rflr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rflr {

namespace {

constexpr int kMaxHalvings = 10;
constexpr double kRoundingSlack = 1e-13;

void check_labels(const DesignMatrices& design, const Eigen::VectorXi& labels) {
  if (labels.size() != design.rows())
    throw ShapeMismatch("design has " + std::to_string(design.rows()) + " rows but " +
                        std::to_string(labels.size()) + " labels");
}

void check_coef(const DesignMatrices& design, const Eigen::VectorXd& coef) {
  if (coef.size() != design.bstar.cols())
    throw ShapeMismatch("coefficient vector has " + std::to_string(coef.size()) + " entries, expected " +
                        std::to_string(design.bstar.cols()));
}

// Per-observation first/second derivative in eta at the current coefficients.
struct Working {
  Eigen::VectorXd eta, probs, d1, w;
};

Working evaluate_working(const DesignMatrices& design, const Eigen::VectorXi& labels, const Eigen::VectorXd& coef,
                         double kappa, const Link& link) {
  Working s;
  s.eta = linear_predictor(design.bstar, coef);
  const Eigen::Index n = s.eta.size();
  s.probs.resize(n);
  s.d1.resize(n);
  s.w.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double p = clamp_prob(link.prob(s.eta[i]));
    s.probs[i] = p;
    s.d1[i] = loss_d1(labels[i], p, kappa, link, s.eta[i]);
    s.w[i] = irls_weights(labels[i], p, s.eta[i], kappa, link).w;
  }
  return s;
}

double sum_loss(const Eigen::VectorXi& labels, const Eigen::VectorXd& eta, double kappa, const Link& link) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) total += loss(labels[i], clamp_prob(link.prob(eta[i])), kappa);
  return total;
}

// Penalty in eigen-coordinates a = U^T c. Keeping a as the iterate preserves
// the tiny penalised components that huge lambda leaves, which U a would round away.
double spectral_penalty(const DesignMatrices& design, const Eigen::VectorXd& a) {
  return (design.penalty_values.array() * a.array().square()).sum();
}

// Sum of l_kappa + (1 + 1/kappa) for kappa > 0: same minimiser as the objective,
// but each term is O(1) instead of O(1/kappa), which keeps line-search
// comparisons meaningful when kappa is small.
double shifted_objective(const DesignMatrices& design, const Eigen::VectorXi& labels, const Eigen::VectorXd& a,
                         double kappa, double lambda, const Link& link) {
  const Eigen::VectorXd eta = linear_predictor(design.bstar, design.penalty_vectors * a);
  double total = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double p = clamp_prob(link.prob(eta[i]));
    if (kappa == 0.0) {
      total += loss(labels[i], p, 0.0);
      continue;
    }
    const double f = labels[i] == 1 ? p : 1.0 - p;
    total += std::pow(p, 1.0 + kappa) + std::pow(1.0 - p, 1.0 + kappa) -
             (1.0 + 1.0 / kappa) * std::expm1(kappa * std::log(f));
  }
  return total + lambda * spectral_penalty(design, a);
}

Eigen::VectorXd default_start(const DesignMatrices& design, const Eigen::VectorXi& labels, const Link& link) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(design.bstar.cols());
  const double ybar = labels.cast<double>().mean();
  c[0] = link.inverse(std::clamp(ybar, 1e-3, 1.0 - 1e-3));
  return c;
}

void observed_derivatives(const FitResult& fit, const Eigen::VectorXi& labels, double kappa, Eigen::VectorXd& d1,
                          Eigen::VectorXd& d2) {
  const Eigen::Index n = fit.eta.size();
  if (labels.size() != n) throw ShapeMismatch("labels do not match fitted observations");
  d1.resize(n);
  d2.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double p = clamp_prob(fit.link.prob(fit.eta[i]));
    d1[i] = loss_d1(labels[i], p, kappa, fit.link, fit.eta[i]);
    d2[i] = loss_d2(labels[i], p, kappa, fit.link, fit.eta[i]);
  }
}

}  // namespace

void FitConfig::validate(int basis_dimension) const {
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw InvalidArgument("kappa must be finite and nonnegative");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be finite and nonnegative");
  if (!(tol > 0.0)) throw InvalidArgument("tolerance must be positive");
  if (max_iter < 1) throw InvalidArgument("max_iter must be at least 1");
  if (init && init->size() != basis_dimension + 1)
    throw ShapeMismatch("initial coefficient vector has " + std::to_string(init->size()) + " entries, expected " +
                        std::to_string(basis_dimension + 1));
}

Eigen::VectorXd FitResult::coefficients() const {
  Eigen::VectorXd c(theta.size() + 1);
  c[0] = alpha;
  c.tail(theta.size()) = theta;
  return c;
}

Eigen::MatrixXd FitResult::slope_covariance() const {
  if (cov.size() == 0) return {};
  const Eigen::Index K = theta.size();
  return cov.bottomRightCorner(K, K);
}

IrlsWeight irls_weights(int y, double p, double eta, double kappa, const Link& link) {
  if (!(kappa >= 0.0)) throw InvalidArgument("kappa must be nonnegative");
  p = clamp_prob(p);
  const double h1 = link.d1(eta);
  const double w = (1.0 + kappa) * (std::pow(p, kappa - 1.0) + std::pow(1.0 - p, kappa - 1.0)) * h1 * h1;
  if (!(w > 0.0)) throw NumericalDomain("IRLS weight is not positive (eta = " + std::to_string(eta) + ")");
  return {w, eta - loss_dp(y, p, kappa) * h1 / w};
}

double objective(const DesignMatrices& design, const Eigen::VectorXi& labels, const Eigen::VectorXd& coef,
                 double kappa, double lambda, const Link& link) {
  check_labels(design, labels);
  check_coef(design, coef);
  const Eigen::VectorXd eta = linear_predictor(design.bstar, coef);
  return sum_loss(labels, eta, kappa, link) + lambda * design.penalty(coef);
}

Eigen::VectorXd gradient(const DesignMatrices& design, const Eigen::VectorXi& labels, const Eigen::VectorXd& coef,
                         double kappa, double lambda, const Link& link) {
  check_labels(design, labels);
  check_coef(design, coef);
  const Eigen::VectorXd eta = linear_predictor(design.bstar, coef);
  Eigen::VectorXd d1(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i)
    d1[i] = loss_d1(labels[i], clamp_prob(link.prob(eta[i])), kappa, link, eta[i]);
  return design.bstar.transpose() * d1 + lambda * design.penalty_gradient(coef);
}

FitResult fit(const DesignMatrices& design, const Eigen::VectorXi& labels, const FitConfig& config) {
  check_labels(design, labels);
  config.validate(design.basis_dimension());
  const double kappa = config.kappa;
  const double lambda = config.lambda;
  const Link& link = config.link;

  FitResult res;
  res.kappa = kappa;
  res.lambda = lambda;
  res.link = link;
  res.warnings = design.warnings;
  if (labels.sum() == 0 || labels.sum() == labels.size())
    res.warnings.push_back("only one label value present; estimates are degenerate");

  const detail::PenalizedSystem system(design, lambda);
  const Eigen::MatrixXd& U = design.penalty_vectors;
  Eigen::VectorXd a = U.transpose() * (config.init ? *config.init : default_start(design, labels, link));
  double obj = shifted_objective(design, labels, a, kappa, lambda, link);
  bool small_step = false;

  for (int iter = 0;; ++iter) {
    const Working s = evaluate_working(design, labels, U * a, kappa, link);
    const Eigen::VectorXd grad_a = U.transpose() * (design.bstar.transpose() * s.d1) +
                                   2.0 * lambda * design.penalty_values.cwiseProduct(a);
    res.grad_norm = (U * grad_a).lpNorm<Eigen::Infinity>();
    if (iter == 0) res.grad_norm_init = res.grad_norm;
    res.iterations = iter;
    if (small_step && res.stationary()) {
      res.converged = true;
      break;
    }
    if (iter >= config.max_iter) break;

    // The IRLS update c+ = M^{-1} B*^T W z with z = eta - l'/w equals c - M^{-1} grad;
    // solving for the increment keeps full precision near the optimum.
    const Eigen::VectorXd step = -system.solve_spectral(s.w, grad_a, &res.warnings);

    double t = 1.0;
    bool accepted = false;
    Eigen::VectorXd trial;
    double trial_obj = obj;
    for (int h = 0; h <= kMaxHalvings; ++h, t *= 0.5) {
      trial = a + t * step;
      trial_obj = shifted_objective(design, labels, trial, kappa, lambda, link);
      // Differences below summation rounding are not evidence of ascent.
      if (trial_obj <= obj + kRoundingSlack * (1.0 + std::abs(obj))) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // No descent left at working precision: settle here.
      res.iterations = iter + 1;
      res.converged = res.stationary();
      if (!res.converged) res.warnings.push_back("step halving failed to decrease the objective");
      break;
    }
    const double change = (t * step).lpNorm<Eigen::Infinity>();
    a = std::move(trial);
    obj = trial_obj;
    small_step = change < config.tol * std::max(1.0, a.lpNorm<Eigen::Infinity>());
  }

  const Eigen::VectorXd coef = U * a;
  res.alpha = coef[0];
  res.theta = coef.tail(coef.size() - 1);
  res.eta = linear_predictor(design.bstar, coef);
  res.probs = res.eta.unaryExpr([&](double e) { return clamp_prob(link.prob(e)); });
  res.objective = sum_loss(labels, res.eta, kappa, link) + lambda * spectral_penalty(design, a);
  if (!res.converged)
    res.warnings.push_back("Fisher scoring did not converge in " + std::to_string(res.iterations) + " iterations");

  try {
    Eigen::VectorXd d1, d2;
    observed_derivatives(res, labels, kappa, d1, d2);
    res.edf = system.trace_hat(d2);
    res.cov = system.sandwich(d2, d1.cwiseAbs2());
  } catch (const SingularMatrix& e) {
    res.edf = std::nan("");
    res.cov.resize(0, 0);
    res.warnings.push_back(e.what());
  }
  return res;
}

FitResult fit(const FunctionalDataset& data, const BSplineBasis& basis, const FitConfig& config, int penalty_order) {
  const DesignMatrices design = build_design(data, basis, penalty_order);
  return fit(design, data.labels(), config);
}

Eigen::MatrixXd covariance(const FitResult& fit, const DesignMatrices& design, const Eigen::VectorXi& labels,
                           double kappa, double lambda) {
  check_labels(design, labels);
  Eigen::VectorXd d1, d2;
  observed_derivatives(fit, labels, kappa, d1, d2);
  return detail::PenalizedSystem(design, lambda).sandwich(d2, d1.cwiseAbs2());
}

double edf(const FitResult& fit, const DesignMatrices& design, const Eigen::VectorXi& labels, double kappa,
           double lambda) {
  check_labels(design, labels);
  Eigen::VectorXd d1, d2;
  observed_derivatives(fit, labels, kappa, d1, d2);
  return detail::PenalizedSystem(design, lambda).trace_hat(d2);
}

Eigen::VectorXd beta_on_grid(const Eigen::VectorXd& theta, const BSplineBasis& basis, const Grid& grid) {
  if (theta.size() != basis.dimension())
    throw ShapeMismatch("theta has " + std::to_string(theta.size()) + " entries, basis dimension is " +
                        std::to_string(basis.dimension()));
  return eval_basis(basis, grid, 0) * theta;
}

Eigen::VectorXd predict(const FitResult& fit, const BSplineBasis& basis, const Eigen::MatrixXd& new_curves,
                        const Grid& grid) {
  if (fit.theta.size() != basis.dimension()) throw ShapeMismatch("fit and basis dimensions differ");
  const Eigen::MatrixXd inner = curve_basis_inner_products(new_curves, basis, grid);
  Eigen::MatrixXd bstar(inner.rows(), inner.cols() + 1);
  bstar.col(0).setOnes();
  bstar.rightCols(inner.cols()) = inner;
  const Eigen::VectorXd eta = linear_predictor(bstar, fit.coefficients());
  return eta.unaryExpr([&](double e) { return clamp_prob(fit.link.prob(e)); });
}

}  // namespace rflr
