#pragma once

#include "rflr/link.hpp"

namespace rflr {

/// Probabilities are clamped to [kProbFloor, 1 - kProbFloor] wherever a
/// formula divides by p(1-p).
inline constexpr double kProbFloor = 1e-10;

double clamp_prob(double p) noexcept;

struct DivergenceParams {
  double kappa = 0.0;
  Link link{};
};

/// p^y (1-p)^(1-y) for y in {0,1}.
double bernoulli_density(double p, int y);

/// Density power divergence between Bernoulli(p_h) and Bernoulli(p_f).
///
/// kappa > 0 uses the power form; kappa == 0 is the Kullback-Leibler branch
/// and returns +infinity when p_h puts mass where p_f has none.
double dpd(double p_h, double p_f, double kappa);

/// Per-observation loss
///   kappa > 0:  p^{1+k} + (1-p)^{1+k} - (1 + 1/k) f_p^k(y)
///   kappa == 0: -log f_p(y)
/// The kappa > 0 form drops terms that do not depend on p, so it differs from
/// dpd by a constant; compare differences, not levels.
double loss(int y, double p, double kappa);

/// d loss / d p, with p clamped.
double loss_dp(int y, double p, double kappa);
/// d^2 loss / d p^2, with p clamped.
double loss_dp2(int y, double p, double kappa);

/// First derivative of the loss with respect to the linear predictor eta,
/// p = H(eta). Throws NumericalDomain when p is exactly 0 or 1.
double loss_d1(int y, double p, double kappa, const Link& link, double eta);

/// Observed second derivative with respect to eta (chain rule including the
/// H'' term). This is the D matrix entry of the sandwich covariance; the
/// solver uses the expected version, see irls_weights().
double loss_d2(int y, double p, double kappa, const Link& link, double eta);

}  // namespace rflr
