#include "rflr/divergence.hpp"

#include "rflr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace rflr {

namespace {

void check_prob(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument(std::string(what) + " must lie in [0,1], got " + std::to_string(p));
}

void check_label(int y) {
  if (y != 0 && y != 1) throw InvalidArgument("label must be 0 or 1, got " + std::to_string(y));
}

void check_kappa(double kappa) {
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw InvalidArgument("kappa must be finite and nonnegative");
}

double xlogy_ratio(double h, double f) {
  if (h == 0.0) return 0.0;
  if (f == 0.0) return std::numeric_limits<double>::infinity();
  return h * std::log(h / f);
}

}  // namespace

double clamp_prob(double p) noexcept { return std::clamp(p, kProbFloor, 1.0 - kProbFloor); }

double bernoulli_density(double p, int y) {
  check_prob(p, "probability");
  check_label(y);
  return y == 1 ? p : 1.0 - p;
}

double dpd(double p_h, double p_f, double kappa) {
  check_prob(p_h, "p_h");
  check_prob(p_f, "p_f");
  check_kappa(kappa);
  const double h[2] = {1.0 - p_h, p_h};
  const double f[2] = {1.0 - p_f, p_f};
  double d = 0.0;
  if (kappa == 0.0) {
    for (int y = 0; y < 2; ++y) d += xlogy_ratio(h[y], f[y]);
    return d;
  }
  // Per outcome: f^k [(f - h) + h expm1(k log(h/f)) / k], each term nonnegative and
  // free of the 1/k cancellation for small k.
  for (int y = 0; y < 2; ++y) {
    if (h[y] == 0.0) {
      d += std::pow(f[y], 1.0 + kappa);
    } else if (f[y] == 0.0) {
      d += std::pow(h[y], 1.0 + kappa) / kappa;
    } else {
      const double ratio = std::expm1(kappa * (std::log(h[y]) - std::log(f[y]))) / kappa;
      d += std::pow(f[y], kappa) * ((f[y] - h[y]) + h[y] * ratio);
    }
  }
  return std::max(d, 0.0);
}

double loss(int y, double p, double kappa) {
  check_label(y);
  check_prob(p, "probability");
  check_kappa(kappa);
  if (kappa == 0.0) {
    const double f = y == 1 ? p : 1.0 - p;
    if (f <= 0.0) throw InvalidArgument("log-likelihood loss needs p in (0,1) at the observed label");
    return -std::log(f);
  }
  const double f = y == 1 ? p : 1.0 - p;
  return std::pow(p, 1.0 + kappa) + std::pow(1.0 - p, 1.0 + kappa) - (1.0 + 1.0 / kappa) * std::pow(f, kappa);
}

double loss_dp(int y, double p, double kappa) {
  check_label(y);
  check_kappa(kappa);
  p = clamp_prob(p);
  const double q = 1.0 - p;
  const double score = (y - p) / (p * q);
  if (kappa == 0.0) return -score;
  const double f = y == 1 ? p : q;
  return (1.0 + kappa) * (std::pow(p, kappa) - std::pow(q, kappa) - std::pow(f, kappa) * score);
}

double loss_dp2(int y, double p, double kappa) {
  check_label(y);
  check_kappa(kappa);
  p = clamp_prob(p);
  const double q = 1.0 - p;
  if (kappa == 0.0) return y == 1 ? 1.0 / (p * p) : 1.0 / (q * q);
  const double f = y == 1 ? p : q;
  const double yy = static_cast<double>(y);
  // d^2 f_p^k / dp^2 = k f^k / (p q)^2 * {(k-1)p^2 + 2(1-k) y p + k y^2 - y}
  const double bracket = (kappa - 1.0) * p * p + 2.0 * (1.0 - kappa) * yy * p + kappa * yy * yy - yy;
  const double second_f = std::pow(f, kappa) / (p * p * q * q) * bracket;  // divided by kappa
  return (1.0 + kappa) * (kappa * std::pow(p, kappa - 1.0) + kappa * std::pow(q, kappa - 1.0) - second_f);
}

double loss_d1(int y, double p, double kappa, const Link& link, double eta) {
  if (p <= 0.0 || p >= 1.0) throw NumericalDomain("loss derivative needs p strictly inside (0,1)");
  return loss_dp(y, p, kappa) * link.d1(eta);
}

double loss_d2(int y, double p, double kappa, const Link& link, double eta) {
  if (p <= 0.0 || p >= 1.0) throw NumericalDomain("loss derivative needs p strictly inside (0,1)");
  const double h1 = link.d1(eta);
  return loss_dp2(y, p, kappa) * h1 * h1 + loss_dp(y, p, kappa) * link.d2(eta);
}

}  // namespace rflr
