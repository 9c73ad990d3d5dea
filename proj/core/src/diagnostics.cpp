#include "rflr/diagnostics.hpp"

#include "rflr/divergence.hpp"
#include "rflr/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace rflr {

namespace {

// Continued fraction for the regularised incomplete beta, valid for x < (a+1)/(a+b+2).
double beta_continued_fraction(double x, double a, double b) {
  constexpr int kMaxTerms = 1000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxTerms; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  return h;
}

}  // namespace

double complete_beta(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw InvalidArgument("beta parameters must be positive");
  return std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
}

double incomplete_beta(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw InvalidArgument("incomplete beta parameters must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw InvalidArgument("incomplete beta argument must lie in [0,1]");
  if (x == 0.0) return 0.0;
  const double full = complete_beta(a, b);
  if (x == 1.0) return full;
  // x^a (1-x)^b, the common prefactor of both expansions.
  const double front = std::exp(a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(x, a, b) / a;
  return full - front * beta_continued_fraction(1.0 - x, b, a) / b;
}

ResidualReport anscombe_residuals(const Eigen::VectorXi& labels, const Eigen::VectorXd& fitted, double threshold) {
  if (labels.size() != fitted.size())
    throw ShapeMismatch("got " + std::to_string(labels.size()) + " labels and " + std::to_string(fitted.size()) +
                        " fitted values");
  if (!(threshold >= 0.0)) throw InvalidArgument("outlier threshold must be nonnegative");
  constexpr double kShape = 2.0 / 3.0;
  const double ib_one = complete_beta(kShape, kShape);

  ResidualReport rep;
  rep.threshold = threshold;
  rep.residuals.resize(labels.size());
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    if (y != 0 && y != 1) throw InvalidArgument("labels must be 0/1");
    double mu = fitted[i];
    if (!(mu >= 0.0 && mu <= 1.0)) throw InvalidArgument("fitted value outside [0,1]");
    if (mu < kProbFloor || mu > 1.0 - kProbFloor) {
      mu = clamp_prob(mu);
      ++rep.clamped;
    }
    const double numer = (y == 1 ? ib_one : 0.0) - incomplete_beta(mu, kShape, kShape);
    const double r = numer / std::pow(mu * (1.0 - mu), 1.0 / 6.0);
    rep.residuals[i] = r;
    if (std::abs(r) >= threshold) rep.flagged.push_back(i);
  }
  return rep;
}

ResidualReport anscombe_residuals(const FitResult& fit, const Eigen::VectorXi& labels, double threshold) {
  return anscombe_residuals(labels, fit.probs, threshold);
}

}  // namespace rflr
