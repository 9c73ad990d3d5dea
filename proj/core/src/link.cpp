#include "rflr/link.hpp"

#include "rflr/errors.hpp"

#include <cmath>
#include <numbers>

namespace rflr {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;

double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

}  // namespace

Link Link::parse(std::string_view name) {
  if (name == "logit") return Link(LinkKind::logit);
  if (name == "probit") return Link(LinkKind::probit);
  if (name == "cloglog") return Link(LinkKind::cloglog);
  throw InvalidArgument("unknown link '" + std::string(name) + "' (expected logit, probit or cloglog)");
}

std::string Link::name() const {
  switch (kind_) {
    case LinkKind::logit: return "logit";
    case LinkKind::probit: return "probit";
    case LinkKind::cloglog: return "cloglog";
  }
  return "logit";
}

double Link::prob(double eta) const {
  switch (kind_) {
    case LinkKind::logit:
      if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
      else {
        const double e = std::exp(eta);
        return e / (1.0 + e);
      }
    case LinkKind::probit: return 0.5 * std::erfc(-eta / std::numbers::sqrt2);
    case LinkKind::cloglog: return -std::expm1(-std::exp(eta));
  }
  return 0.5;
}

double Link::d1(double eta) const {
  switch (kind_) {
    case LinkKind::logit: {
      const double p = prob(eta);
      return p * (1.0 - p);
    }
    case LinkKind::probit: return normal_pdf(eta);
    case LinkKind::cloglog: return std::exp(eta - std::exp(eta));
  }
  return 0.0;
}

double Link::d2(double eta) const {
  switch (kind_) {
    case LinkKind::logit: {
      const double p = prob(eta);
      return p * (1.0 - p) * (1.0 - 2.0 * p);
    }
    case LinkKind::probit: return -eta * normal_pdf(eta);
    case LinkKind::cloglog: return std::exp(eta - std::exp(eta)) * (1.0 - std::exp(eta));
  }
  return 0.0;
}

double Link::inverse(double p) const {
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("inverse link needs p in (0,1)");
  switch (kind_) {
    case LinkKind::logit: return std::log(p / (1.0 - p));
    case LinkKind::cloglog: return std::log(-std::log1p(-p));
    case LinkKind::probit: break;
  }
  // Probit: bracketed Newton on the monotone CDF.
  double lo = -40.0, hi = 40.0, x = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double f = prob(x) - p;
    if (f > 0) hi = x;
    else lo = x;
    const double d = d1(x);
    double next = d > 0 ? x - f / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) < 1e-15 * (1.0 + std::abs(x))) return next;
    x = next;
  }
  return x;
}

}  // namespace rflr
