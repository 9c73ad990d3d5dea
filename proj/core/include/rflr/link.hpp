#pragma once

#include <string>
#include <string_view>

namespace rflr {

enum class LinkKind { logit, probit, cloglog };

/// Inverse link H: R -> (0,1), strictly increasing with bounded derivative.
class Link {
 public:
  constexpr Link() = default;
  constexpr explicit Link(LinkKind kind) : kind_(kind) {}

  /// Parses "logit", "probit" or "cloglog".
  static Link parse(std::string_view name);

  LinkKind kind() const noexcept { return kind_; }
  std::string name() const;

  double prob(double eta) const;
  /// dH/d eta
  double d1(double eta) const;
  /// d^2H/d eta^2
  double d2(double eta) const;
  /// H^{-1}(p) for p in (0,1).
  double inverse(double p) const;

  friend bool operator==(const Link&, const Link&) = default;

 private:
  LinkKind kind_ = LinkKind::logit;
};

}  // namespace rflr
