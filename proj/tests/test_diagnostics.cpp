#include "fixtures.hpp"
#include "oracles.hpp"

#include "rflr/basis.hpp"
#include "rflr/diagnostics.hpp"
#include "rflr/errors.hpp"
#include "rflr/model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace rflr;

namespace {
constexpr double kTwoThirds = 2.0 / 3.0;
}

TEST(IncompleteBeta, Examples) {
  EXPECT_EQ(incomplete_beta(0.0, kTwoThirds, kTwoThirds), 0.0);
  const double whole = incomplete_beta(1.0, kTwoThirds, kTwoThirds);
  EXPECT_NEAR(incomplete_beta(0.5, kTwoThirds, kTwoThirds), whole / 2.0, 1e-12);
  EXPECT_NEAR(whole, oracle::incomplete_beta(1.0, kTwoThirds, kTwoThirds), 1e-10);
  EXPECT_NEAR(complete_beta(kTwoThirds, kTwoThirds), whole, 1e-12);
  EXPECT_NEAR(complete_beta(2.0, 3.0), 1.0 / 12.0, 1e-15);
}

TEST(IncompleteBeta, AgreesWithQuadratureOracle) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng), a = 0.1 + 4.9 * u(rng), b = 0.1 + 4.9 * u(rng);
    EXPECT_NEAR(incomplete_beta(x, a, b), oracle::incomplete_beta(x, a, b), 1e-10) << x << " " << a << " " << b;
  }
}

TEST(IncompleteBeta, MonotoneAndReflective) {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    const double a = 0.1 + 4.9 * u(rng), b = 0.1 + 4.9 * u(rng);
    double prev = -1.0;
    for (int j = 0; j <= 100; ++j) {
      const double x = j / 100.0;
      const double v = incomplete_beta(x, a, b);
      EXPECT_GE(v, prev);
      prev = v;
      EXPECT_NEAR(v + incomplete_beta(1.0 - x, b, a), incomplete_beta(1.0, a, b), 1e-10);
    }
  }
}

TEST(IncompleteBeta, InvalidParametersThrow) {
  EXPECT_THROW(incomplete_beta(0.5, 0.0, 1.0), InvalidArgument);
  EXPECT_THROW(incomplete_beta(0.5, 1.0, -1.0), InvalidArgument);
  EXPECT_THROW(incomplete_beta(1.5, 1.0, 1.0), InvalidArgument);
}

TEST(Anscombe, Examples) {
  const double whole = oracle::incomplete_beta(1.0, kTwoThirds, kTwoThirds);
  const Eigen::VectorXi y = (Eigen::VectorXi(3) << 1, 1, 0).finished();
  const Eigen::VectorXd mu = (Eigen::VectorXd(3) << 0.5, 1.0 - 1e-9, 0.3).finished();
  const ResidualReport r = anscombe_residuals(y, mu);
  EXPECT_NEAR(r.residuals[0], whole / (2.0 * std::cbrt(0.5)), 1e-10);
  EXPECT_NEAR(r.residuals[1], 0.0, 1e-3);
  EXPECT_LE(r.residuals[2], 0.0);
  EXPECT_GE(r.residuals[0], 0.0);
}

TEST(Anscombe, DecreasingInFittedValueForPositiveLabel) {
  double prev = std::numeric_limits<double>::infinity();
  for (int j = 1; j < 1000; ++j) {
    const double mu = j / 1000.0;
    const double r = anscombe_residuals(Eigen::VectorXi::Ones(1), Eigen::VectorXd::Constant(1, mu)).residuals[0];
    EXPECT_LT(r, prev);
    prev = r;
  }
}

TEST(Anscombe, FlagsExactlyTheLargeResiduals) {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> u(0.001, 0.999);
  Eigen::VectorXi y(500);
  Eigen::VectorXd mu(500);
  for (int i = 0; i < 500; ++i) {
    mu[i] = u(rng);
    y[i] = u(rng) < 0.5;
  }
  for (double thr : {0.5, 1.0, 2.0, 1e9}) {
    const ResidualReport r = anscombe_residuals(y, mu, thr);
    std::vector<Eigen::Index> expected;
    for (Eigen::Index i = 0; i < 500; ++i)
      if (std::abs(r.residuals[i]) >= thr) expected.push_back(i);
    EXPECT_EQ(r.flagged, expected);
    EXPECT_EQ(r.threshold, thr);
  }
}

TEST(Anscombe, BoundaryFittedValuesAreClamped) {
  const ResidualReport r =
      anscombe_residuals((Eigen::VectorXi(2) << 1, 0).finished(), (Eigen::VectorXd(2) << 1.0, 0.0).finished());
  EXPECT_EQ(r.clamped, 2);
  EXPECT_TRUE(r.residuals.allFinite());
}

TEST(Anscombe, FewFlagsOnACorrectlySpecifiedFit) {
  const FunctionalDataset data = fixture::simulated(2000, 100, 34);
  const BSplineBasis basis = make_basis(15, 4);
  FitConfig cfg;
  cfg.lambda = 1e-2;
  const FitResult r = fit(data, basis, cfg);
  const ResidualReport rep = anscombe_residuals(r, data.labels());
  EXPECT_LT(static_cast<double>(rep.flagged.size()) / 2000.0, 0.10);
}
