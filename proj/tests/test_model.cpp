#include "fixtures.hpp"
#include "oracles.hpp"

#include "rflr/basis.hpp"
#include "rflr/design.hpp"
#include "rflr/errors.hpp"
#include "rflr/model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace rflr;

namespace {

double rel_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).lpNorm<Eigen::Infinity>() / std::max(1e-300, b.lpNorm<Eigen::Infinity>());
}

DesignMatrices small_design(const FunctionalDataset& data, int K) { return build_design(data, make_basis(K, 4), 2); }

}  // namespace

TEST(Design, ZeroCurvesGiveInterceptOnlyDesign) {
  const Grid grid = make_uniform_grid(20);
  const FunctionalDataset data(Eigen::MatrixXd::Zero(5, 20), (Eigen::VectorXi(5) << 0, 1, 0, 1, 1).finished(), grid);
  const DesignMatrices d = build_design(data, make_basis(6, 4));
  EXPECT_EQ(d.bstar.col(0), Eigen::VectorXd::Ones(5));
  EXPECT_EQ(d.bstar.rightCols(6).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Design, ConstantCurveRowIsGramRowSums) {
  const Grid grid = make_uniform_grid(50);
  const FunctionalDataset data(Eigen::MatrixXd::Ones(1, 50), Eigen::VectorXi::Ones(1), grid);
  const DesignMatrices d = build_design(data, make_basis(7, 4));
  EXPECT_EQ(d.bstar(0, 0), 1.0);
  for (int k = 0; k < 7; ++k) EXPECT_NEAR(d.bstar(0, 1 + k), d.gram.row(k).sum(), 1e-14);
}

TEST(Design, AugmentedPenaltyInvariants) {
  const DesignMatrices d = small_design(fixture::simulated(40, 60, 1), 8);
  EXPECT_EQ(d.pstar.row(0).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(d.pstar.col(0).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_LT((d.pstar - d.pstar.transpose()).lpNorm<Eigen::Infinity>(), 1e-12);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(d.pstar);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10 * es.eigenvalues().maxCoeff());
  EXPECT_EQ(d.null_dimension, 3);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> z;
  for (int i = 0; i < 20; ++i) {
    Eigen::VectorXd c(9);
    for (auto& x : c) x = z(rng);
    const double raw = c.dot(d.pstar * c);
    EXPECT_NEAR(d.penalty(c), raw, 1e-9 * (1.0 + raw));
    EXPECT_LT((d.penalty_gradient(c) - 2.0 * d.pstar * c).lpNorm<Eigen::Infinity>(), 1e-8 * (1.0 + raw));
  }
}

TEST(Design, WarnsWhenBasisExceedsSample) {
  const DesignMatrices d = small_design(fixture::simulated(6, 30, 1), 8);
  EXPECT_FALSE(d.warnings.empty());
}

TEST(Design, ShapeMismatchThrows) {
  const Grid grid = make_uniform_grid(10);
  EXPECT_THROW(FunctionalDataset(Eigen::MatrixXd::Zero(3, 11), Eigen::VectorXi::Zero(3), grid), ShapeMismatch);
  EXPECT_THROW(FunctionalDataset(Eigen::MatrixXd::Zero(3, 10), Eigen::VectorXi::Zero(2), grid), ShapeMismatch);
  EXPECT_THROW(FunctionalDataset(Eigen::MatrixXd::Zero(2, 10), (Eigen::VectorXi(2) << 0, 2).finished(), grid),
               InvalidArgument);
}

TEST(IrlsWeights, ClosedFormExamples) {
  const Link logit;
  EXPECT_NEAR(irls_weights(1, 0.5, 0.0, 0.0, logit).w, 0.25, 1e-15);
  EXPECT_NEAR(irls_weights(1, 0.5, 0.0, 1.0, logit).w, 0.25, 1e-15);
}

TEST(IrlsWeights, MatchExpectationFormula) {
  for (const Link link : {Link(LinkKind::logit), Link(LinkKind::probit), Link(LinkKind::cloglog)})
    for (double kappa : {0.0, 0.3, 1.0, 2.0})
      for (double eta : {-2.5, -0.7, 0.0, 0.4, 1.9}) {
        const double p = link.prob(eta);
        const double q = 1.0 - p;
        const double hp = link.d1(eta);
        const double expected = (1 + kappa) * (std::pow(p, 1 + kappa) * q * q + std::pow(q, 1 + kappa) * p * p) *
                                hp * hp / (p * p * q * q);
        EXPECT_NEAR(irls_weights(0, p, eta, kappa, link).w, expected, 1e-12 * expected) << link.name();
      }
}

TEST(IrlsWeights, KappaZeroWorkingResponseIsTextbookIrls) {
  const Link logit;
  for (double eta : {-2.0, -0.1, 0.6, 3.0})
    for (int y : {0, 1}) {
      const double p = logit.prob(eta);
      const auto iw = irls_weights(y, p, eta, 0.0, logit);
      EXPECT_NEAR(iw.z, eta + (y - p) / (p * (1 - p)), 1e-12);
    }
}

TEST(IrlsWeights, WorkingResponseIsScoreOverWeight) {
  const double h = 1e-6;
  for (const Link link : {Link(LinkKind::logit), Link(LinkKind::probit)})
    for (double kappa : {0.5, 1.0, 2.0})
      for (double eta : {-1.5, 0.2, 1.1})
        for (int y : {0, 1}) {
          const double p = link.prob(eta);
          const double fd = (loss(y, link.prob(eta + h), kappa) - loss(y, link.prob(eta - h), kappa)) / (2 * h);
          const auto iw = irls_weights(y, p, eta, kappa, link);
          EXPECT_NEAR(iw.z, eta - fd / iw.w, 1e-6 * (1 + std::abs(iw.z)));
        }
}

TEST(Fit, MatchesNewtonOracleWithoutPenalty) {
  const DesignMatrices d = small_design(fixture::simulated(120, 50, 3), 4);
  const FunctionalDataset data = fixture::simulated(120, 50, 3);
  FitConfig cfg;
  const FitResult r = fit(d, data.labels(), cfg);
  ASSERT_TRUE(r.converged);
  const auto ref = oracle::newton_logistic(d.bstar, data.labels());
  ASSERT_TRUE(ref.has_value());
  EXPECT_LT(rel_error(r.coefficients(), *ref), 1e-8);
}

TEST(Fit, MatchesNewtonOracleWithPenalty) {
  const FunctionalDataset data = fixture::simulated(200, 80, 4);
  const DesignMatrices d = small_design(data, 10);
  for (double lambda : {1e-4, 1e-2, 1.0}) {
    FitConfig cfg;
    cfg.lambda = lambda;
    const FitResult r = fit(d, data.labels(), cfg);
    ASSERT_TRUE(r.converged);
    const auto ref = oracle::newton_logistic(d.bstar, data.labels(), lambda, &d.pstar);
    ASSERT_TRUE(ref.has_value());
    EXPECT_LT(rel_error(r.coefficients(), *ref), 1e-6) << "lambda=" << lambda;
  }
}

TEST(Fit, HugePenaltyForcesNullSpace) {
  const FunctionalDataset data = fixture::simulated(200, 100, 5);
  const BSplineBasis basis = make_basis(15, 4);
  const DesignMatrices d = build_design(data, basis);
  FitConfig cfg;
  cfg.lambda = 1e12;
  cfg.kappa = 0.5;
  const FitResult r = fit(d, data.labels(), cfg);
  EXPECT_TRUE(r.converged);
  const PenaltyMatrix p = penalty_matrix(basis, data.grid(), 2);
  EXPECT_LT(p.quadratic_form(r.theta), 1e-6 * r.theta.squaredNorm());
}

TEST(Fit, ConvergedFitsAreStationary) {
  const FunctionalDataset data = fixture::simulated(300, 100, 6, 1, 1.0, 0.03);
  const DesignMatrices d = small_design(data, 12);
  for (double kappa : {0.0, 0.25, 1.0, 2.0})
    for (double lambda : {1e-6, 1e-2, 10.0}) {
      FitConfig cfg;
      cfg.kappa = kappa;
      cfg.lambda = lambda;
      const FitResult r = fit(d, data.labels(), cfg);
      ASSERT_TRUE(r.converged) << kappa << " " << lambda;
      const Eigen::VectorXd g = gradient(d, data.labels(), r.coefficients(), kappa, lambda, cfg.link);
      EXPECT_LT(g.lpNorm<Eigen::Infinity>(), 1e-6 * (1.0 + r.grad_norm_init));
      EXPECT_GT(r.probs.minCoeff(), 0.0);
      EXPECT_LT(r.probs.maxCoeff(), 1.0);
    }
}

TEST(Fit, ObjectiveNeverIncreasesAcrossIterations) {
  const FunctionalDataset data = fixture::simulated(250, 100, 8, 1, 1.0, 0.04);
  const DesignMatrices d = small_design(data, 12);
  for (double kappa : {0.0, 0.7, 2.0}) {
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= 12; ++k) {
      FitConfig cfg;
      cfg.kappa = kappa;
      cfg.lambda = 1e-3;
      cfg.max_iter = k;
      const FitResult r = fit(d, data.labels(), cfg);
      EXPECT_LE(r.objective, prev + 1e-10 * std::abs(prev)) << "kappa=" << kappa << " iter=" << k;
      prev = r.objective;
    }
  }
}

TEST(Fit, GradientMatchesFiniteDifferences) {
  const FunctionalDataset data = fixture::simulated(80, 60, 9);
  const DesignMatrices d = small_design(data, 6);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> z;
  const Link logit;
  for (double kappa : {0.0, 0.3, 1.0, 2.0})
    for (int i = 0; i < 20; ++i) {
      Eigen::VectorXd c(7);
      for (auto& x : c) x = z(rng);
      const double lambda = 0.01;
      const Eigen::VectorXd g = gradient(d, data.labels(), c, kappa, lambda, logit);
      auto f = [&](const Eigen::VectorXd& x) { return objective(d, data.labels(), x, kappa, lambda, logit); };
      Eigen::VectorXd fd(7);
      for (Eigen::Index j = 0; j < 7; ++j) fd[j] = oracle::central_diff(f, c, j, 1e-5);
      EXPECT_LT(rel_error(g, fd), 1e-5) << "kappa=" << kappa;
    }
}

TEST(Fit, MeanFormLambdaScalesBySampleSize) { EXPECT_DOUBLE_EQ(mean_to_sum_lambda(0.01, 400), 4.0); }

TEST(Fit, InvalidConfigurationThrows) {
  const FunctionalDataset data = fixture::simulated(30, 40, 1);
  const DesignMatrices d = small_design(data, 5);
  FitConfig cfg;
  cfg.kappa = -1.0;
  EXPECT_THROW(fit(d, data.labels(), cfg), InvalidArgument);
  cfg = {};
  cfg.tol = 0.0;
  EXPECT_THROW(fit(d, data.labels(), cfg), InvalidArgument);
  cfg = {};
  cfg.init = Eigen::VectorXd::Zero(3);
  EXPECT_THROW(fit(d, data.labels(), cfg), ShapeMismatch);
  EXPECT_THROW(fit(d, Eigen::VectorXi::Zero(29), FitConfig{}), ShapeMismatch);
}

TEST(Fit, SingleClassWarns) {
  const Grid grid = make_uniform_grid(20);
  const FunctionalDataset data(Eigen::MatrixXd::Random(10, 20), Eigen::VectorXi::Ones(10), grid);
  FitConfig cfg;
  cfg.lambda = 1.0;
  const FitResult r = fit(data, make_basis(4, 4), cfg);
  EXPECT_FALSE(r.warnings.empty());
}

TEST(Fit, DownweightsAFlippedLeveragePoint) {
  double change_ml = 0.0, change_dpd = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const FunctionalDataset clean = fixture::simulated(400, 100, 100 + rep);
    const BSplineBasis basis = make_basis(12, 4);
    const DesignMatrices d = build_design(clean, basis);
    FitConfig cfg;
    cfg.lambda = 1e-2;
    const FitResult ml = fit(d, clean.labels(), cfg);
    Eigen::Index worst = 0;
    ml.eta.cwiseAbs().maxCoeff(&worst);
    Eigen::VectorXi flipped = clean.labels();
    flipped[worst] = 1 - flipped[worst];
    const FitResult ml_flip = fit(d, flipped, cfg);
    cfg.kappa = 1.0;
    const FitResult dpd = fit(d, clean.labels(), cfg);
    const FitResult dpd_flip = fit(d, flipped, cfg);
    change_ml += (beta_on_grid(ml_flip.theta, basis, clean.grid()) - beta_on_grid(ml.theta, basis, clean.grid()))
                     .lpNorm<Eigen::Infinity>();
    change_dpd += (beta_on_grid(dpd_flip.theta, basis, clean.grid()) - beta_on_grid(dpd.theta, basis, clean.grid()))
                      .lpNorm<Eigen::Infinity>();
  }
  EXPECT_LT(change_dpd, change_ml);
}

TEST(Covariance, SymmetricSandwich) {
  const FunctionalDataset data = fixture::simulated(200, 80, 10);
  const DesignMatrices d = small_design(data, 10);
  FitConfig cfg;
  cfg.kappa = 0.5;
  cfg.lambda = 0.1;
  const FitResult r = fit(d, data.labels(), cfg);
  const Eigen::MatrixXd cov = covariance(r, d, data.labels(), cfg.kappa, cfg.lambda);
  EXPECT_LT((cov - cov.transpose()).lpNorm<Eigen::Infinity>(), 1e-10);
  EXPECT_LT((cov - r.cov).lpNorm<Eigen::Infinity>(), 1e-12 * cov.lpNorm<Eigen::Infinity>());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10 * es.eigenvalues().maxCoeff());
}

TEST(Covariance, MaximumLikelihoodSandwichApproachesInverseFisher) {
  const FunctionalDataset data = fixture::simulated(5000, 50, 11);
  const DesignMatrices d = small_design(data, 4);
  const FitResult r = fit(d, data.labels(), FitConfig{});
  ASSERT_TRUE(r.converged);
  Eigen::VectorXd w(r.probs.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = r.probs[i] * (1 - r.probs[i]);
  const Eigen::MatrixXd fisher_inv = (d.bstar.transpose() * w.asDiagonal() * d.bstar).inverse();
  for (Eigen::Index k = 0; k < fisher_inv.rows(); ++k)
    EXPECT_LT(std::abs(r.cov(k, k) - fisher_inv(k, k)) / fisher_inv(k, k), 0.15) << "k=" << k;
}

TEST(Covariance, SlopeTraceShrinksWithLambda) {
  const FunctionalDataset data = fixture::simulated(300, 100, 12);
  const DesignMatrices d = small_design(data, 15);
  FitConfig cfg;
  cfg.lambda = 1e-3;
  const FitResult r = fit(d, data.labels(), cfg);
  double prev = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 20; ++i) {
    const double lambda = std::pow(10.0, -6.0 + 0.5 * i);
    const Eigen::MatrixXd cov = covariance(r, d, data.labels(), 0.0, lambda);
    const double tr = cov.bottomRightCorner(15, 15).trace();
    EXPECT_LE(tr, prev * (1 + 1e-10)) << "lambda=" << lambda;
    prev = tr;
  }
}

TEST(Edf, LimitsAndMonotonicity) {
  const FunctionalDataset data = fixture::simulated(400, 200, 13);
  const DesignMatrices d = small_design(data, 20);
  FitConfig cfg;
  const FitResult r0 = fit(d, data.labels(), cfg);
  ASSERT_TRUE(r0.converged);
  EXPECT_NEAR(r0.edf, 21.0, 1e-8);
  cfg.lambda = 1e12;
  const FitResult rinf = fit(d, data.labels(), cfg);
  EXPECT_NEAR(rinf.edf, 3.0, 1e-3);
  double prev = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 20; ++i) {
    const double lambda = std::pow(10.0, -8.0 + 0.6 * i);
    const double e = edf(r0, d, data.labels(), 0.0, lambda);
    EXPECT_LE(e, prev + 1e-10);
    EXPECT_GT(e, 0.0);
    EXPECT_LE(e, 21.0 + 1e-8);
    prev = e;
  }
}

TEST(Predict, Examples) {
  const FunctionalDataset data = fixture::simulated(150, 60, 14);
  const BSplineBasis basis = make_basis(8, 4);
  FitConfig cfg;
  cfg.lambda = 0.1;
  const FitResult r = fit(data, basis, cfg);
  const Eigen::VectorXd again = predict(r, basis, data.curves(), data.grid());
  for (Eigen::Index i = 0; i < again.size(); ++i) EXPECT_EQ(again[i], r.probs[i]);
  const Eigen::VectorXd zero = predict(r, basis, Eigen::MatrixXd::Zero(2, 60), data.grid());
  EXPECT_EQ(zero[0], Link{}.prob(r.alpha));
  FitResult flat = r;
  flat.alpha = 0.0;
  flat.theta.setZero();
  EXPECT_EQ(predict(flat, basis, data.curves().topRows(3), data.grid())[1], 0.5);
  EXPECT_THROW(predict(r, basis, Eigen::MatrixXd::Zero(2, 61), data.grid()), ShapeMismatch);
}
