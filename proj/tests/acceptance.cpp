// Acceptance gate: prints one PASS/FAIL line per criterion and exits nonzero on any failure.

#include "fixtures.hpp"
#include "oracles.hpp"

#include "rflr/rflr.hpp"

#ifdef RFLR_HAVE_CLI
#include "cli/commands.hpp"
#endif

#include <json.hpp>

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace rflr;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  std::printf("[%s] criterion %2d  %-34s %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double median_of(std::vector<double> v) { return median(std::move(v)); }

void divergence_bounds() {
  const Stopwatch sw;
  std::mt19937_64 rng(1001);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int bad = 0;
  double worst_excess = -1e300;
  for (int i = 0; i < 10000; ++i) {
    const double ph = u(rng), pf = u(rng), kappa = 1.0 - u(rng);
    const double bound = 1.0 + 1.0 / kappa;
    const double d = dpd(ph, pf, kappa);
    worst_excess = std::max(worst_excess, d - bound);
    if (!(d >= 0.0 && d <= bound + 1e-12)) ++bad;
    if (ph != pf && !(d > 0.0)) ++bad;            // zero only when equal
    if (!(d < bound)) ++bad;                       // |ph - pf| < 1 here
    if (std::abs(dpd(ph, ph, kappa)) > 1e-12) ++bad;
    if (std::abs(dpd(1.0, 0.0, kappa) - bound) > 1e-12 || std::abs(dpd(0.0, 1.0, kappa) - bound) > 1e-12) ++bad;
  }
  const double t = sw.seconds();
  report(1, "divergence bounds", bad == 0 && t < 1.0,
         std::to_string(bad) + " violations over 1e4 triples, max d-bound " + fmt("%.3g", worst_excess) + ", " +
             fmt("%.3f s", t));
}

void ml_oracle() {
  const Stopwatch sw;
  double worst = 0.0;
  int done = 0, skipped = 0, unconverged = 0;
  for (std::uint64_t seed = 2000; done < 20; ++seed) {
    const FunctionalDataset data = fixture::simulated(50, 50, seed);
    const DesignMatrices d = build_design(data, make_basis(6, 4));
    const auto ref = oracle::newton_logistic(d.bstar, data.labels());
    if (!ref) {  // separable sample: no maximum likelihood estimate exists
      ++skipped;
      continue;
    }
    const FitResult r = fit(d, data.labels(), FitConfig{});
    if (!r.converged) ++unconverged;
    worst = std::max(worst, (r.coefficients() - *ref).lpNorm<Eigen::Infinity>() / ref->lpNorm<Eigen::Infinity>());
    ++done;
  }
  const double t = sw.seconds();
  report(2, "ML oracle equivalence", worst < 1e-8 && unconverged == 0 && t < 5.0,
         "max rel coef error " + fmt("%.2e", worst) + " on 20 datasets (" + std::to_string(skipped) +
             " separable skipped), " + fmt("%.2f s", t));
}

void gradient_check() {
  const Stopwatch sw;
  const FunctionalDataset data = fixture::simulated(100, 60, 3000);
  const DesignMatrices d = build_design(data, make_basis(8, 4));
  std::mt19937_64 rng(3001);
  std::normal_distribution<double> z;
  const Link logit;
  const double lambda = 0.5;
  double worst = 0.0;
  for (double kappa : {0.3, 1.0, 2.0})
    for (int i = 0; i < 20; ++i) {
      Eigen::VectorXd c(9);
      for (auto& x : c) x = z(rng);
      const Eigen::VectorXd g = gradient(d, data.labels(), c, kappa, lambda, logit);
      auto f = [&](const Eigen::VectorXd& x) { return objective(d, data.labels(), x, kappa, lambda, logit); };
      Eigen::VectorXd fd(9);
      for (Eigen::Index j = 0; j < 9; ++j) fd[j] = oracle::central_diff(f, c, j, 1e-5);
      worst = std::max(worst, (g - fd).lpNorm<Eigen::Infinity>() / fd.lpNorm<Eigen::Infinity>());
    }
  const double t = sw.seconds();
  report(3, "gradient correctness", worst < 1e-5 && t < 5.0,
         "max rel error " + fmt("%.2e", worst) + " at 60 points, " + fmt("%.2f s", t));
}

void incomplete_beta_check() {
  const Stopwatch sw;
  std::mt19937_64 rng(8001);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng), a = 0.1 + 4.9 * u(rng), b = 0.1 + 4.9 * u(rng);
    worst = std::max(worst, std::abs(incomplete_beta(x, a, b) - oracle::incomplete_beta(x, a, b)));
  }
  const double t = sw.seconds();
  report(8, "incomplete beta", worst < 1e-10 && t < 2.0,
         "max abs error " + fmt("%.2e", worst) + " over 1000 draws, " + fmt("%.2f s", t));
}

void edf_limits() {
  const FunctionalDataset data = fixture::simulated(400, 200, 9000);
  const DesignMatrices d = build_design(data, make_basis(30, 4), 2);
  double err0 = 0.0, errinf = 0.0;
  for (double kappa : {0.0, 1.0}) {
    FitConfig cfg;
    cfg.kappa = kappa;
    err0 = std::max(err0, std::abs(fit(d, data.labels(), cfg).edf - 31.0));
    cfg.lambda = 1e12;
    errinf = std::max(errinf, std::abs(fit(d, data.labels(), cfg).edf - 3.0));
  }
  report(9, "edf limits", err0 < 1e-8 && errinf < 1e-3,
         "|edf(0)-(K+1)| " + fmt("%.2e", err0) + ", |edf(1e12)-3| " + fmt("%.2e", errinf) + " (K=30, q=2)");
}

struct Runs {
  StudyReport clean, two, five;
};

StudyReport study(double eps, int reps, std::vector<Estimator> estimators) {
  StudyConfig c;
  c.beta_index = 1;
  c.epsilon = eps;
  c.n = 400;
  c.replications = reps;
  c.estimators = std::move(estimators);
  c.seed = 1;
  const Stopwatch sw;
  StudyReport r = run_study(c);
  std::printf("         study eps=%.2f reps=%d: %.1f s, %d fits, %d converged, %d failures\n", eps, reps, sw.seconds(),
              r.fits, r.converged_fits, r.failures);
  std::fflush(stdout);
  return r;
}

int simulate_violations = 0;
int simulate_fits = 0;

void determinism() {
#ifdef RFLR_HAVE_CLI
  const fs::path root = fs::temp_directory_path() / ("rflr_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  auto run = [&](const std::string& workers, std::string& table) {
    const std::string out = (root / ("w" + workers)).string();
    std::ostringstream o, e;
    const int code = cli::run({"rflr", "simulate", "--beta", "1", "--eps", "0.02", "--n", "100", "--reps", "8",
                               "--seed", "3", "--workers", workers, "--out", out},
                              o, e);
    table = o.str();
    return code;
  };
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  std::string t1, t8;
  const int c1 = run("1", t1);
  const int c8 = run("8", t8);
  const std::string r1 = slurp(root / "w1" / "report.json"), r8 = slurp(root / "w8" / "report.json");
  const std::string p1 = slurp(root / "w1" / "replicates.csv"), p8 = slurp(root / "w8" / "replicates.csv");
  const bool ok = c1 == 0 && c8 == 0 && !r1.empty() && r1 == r8 && p1 == p8 && t1 == t8;
  if (!r1.empty()) {
    const auto j = nlohmann::json::parse(r1);
    simulate_violations += j["stationarity_violations"].get<int>();
    simulate_fits += j["fits"].get<int>();
  }
  fs::remove_all(root);
  report(10, "simulate determinism", ok,
         std::string("report.json ") + (r1 == r8 ? "identical" : "differs") + ", replicates.csv " +
             (p1 == p8 ? "identical" : "differs") + ", table " + (t1 == t8 ? "identical" : "differs") +
             " (1 vs 8 workers, " + std::to_string(r1.size()) + " bytes)");
#else
  report(10, "simulate determinism", false, "command-line tool not built");
#endif
}

}  // namespace

int main() {
  divergence_bounds();
  ml_oracle();
  gradient_check();
  incomplete_beta_check();
  edf_limits();
  determinism();

  Runs runs;
  runs.clean = study(0.0, 100, {Estimator::dpd_adaptive, Estimator::ml});
  runs.two = study(0.02, 100, {Estimator::dpd_adaptive, Estimator::ml, Estimator::dpd2});
  runs.five = study(0.05, 50, {Estimator::dpd_adaptive});

  const int violations = runs.clean.stationarity_violations + runs.two.stationarity_violations +
                         runs.five.stationarity_violations + simulate_violations;
  const int fits = runs.clean.fits + runs.two.fits + runs.five.fits + simulate_fits;
  const int converged = runs.clean.converged_fits + runs.two.converged_fits + runs.five.converged_fits;
  const int failed = runs.clean.failures + runs.two.failures + runs.five.failures;
  report(4, "stationarity", violations == 0 && failed == 0,
         std::to_string(violations) + " violations among converged fits; " + std::to_string(fits) + " fits, " +
             std::to_string(converged) + " converged in the n=400 studies, " + std::to_string(failed) +
             " failed replicates");

  {
    const double dpd = runs.clean.find(Estimator::dpd_adaptive)->median_mse;
    const double ml = runs.clean.find(Estimator::ml)->median_mse;
    const double ratio = dpd / ml;
    report(5, "clean-data efficiency", ratio >= 0.7 && ratio <= 1.6,
           "median MSE DPD(kappa_hat) " + fmt("%.4f", dpd) + " / ML " + fmt("%.4f", ml) + " = " + fmt("%.3f", ratio) +
               " (need [0.7, 1.6])");
  }
  {
    const double dpd = runs.two.find(Estimator::dpd_adaptive)->median_mse;
    const double ml = runs.two.find(Estimator::ml)->median_mse;
    const double dpd2 = runs.two.find(Estimator::dpd2)->median_mse;
    const double ratio = ml / dpd;
    const double rel = std::abs(dpd2 - dpd) / dpd;
    report(6, "contaminated robustness", ratio >= 3.0 && rel <= 0.30,
           "ML " + fmt("%.4f", ml) + " / DPD(kappa_hat) " + fmt("%.4f", dpd) + " = " + fmt("%.2f", ratio) +
               " (need >= 3); DPD(2) " + fmt("%.4f", dpd2) + " off by " + fmt("%.1f%%", 100 * rel) +
               " (need <= 30%)");
  }
  {
    const double heavy = median_of(runs.five.kappa_hat);
    // Counter-based streams make the first 50 replicates identical to a 50-replicate run.
    const std::vector<double> first50(runs.clean.kappa_hat.begin(), runs.clean.kappa_hat.begin() + 50);
    const double clean = median_of(first50);
    report(7, "adaptive tuning", heavy >= 1.0 && clean <= 0.5,
           "median kappa_hat " + fmt("%.3f", heavy) + " at eps=0.05 (need >= 1), " + fmt("%.3f", clean) +
               " at eps=0 (need <= 0.5), 50 replicates each");
  }

  std::printf("%s: %d criterion failure(s)\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
  return failures == 0 ? 0 : 1;
}
