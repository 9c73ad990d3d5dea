#include "rflr/selection.hpp"

#include "rflr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace rflr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::size_t nearest_index(const std::vector<double>& grid, double value) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (std::abs(grid[i] - value) < std::abs(grid[best] - value)) best = i;
  return best;
}

}  // namespace

std::vector<double> SelectionConfig::default_kappa_grid() {
  std::vector<double> g(20);
  for (int i = 0; i < 20; ++i) g[i] = 2.0 * i / 19.0;
  g.back() = 2.0;
  return g;
}

std::vector<double> SelectionConfig::default_lambda_grid() {
  std::vector<double> g(30);
  for (int i = 0; i < 30; ++i) g[i] = std::pow(10.0, -8.0 + 10.0 * i / 29.0);
  return g;
}

void SelectionConfig::validate() const {
  if (kappa_grid.empty()) throw InvalidArgument("kappa grid is empty");
  if (lambda_grid.empty()) throw InvalidArgument("lambda grid is empty");
  if (!std::is_sorted(kappa_grid.begin(), kappa_grid.end())) throw InvalidArgument("kappa grid must be sorted");
  if (!std::is_sorted(lambda_grid.begin(), lambda_grid.end())) throw InvalidArgument("lambda grid must be sorted");
  for (double k : kappa_grid)
    if (!(k >= 0.0) || !std::isfinite(k)) throw InvalidArgument("kappa grid values must be finite and nonnegative");
  for (double l : lambda_grid)
    if (!(l >= 0.0) || !std::isfinite(l)) throw InvalidArgument("lambda grid values must be finite and nonnegative");
  if (pilot_kappa < kappa_grid.front() || pilot_kappa > kappa_grid.back())
    throw InvalidArgument("pilot kappa lies outside the kappa grid range");
  if (max_outer_iter < 1) throw InvalidArgument("max_outer_iter must be at least 1");
}

double aic(const Eigen::VectorXi& labels, const FitResult& fit, double kappa) {
  if (labels.size() != fit.probs.size()) throw ShapeMismatch("labels do not match fitted observations");
  double total = 0.0;
  for (Eigen::Index i = 0; i < labels.size(); ++i) total += loss(labels[i], fit.probs[i], kappa);
  return 2.0 * total + 2.0 * fit.edf;
}

double aic(const Eigen::VectorXi& labels, const FitResult& fit, const DesignMatrices& design, double kappa,
           double lambda) {
  FitResult copy = fit;
  copy.edf = edf(fit, design, labels, kappa, lambda);
  return aic(labels, copy, kappa);
}

LambdaSelection select_lambda(const DesignMatrices& design, const Eigen::VectorXi& labels, double kappa,
                              const std::vector<double>& lambda_grid, const FitConfig& base,
                              const std::optional<Eigen::VectorXd>& init) {
  if (lambda_grid.empty()) throw InvalidArgument("lambda grid is empty");
  const std::size_t m = lambda_grid.size();
  LambdaSelection out;
  out.lambdas = lambda_grid;
  out.aic.assign(m, kInf);
  out.converged.assign(m, false);
  out.stationary.assign(m, false);

  // Visit from the largest lambda down so each warm start comes from a smoother fit.
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return lambda_grid[a] > lambda_grid[b]; });

  std::vector<FitResult> fits(m);
  std::vector<bool> ok(m, false);
  std::optional<Eigen::VectorXd> start = init ? init : base.init;
  std::ostringstream failures;
  for (std::size_t idx : order) {
    FitConfig cfg = base;
    cfg.kappa = kappa;
    cfg.lambda = lambda_grid[idx];
    cfg.init = start;
    try {
      fits[idx] = fit(design, labels, cfg);
    } catch (const std::exception& e) {
      failures << " lambda=" << lambda_grid[idx] << ": " << e.what() << ";";
      continue;
    }
    const FitResult& f = fits[idx];
    out.converged[idx] = f.converged;
    out.stationary[idx] = f.stationary();
    const double value = std::isfinite(f.edf) ? aic(labels, f, kappa) : kInf;
    if (std::isfinite(value)) {
      out.aic[idx] = value;
      ok[idx] = true;
    } else {
      failures << " lambda=" << lambda_grid[idx] << ": AIC undefined"
               << (f.warnings.empty() ? std::string() : " (" + f.warnings.back() + ")") << ";";
    }
    start = f.coefficients();
  }

  std::size_t best = m;
  for (std::size_t i = 0; i < m; ++i) {
    if (!ok[i]) continue;
    if (best == m || out.aic[i] < out.aic[best] ||
        (out.aic[i] == out.aic[best] && lambda_grid[i] < lambda_grid[best]))
      best = i;
  }
  if (best == m) throw std::runtime_error("every fit on the lambda grid failed:" + failures.str());
  out.index = best;
  out.lambda_hat = lambda_grid[best];
  out.fit = std::move(fits[best]);
  return out;
}

LambdaSelection select_lambda(const FunctionalDataset& data, const BSplineBasis& basis, double kappa,
                              const std::vector<double>& lambda_grid, const FitConfig& base) {
  const DesignMatrices design = build_design(data, basis);
  return select_lambda(design, data.labels(), kappa, lambda_grid, base);
}

double amise(const Eigen::VectorXd& candidate_theta, const Eigen::VectorXd& pilot_theta, const Eigen::MatrixXd& gram,
             const Eigen::MatrixXd& cov_slope) {
  const Eigen::Index K = gram.rows();
  if (candidate_theta.size() != K || pilot_theta.size() != K || gram.cols() != K || cov_slope.rows() != K ||
      cov_slope.cols() != K)
    throw ShapeMismatch("AMISE inputs disagree on the basis dimension");
  const Eigen::VectorXd diff = candidate_theta - pilot_theta;
  const double bias = diff.dot(gram * diff);
  const double variance = (gram.cwiseProduct(cov_slope.transpose())).sum();
  return bias + variance;
}

const LambdaSelection* KappaSelection::at(double kappa) const {
  for (std::size_t i = 0; i < per_kappa.size(); ++i)
    if (per_kappa[i].fit.kappa == kappa) return &per_kappa[i];
  return nullptr;
}

KappaSelection select_kappa(const DesignMatrices& design, const Eigen::VectorXi& labels,
                            const SelectionConfig& config) {
  config.validate();
  const auto& grid = config.kappa_grid;
  const std::size_t nk = grid.size();

  FitConfig base;
  base.link = config.link;
  base.tol = config.tol;
  base.max_iter = config.max_iter;

  KappaSelection out;
  out.per_kappa.resize(nk);
  std::vector<bool> available(nk, false);

  const std::size_t anchor = nearest_index(grid, config.start_kappa);
  out.per_kappa[anchor] = select_lambda(design, labels, grid[anchor], config.lambda_grid, base);
  available[anchor] = true;
  const Eigen::VectorXd anchor_coef = out.per_kappa[anchor].fit.coefficients();
  for (std::size_t k = 0; k < nk; ++k) {
    if (k == anchor) continue;
    try {
      out.per_kappa[k] = select_lambda(design, labels, grid[k], config.lambda_grid, base, anchor_coef);
      available[k] = true;
    } catch (const std::runtime_error&) {
      out.per_kappa[k].fit.kappa = grid[k];
    }
  }

  std::vector<Eigen::MatrixXd> cov_slope(nk);
  for (std::size_t k = 0; k < nk; ++k)
    if (available[k]) cov_slope[k] = out.per_kappa[k].fit.slope_covariance();

  std::size_t pilot = nearest_index(grid, config.pilot_kappa);
  if (!available[pilot]) pilot = anchor;
  std::vector<std::size_t> pilots{pilot};
  std::size_t chosen = pilot;
  for (int outer = 0; outer < config.max_outer_iter; ++outer) {
    KappaIterate it;
    it.pilot_kappa = grid[pilot];
    it.amise.assign(nk, kInf);
    const Eigen::VectorXd& pilot_theta = out.per_kappa[pilot].fit.theta;
    std::size_t best = nk;
    for (std::size_t k = 0; k < nk; ++k) {
      if (!available[k] || cov_slope[k].size() == 0) continue;
      it.amise[k] = amise(out.per_kappa[k].fit.theta, pilot_theta, design.gram, cov_slope[k]);
      if (best == nk || it.amise[k] < it.amise[best]) best = k;
    }
    if (best == nk) best = pilot;
    it.selected_kappa = grid[best];
    out.trace.push_back(std::move(it));
    chosen = best;

    if (best == pilot) {
      out.converged = true;
      break;
    }
    const auto seen = std::find(pilots.begin(), pilots.end(), best);
    if (seen != pilots.end()) {
      // Trace entries from the first visit of `best` onwards select every cycle member once.
      const std::size_t first = static_cast<std::size_t>(seen - pilots.begin());
      double best_value = kInf;
      for (std::size_t j = first; j < out.trace.size(); ++j) {
        const std::size_t sel = nearest_index(grid, out.trace[j].selected_kappa);
        const double v = out.trace[j].amise[sel];
        if (v < best_value) {
          best_value = v;
          chosen = sel;
        }
      }
      out.cycled = true;
      break;
    }
    pilots.push_back(best);
    pilot = best;
  }

  out.kappa_hat = grid[chosen];
  out.lambda_hat = out.per_kappa[chosen].lambda_hat;
  out.fit = out.per_kappa[chosen].fit;
  return out;
}

KappaSelection select_kappa(const FunctionalDataset& data, const BSplineBasis& basis, const SelectionConfig& config,
                            int penalty_order) {
  const DesignMatrices design = build_design(data, basis, penalty_order);
  return select_kappa(design, data.labels(), config);
}

}  // namespace rflr
