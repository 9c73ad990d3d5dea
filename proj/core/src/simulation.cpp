#include "rflr/simulation.hpp"

#include "rflr/basis.hpp"
#include "rflr/errors.hpp"
#include "rflr/model.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <numbers>
#include <numeric>
#include <optional>
#include <thread>

namespace rflr {

namespace {

constexpr int kKarhunenLoeveTerms = 50;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("RFLR_WORKERS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

struct ReplicateOutcome {
  bool ok = false;
  std::string error;
  std::vector<double> mse, kappa, lambda, pe;
  double kappa_hat = kNaN;
  int fits = 0, converged = 0, violations = 0;
};

void tally(const LambdaSelection& sel, ReplicateOutcome& out) {
  for (std::size_t i = 0; i < sel.lambdas.size(); ++i) {
    ++out.fits;
    if (sel.converged[i]) {
      ++out.converged;
      if (!sel.stationary[i]) ++out.violations;
    }
  }
}

// Recomputes the gradient from scratch for a reported fit.
void check_stationarity(const DesignMatrices& design, const Eigen::VectorXi& labels, const FitResult& f,
                        ReplicateOutcome& out) {
  if (!f.converged) return;
  const Eigen::VectorXd g = gradient(design, labels, f.coefficients(), f.kappa, f.lambda, f.link);
  if (!(g.lpNorm<Eigen::Infinity>() < 1e-6 * (1.0 + f.grad_norm_init))) ++out.violations;
}

ReplicateOutcome run_replicate(const StudyConfig& cfg, const Grid& grid, const Eigen::VectorXd& beta,
                               const BSplineBasis& basis, int r) {
  ReplicateOutcome out;
  const std::size_t ne = cfg.estimators.size();
  out.mse.assign(ne, kNaN);
  out.kappa.assign(ne, kNaN);
  out.lambda.assign(ne, kNaN);
  out.pe.assign(ne, kNaN);

  Rng rng = make_stream(cfg.seed, 0, static_cast<std::uint64_t>(r));
  const Link logit(LinkKind::logit);
  Eigen::MatrixXd curves = generate_curves(cfg.n, grid, rng);
  Eigen::VectorXi labels = generate_labels(curves, beta, grid, logit, rng);
  FunctionalDataset data = contaminate(FunctionalDataset(std::move(curves), std::move(labels), grid), cfg.epsilon, rng);
  const DesignMatrices design = build_design(data, basis, cfg.penalty_order);
  const Eigen::VectorXi& y = data.labels();

  SelectionConfig sel = cfg.selection;
  sel.link = logit;
  FitConfig base;
  base.link = logit;
  base.tol = sel.tol;
  base.max_iter = sel.max_iter;

  const auto wants = [&](Estimator e) {
    return std::find(cfg.estimators.begin(), cfg.estimators.end(), e) != cfg.estimators.end();
  };

  std::optional<KappaSelection> ks;
  if (wants(Estimator::dpd_adaptive)) {
    ks = select_kappa(design, y, sel);
    for (const auto& s : ks->per_kappa)
      if (!s.lambdas.empty()) tally(s, out);
    out.kappa_hat = ks->kappa_hat;
  }

  std::optional<LambdaSelection> own_two;
  const auto selection_at = [&](double kappa) -> const LambdaSelection* {
    if (ks)
      if (const LambdaSelection* s = ks->at(kappa); s && !s->lambdas.empty()) return s;
    if (kappa == 2.0 && own_two) return &*own_two;
    return nullptr;
  };
  const auto fixed_kappa = [&](double kappa) -> LambdaSelection {
    if (const LambdaSelection* s = selection_at(kappa)) return *s;
    std::optional<Eigen::VectorXd> start;
    if (kappa == 2.0) {
      own_two = select_lambda(design, y, 2.0, sel.lambda_grid, base);
      tally(*own_two, out);
      return *own_two;
    }
    if (kappa > 0.0) {
      const LambdaSelection* two = selection_at(2.0);
      if (!two) {
        own_two = select_lambda(design, y, 2.0, sel.lambda_grid, base);
        tally(*own_two, out);
        two = &*own_two;
      }
      start = two->fit.coefficients();
    }
    LambdaSelection s = select_lambda(design, y, kappa, sel.lambda_grid, base, start);
    tally(s, out);
    return s;
  };

  Eigen::MatrixXd fresh;
  if (cfg.fresh_curves > 0) {
    Rng frng = make_stream(cfg.seed, 100, static_cast<std::uint64_t>(r));
    fresh = generate_curves(cfg.fresh_curves, grid, frng);
  }

  for (std::size_t e = 0; e < ne; ++e) {
    FitResult f;
    double lambda_hat = kNaN;
    switch (cfg.estimators[e]) {
      case Estimator::dpd_adaptive:
        f = ks->fit;
        lambda_hat = ks->lambda_hat;
        break;
      case Estimator::ml: {
        LambdaSelection s = fixed_kappa(0.0);
        lambda_hat = s.lambda_hat;
        f = std::move(s.fit);
        break;
      }
      case Estimator::dpd1: {
        LambdaSelection s = fixed_kappa(1.0);
        lambda_hat = s.lambda_hat;
        f = std::move(s.fit);
        break;
      }
      case Estimator::dpd2: {
        LambdaSelection s = fixed_kappa(2.0);
        lambda_hat = s.lambda_hat;
        f = std::move(s.fit);
        break;
      }
    }
    check_stationarity(design, y, f, out);
    const Eigen::VectorXd bhat = beta_on_grid(f.theta, basis, grid);
    out.mse[e] = mse(bhat, beta);
    out.kappa[e] = f.kappa;
    out.lambda[e] = lambda_hat;
    if (fresh.size() > 0) out.pe[e] = empirical_prediction_error(bhat, beta, fresh, grid);
  }
  out.ok = true;
  return out;
}

}  // namespace

Rng make_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::uint64_t state = seed;
  std::uint64_t a = splitmix64(state);
  state ^= stream * 0xD1B54A32D192ED03ULL;
  std::uint64_t b = splitmix64(state);
  state ^= index * 0xABC98388FB8FAC03ULL;
  std::uint64_t c = splitmix64(state);
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                    static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32)};
  return Rng(seq);
}

Eigen::MatrixXd curves_from_scores(const Eigen::MatrixXd& scores, const Grid& grid) {
  if (scores.cols() != kKarhunenLoeveTerms) throw ShapeMismatch("expected 50 Karhunen-Loeve scores per curve");
  const auto& t = grid.points();
  Eigen::MatrixXd phi(kKarhunenLoeveTerms, t.size());
  for (int j = 1; j <= kKarhunenLoeveTerms; ++j)
    for (Eigen::Index k = 0; k < t.size(); ++k)
      phi(j - 1, k) = std::numbers::sqrt2 / j * std::sin((j - 0.5) * std::numbers::pi * t[k]);
  return scores * phi;
}

Eigen::MatrixXd generate_curves(int n, const Grid& grid, Rng& rng) {
  if (n < 0) throw InvalidArgument("number of curves must be nonnegative");
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd z(n, kKarhunenLoeveTerms);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < kKarhunenLoeveTerms; ++j) z(i, j) = normal(rng);
  return curves_from_scores(z, grid);
}

Eigen::VectorXd beta_true(int index, const Grid& grid) {
  const auto& t = grid.points();
  switch (index) {
    case 1: return t.unaryExpr([](double s) { return 3.0 * (s - 0.3) * (s - 0.3) + 1.0; });
    case 2: return t.unaryExpr([](double s) { return 3.0 * std::sin(3.4 * s * s); });
    case 3: return t.unaryExpr([](double s) { return -std::sin(5.0 * s / 1.2) / 0.5 - 1.0; });
    default: throw InvalidArgument("coefficient function index must be 1, 2 or 3");
  }
}

Eigen::VectorXi generate_labels(const Eigen::MatrixXd& curves, const Eigen::VectorXd& beta, const Grid& grid,
                                const Link& link, Rng& rng) {
  if (curves.cols() != grid.size() || beta.size() != grid.size())
    throw ShapeMismatch("curves, coefficient function and grid sizes differ");
  const Eigen::VectorXd eta = curves * grid.weights().cwiseProduct(beta);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::VectorXi y(curves.rows());
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = unif(rng) < link.prob(eta[i]) ? 1 : 0;
  return y;
}

FunctionalDataset contaminate(const FunctionalDataset& data, double epsilon, Rng& rng,
                              std::vector<Eigen::Index>* rows) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw InvalidArgument("contamination fraction must lie in [0,1)");
  const Eigen::Index n = data.size();
  const auto count = static_cast<Eigen::Index>(std::floor(epsilon * static_cast<double>(n) + 1e-9));
  // Partial Fisher-Yates: the first `count` entries are a uniform sample without replacement.
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  for (Eigen::Index i = 0; i < count; ++i) {
    std::uniform_int_distribution<Eigen::Index> pick(i, n - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  idx.resize(static_cast<std::size_t>(count));
  std::sort(idx.begin(), idx.end());

  Eigen::MatrixXd curves = data.curves();
  Eigen::VectorXi labels = data.labels();
  for (Eigen::Index i : idx) {
    curves.row(i) *= 5.0;
    labels[i] = 1 - labels[i];
  }
  if (rows) *rows = idx;
  return FunctionalDataset(std::move(curves), std::move(labels), data.grid());
}

double mse(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta) {
  if (beta_hat.size() != beta.size() || beta.size() == 0) throw ShapeMismatch("MSE needs equal, nonempty vectors");
  return (beta_hat - beta).squaredNorm() / static_cast<double>(beta.size());
}

double empirical_prediction_error(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta,
                                  const Eigen::MatrixXd& fresh_curves, const Grid& grid) {
  if (beta_hat.size() != grid.size() || beta.size() != grid.size() || fresh_curves.cols() != grid.size())
    throw ShapeMismatch("prediction error inputs must all live on the grid");
  if (fresh_curves.rows() == 0) return 0.0;
  const Eigen::VectorXd proj = fresh_curves * grid.weights().cwiseProduct(beta_hat - beta);
  return proj.squaredNorm() / static_cast<double>(proj.size());
}

std::string estimator_name(Estimator e) {
  switch (e) {
    case Estimator::ml: return "ML";
    case Estimator::dpd_adaptive: return "DPD(kappa_hat)";
    case Estimator::dpd1: return "DPD(1)";
    case Estimator::dpd2: return "DPD(2)";
  }
  return "?";
}

Estimator parse_estimator(const std::string& name) {
  std::string s;
  for (char c : name)
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (s == "ML") return Estimator::ml;
  if (s == "DPD" || s == "DPD(KAPPA_HAT)" || s == "ADAPTIVE" || s == "DPDHAT") return Estimator::dpd_adaptive;
  if (s == "DPD1" || s == "DPD(1)") return Estimator::dpd1;
  if (s == "DPD2" || s == "DPD(2)") return Estimator::dpd2;
  throw InvalidArgument("unknown estimator '" + name + "' (expected ML, DPD, DPD1 or DPD2)");
}

void StudyConfig::validate() const {
  if (beta_index < 1 || beta_index > 3) throw InvalidArgument("beta index must be 1, 2 or 3");
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw InvalidArgument("epsilon must lie in [0,1)");
  if (n < 10) throw InvalidArgument("sample size must be at least 10");
  if (replications < 1) throw InvalidArgument("replications must be at least 1");
  if (grid_size < 2) throw InvalidArgument("grid size must be at least 2");
  if (estimators.empty()) throw InvalidArgument("no estimators requested");
  if (bootstrap_resamples < 0) throw InvalidArgument("bootstrap resamples must be nonnegative");
  if (basis_dim != 0 && basis_dim < order) throw InvalidArgument("basis dimension below spline order");
  if (fresh_curves < 0) throw InvalidArgument("fresh curve count must be nonnegative");
  selection.validate();
}

const EstimatorSummary* StudyReport::find(Estimator e) const {
  for (const auto& s : estimators)
    if (s.estimator == e) return &s;
  return nullptr;
}

double median(std::vector<double> values) {
  std::erase_if(values, [](double v) { return std::isnan(v); });
  if (values.empty()) return kNaN;
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

double bootstrap_median_se(const std::vector<double>& values, int resamples, Rng& rng) {
  std::vector<double> clean;
  for (double v : values)
    if (!std::isnan(v)) clean.push_back(v);
  if (clean.size() < 2 || resamples < 2) return 0.0;
  std::uniform_int_distribution<std::size_t> pick(0, clean.size() - 1);
  std::vector<double> meds(static_cast<std::size_t>(resamples));
  std::vector<double> draw(clean.size());
  for (auto& m : meds) {
    for (auto& d : draw) d = clean[pick(rng)];
    m = median(draw);
  }
  const double mean = std::accumulate(meds.begin(), meds.end(), 0.0) / static_cast<double>(meds.size());
  double ss = 0.0;
  for (double m : meds) ss += (m - mean) * (m - mean);
  return std::sqrt(ss / static_cast<double>(meds.size() - 1));
}

StudyReport run_study(const StudyConfig& config) {
  config.validate();
  const Grid grid = make_uniform_grid(config.grid_size);
  const Eigen::VectorXd beta = beta_true(config.beta_index, grid);
  const int k = config.basis_dim > 0 ? config.basis_dim : default_dimension(config.n, config.order);
  const BSplineBasis basis = make_basis(k, config.order);

  const int reps = config.replications;
  std::vector<ReplicateOutcome> outcomes(static_cast<std::size_t>(reps));
  std::atomic<int> next{0};
  const auto worker = [&] {
    for (int r = next++; r < reps; r = next++) {
      ReplicateOutcome& o = outcomes[static_cast<std::size_t>(r)];
      try {
        o = run_replicate(config, grid, beta, basis, r);
      } catch (const std::exception& e) {
        o = ReplicateOutcome{};
        o.error = "replicate " + std::to_string(r) + ": " + e.what();
      }
    }
  };
  const int nworkers = std::min(resolve_workers(config.workers), reps);
  if (nworkers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(nworkers));
    for (int w = 0; w < nworkers; ++w) pool.emplace_back(worker);
  }

  StudyReport rep;
  rep.config = config;
  rep.kappa_hat.assign(static_cast<std::size_t>(reps), kNaN);
  const std::size_t ne = config.estimators.size();
  rep.estimators.resize(ne);
  for (std::size_t e = 0; e < ne; ++e) {
    auto& s = rep.estimators[e];
    s.estimator = config.estimators[e];
    s.mse.assign(static_cast<std::size_t>(reps), kNaN);
    s.kappa.assign(static_cast<std::size_t>(reps), kNaN);
    s.lambda.assign(static_cast<std::size_t>(reps), kNaN);
    if (config.fresh_curves > 0) s.prediction_error.assign(static_cast<std::size_t>(reps), kNaN);
  }
  for (int r = 0; r < reps; ++r) {
    const auto& o = outcomes[static_cast<std::size_t>(r)];
    if (!o.ok) {
      ++rep.failures;
      rep.failure_messages.push_back(o.error);
      continue;
    }
    rep.kappa_hat[static_cast<std::size_t>(r)] = o.kappa_hat;
    rep.fits += o.fits;
    rep.converged_fits += o.converged;
    rep.stationarity_violations += o.violations;
    for (std::size_t e = 0; e < ne; ++e) {
      auto& s = rep.estimators[e];
      s.mse[static_cast<std::size_t>(r)] = o.mse[e];
      s.kappa[static_cast<std::size_t>(r)] = o.kappa[e];
      s.lambda[static_cast<std::size_t>(r)] = o.lambda[e];
      if (config.fresh_curves > 0) s.prediction_error[static_cast<std::size_t>(r)] = o.pe[e];
    }
  }
  for (std::size_t e = 0; e < ne; ++e) {
    auto& s = rep.estimators[e];
    s.median_mse = median(s.mse);
    Rng brng = make_stream(config.seed, 1 + static_cast<std::uint64_t>(s.estimator), 0);
    s.bootstrap_se = bootstrap_median_se(s.mse, config.bootstrap_resamples, brng);
    if (config.fresh_curves > 0) s.median_prediction_error = median(s.prediction_error);
  }
  return rep;
}

}  // namespace rflr
