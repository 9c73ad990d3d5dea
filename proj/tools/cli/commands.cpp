#include "cli/commands.hpp"

#include "cli/csv_io.hpp"
#include "cli/model_io.hpp"
#include "rflr/rflr.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace rflr::cli {
namespace {

using nlohmann::json;

std::optional<double> parse_number(const std::string& s) {
  std::istringstream ss(s);
  double v = 0.0;
  if (!(ss >> v) || !ss.eof()) return std::nullopt;
  return v;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

GridSpec resolve_grid(const CurveTable& table, const std::optional<std::string>& grid_flag) {
  const auto m = static_cast<std::size_t>(table.curves.cols());
  GridSpec spec;
  spec.size = static_cast<int>(m);
  std::optional<std::vector<double>> points = table.header_grid;
  if (grid_flag) points = read_grid_spec(*grid_flag);
  if (points) {
    if (points->size() != m)
      throw CliError(kExitMalformed, "grid has " + std::to_string(points->size()) + " points but curves have " +
                                         std::to_string(m) + " samples");
    spec.uniform = false;
    spec.points = *points;
  }
  return spec;
}

// Model grid is authoritative; data may only restate it.
Grid model_grid_for(const ModelFile& model, const CurveTable& table, const std::optional<std::string>& grid_flag) {
  const Grid grid = model.grid.make();
  if (table.curves.cols() != grid.size())
    throw CliError(kExitMalformed, "data has " + std::to_string(table.curves.cols()) + " curve samples, model grid has " +
                                       std::to_string(grid.size()));
  std::optional<std::vector<double>> points = table.header_grid;
  if (grid_flag) points = read_grid_spec(*grid_flag);
  if (points) {
    if (static_cast<Eigen::Index>(points->size()) != grid.size())
      throw CliError(kExitMalformed, "grid size does not match the model grid");
    for (std::size_t j = 0; j < points->size(); ++j)
      if (std::abs((*points)[j] - grid.points()[static_cast<Eigen::Index>(j)]) > 1e-12)
        throw CliError(kExitMalformed, "grid points do not match the model grid");
  }
  return grid;
}

void write_text(const std::optional<std::string>& path, const std::string& text, std::ostream& out) {
  if (!path) {
    out << text;
    return;
  }
  std::ofstream f(*path);
  if (!f) throw CliError(kExitMalformed, "cannot write " + *path);
  f << text;
}

json lambda_table(const LambdaSelection& sel) {
  json rows = json::array();
  for (std::size_t i = 0; i < sel.lambdas.size(); ++i)
    rows.push_back({{"lambda", sel.lambdas[i]}, {"aic", sel.aic[i]}, {"converged", static_cast<bool>(sel.converged[i])}});
  return rows;
}

std::string format_cell(const EstimatorSummary* s) {
  if (!s) return "-";
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << s->median_mse << " (" << s->bootstrap_se << ")";
  return os.str();
}

}  // namespace

int cmd_fit(const FitOptions& opt, std::ostream& out, std::ostream& err) {
  const CurveTable table = read_curve_csv(opt.input, true);
  const GridSpec grid_spec = resolve_grid(table, opt.grid);
  const Grid grid = grid_spec.make();
  const FunctionalDataset data(table.curves, *table.labels, grid);
  const Link link = Link::parse(opt.link);

  const int n = static_cast<int>(data.size());
  const int K = opt.basis_dim > 0 ? opt.basis_dim : default_dimension(n, opt.order);
  const BSplineBasis basis = make_basis(K, opt.order);
  const DesignMatrices design = build_design(data, basis, opt.penalty_order);

  const bool adaptive_kappa = lower(opt.kappa) == "adaptive";
  const bool aic_lambda = lower(opt.lambda) == "aic";
  std::optional<double> kappa_fixed;
  std::optional<double> lambda_fixed;
  if (!adaptive_kappa) {
    kappa_fixed = parse_number(opt.kappa);
    if (!kappa_fixed || *kappa_fixed < 0.0) throw CliError(kExitMalformed, "--kappa must be 'adaptive' or a number >= 0");
  }
  if (!aic_lambda) {
    lambda_fixed = parse_number(opt.lambda);
    if (!lambda_fixed || *lambda_fixed < 0.0) throw CliError(kExitMalformed, "--lambda must be 'aic' or a number >= 0");
  }

  FitResult result;
  json selection = nullptr;
  if (adaptive_kappa) {
    SelectionConfig sc;
    sc.link = link;
    sc.tol = opt.tol;
    sc.max_iter = opt.max_iter;
    if (lambda_fixed) sc.lambda_grid = {*lambda_fixed};
    const KappaSelection ks = select_kappa(design, data.labels(), sc);
    result = ks.fit;
    json trace = json::array();
    for (const auto& it : ks.trace)
      trace.push_back({{"pilot_kappa", it.pilot_kappa}, {"selected_kappa", it.selected_kappa}, {"amise", it.amise}});
    json per_kappa = json::array();
    for (std::size_t k = 0; k < sc.kappa_grid.size(); ++k)
      per_kappa.push_back({{"kappa", sc.kappa_grid[k]}, {"lambda_hat", ks.per_kappa[k].lambda_hat}});
    selection = {{"mode", "adaptive"},
                 {"converged", ks.converged},
                 {"cycled", ks.cycled},
                 {"trace", trace},
                 {"per_kappa", per_kappa},
                 {"lambda_table", lambda_table(*ks.at(ks.kappa_hat))}};
  } else if (aic_lambda) {
    FitConfig base;
    base.link = link;
    base.tol = opt.tol;
    base.max_iter = opt.max_iter;
    const LambdaSelection ls = select_lambda(design, data.labels(), *kappa_fixed, SelectionConfig::default_lambda_grid(), base);
    result = ls.fit;
    selection = {{"mode", "aic"}, {"lambda_table", lambda_table(ls)}};
  } else {
    FitConfig cfg;
    cfg.kappa = *kappa_fixed;
    cfg.lambda = *lambda_fixed;
    cfg.link = link;
    cfg.tol = opt.tol;
    cfg.max_iter = opt.max_iter;
    result = fit(design, data.labels(), cfg);
  }

  const ResidualReport residuals = anscombe_residuals(result, data.labels(), opt.threshold);

  ModelFile model;
  model.tool_version = RFLR_VERSION;
  model.config = {{"input", opt.input},
                  {"kappa", opt.kappa},
                  {"lambda", opt.lambda},
                  {"basis_dim", K},
                  {"order", opt.order},
                  {"penalty_order", opt.penalty_order},
                  {"link", link.name()},
                  {"seed", opt.seed},
                  {"threshold", opt.threshold},
                  {"tol", opt.tol},
                  {"max_iter", opt.max_iter}};
  model.order = basis.order();
  model.penalty_order = opt.penalty_order;
  model.interior_knots = basis.interior_knots();
  model.grid = grid_spec;
  model.link = link;
  model.alpha = result.alpha;
  model.theta = result.theta;
  model.beta_on_grid = beta_on_grid(result.theta, basis, grid);
  model.kappa_hat = result.kappa;
  model.lambda_hat = result.lambda;
  model.edf = result.edf;
  model.aic = aic(data.labels(), result, result.kappa);
  model.objective = result.objective;
  model.converged = result.converged;
  model.iterations = result.iterations;
  model.grad_norm = result.grad_norm;
  model.grad_norm_init = result.grad_norm_init;
  model.cov = result.cov;
  model.ids = table.ids;
  model.probs = result.probs;
  model.residuals = residuals.residuals;
  for (const auto i : residuals.flagged) model.flagged_outliers.push_back(table.ids[static_cast<std::size_t>(i)]);
  model.warnings = result.warnings;
  model.selection = selection;
  write_json(opt.out, to_json(model));

  if (opt.beta_out) {
    const Eigen::MatrixXd theta_grid = eval_basis(basis, grid);
    const Eigen::MatrixXd cov = result.slope_covariance();
    std::ostringstream os;
    os << "t,beta,se,lower,upper\n" << std::setprecision(17);
    for (Eigen::Index j = 0; j < grid.size(); ++j) {
      const double b = model.beta_on_grid[j];
      double se = std::numeric_limits<double>::quiet_NaN();
      if (cov.size() > 0) se = std::sqrt(std::max(0.0, theta_grid.row(j).dot(cov * theta_grid.row(j).transpose())));
      os << grid.points()[j] << ',' << b << ',' << se << ',' << b - 2.0 * se << ',' << b + 2.0 * se << '\n';
    }
    write_text(opt.beta_out, os.str(), out);
  }

  for (const auto& w : result.warnings) err << "warning: " << w << '\n';
  out << "kappa_hat=" << result.kappa << " lambda_hat=" << result.lambda << " edf=" << result.edf
      << " converged=" << (result.converged ? "true" : "false") << " flagged=" << residuals.flagged.size() << '\n';

  if (result.cov.size() == 0) {
    err << "error: singular design; covariance unavailable\n";
    return kExitSingular;
  }
  if (!result.converged) {
    err << "error: Fisher scoring did not converge; report written to " << opt.out << '\n';
    return kExitNotConverged;
  }
  return kExitOk;
}

namespace {

struct Scored {
  CurveTable table;
  Eigen::VectorXd probs;
};

Scored score(const std::string& model_path, const std::string& input, const std::optional<std::string>& grid_flag,
             bool require_labels) {
  const ModelFile model = read_model(model_path);
  CurveTable table = read_curve_csv(input, require_labels);
  const Grid grid = model_grid_for(model, table, grid_flag);
  Eigen::VectorXd probs = predict(model.as_fit(), model.basis(), table.curves, grid);
  return {std::move(table), std::move(probs)};
}

}  // namespace

int cmd_predict(const PredictOptions& opt, std::ostream& out, std::ostream&) {
  const Scored s = score(opt.model, opt.input, opt.grid, false);
  std::ostringstream os;
  os << "id,prob\n" << std::setprecision(17);
  for (Eigen::Index i = 0; i < s.probs.size(); ++i) os << s.table.ids[static_cast<std::size_t>(i)] << ',' << s.probs[i] << '\n';
  write_text(opt.out, os.str(), out);
  return kExitOk;
}

int cmd_diagnose(const DiagnoseOptions& opt, std::ostream& out, std::ostream& err) {
  const Scored s = score(opt.model, opt.input, opt.grid, true);
  const ResidualReport r = anscombe_residuals(*s.table.labels, s.probs, opt.threshold);
  if (r.clamped > 0) err << "warning: " << r.clamped << " fitted probabilities clamped away from {0,1}\n";
  std::vector<bool> flag(static_cast<std::size_t>(s.probs.size()), false);
  for (const auto i : r.flagged) flag[static_cast<std::size_t>(i)] = true;
  std::ostringstream os;
  os << "id,anscombe_residual,flagged\n" << std::setprecision(17);
  for (Eigen::Index i = 0; i < s.probs.size(); ++i)
    os << s.table.ids[static_cast<std::size_t>(i)] << ',' << r.residuals[i] << ',' << (flag[static_cast<std::size_t>(i)] ? 1 : 0)
       << '\n';
  write_text(opt.out, os.str(), out);
  return kExitOk;
}

int cmd_simulate(const SimulateOptions& opt, std::ostream& out, std::ostream& err) {
  StudyConfig cfg;
  cfg.beta_index = opt.beta;
  cfg.epsilon = opt.eps;
  cfg.n = opt.n;
  cfg.replications = opt.reps;
  cfg.seed = opt.seed;
  cfg.grid_size = opt.grid_size;
  cfg.bootstrap_resamples = opt.bootstrap;
  cfg.basis_dim = opt.basis_dim;
  cfg.fresh_curves = opt.fresh_curves;
  cfg.workers = opt.workers;
  cfg.estimators.clear();
  std::istringstream list(opt.estimators);
  std::string name;
  while (std::getline(list, name, ',')) {
    if (name.empty()) continue;
    try {
      const Estimator e = parse_estimator(name);
      if (std::find(cfg.estimators.begin(), cfg.estimators.end(), e) == cfg.estimators.end()) cfg.estimators.push_back(e);
    } catch (const std::exception&) {
      throw CliError(kExitMalformed, "unknown estimator '" + name + "'");
    }
  }
  if (cfg.estimators.empty()) throw CliError(kExitMalformed, "--estimators is empty");
  try {
    cfg.validate();
  } catch (const std::exception& e) {
    throw CliError(kExitMalformed, e.what());
  }

  const StudyReport report = run_study(cfg);

  // Worker count is deliberately absent so reports are schedule independent.
  json estimators = json::array();
  for (const auto& s : report.estimators) {
    json e = {{"name", estimator_name(s.estimator)},
              {"median_mse", s.median_mse},
              {"bootstrap_se", s.bootstrap_se},
              {"mse", s.mse},
              {"kappa", s.kappa},
              {"lambda", s.lambda}};
    if (!s.prediction_error.empty()) {
      e["prediction_error"] = s.prediction_error;
      e["median_prediction_error"] = s.median_prediction_error;
    }
    estimators.push_back(e);
  }
  json estimator_names = json::array();
  for (const auto e : cfg.estimators) estimator_names.push_back(estimator_name(e));
  const json doc = {{"schema", kStudySchema},
                    {"tool_version", RFLR_VERSION},
                    {"config",
                     {{"beta_index", cfg.beta_index},
                      {"epsilon", cfg.epsilon},
                      {"n", cfg.n},
                      {"replications", cfg.replications},
                      {"grid_size", cfg.grid_size},
                      {"estimators", estimator_names},
                      {"seed", cfg.seed},
                      {"bootstrap_resamples", cfg.bootstrap_resamples},
                      {"basis_dim", cfg.basis_dim},
                      {"fresh_curves", cfg.fresh_curves}}},
                    {"estimators", estimators},
                    {"kappa_hat", report.kappa_hat},
                    {"failures", report.failures},
                    {"failure_messages", report.failure_messages},
                    {"fits", report.fits},
                    {"converged_fits", report.converged_fits},
                    {"stationarity_violations", report.stationarity_violations}};

  if (opt.out) {
    std::filesystem::create_directories(*opt.out);
    const std::filesystem::path dir(*opt.out);
    write_json((dir / "report.json").string(), doc);
    std::ostringstream csv;
    csv << "replicate,estimator,epsilon,beta_index,mse,kappa_hat,lambda_hat\n" << std::setprecision(17);
    for (int r = 0; r < cfg.replications; ++r)
      for (const auto& s : report.estimators) {
        const auto i = static_cast<std::size_t>(r);
        csv << r << ',' << estimator_name(s.estimator) << ',' << cfg.epsilon << ',' << cfg.beta_index << ',' << s.mse[i]
            << ',' << s.kappa[i] << ',' << s.lambda[i] << '\n';
      }
    write_text((dir / "replicates.csv").string(), csv.str(), out);
  }

  const Estimator order[] = {Estimator::dpd_adaptive, Estimator::ml, Estimator::dpd1, Estimator::dpd2};
  out << std::left << std::setw(6) << "beta" << std::setw(7) << "eps";
  for (const auto e : order) out << std::setw(18) << estimator_name(e);
  out << '\n' << std::setw(6) << ("b" + std::to_string(cfg.beta_index));
  {
    std::ostringstream eps;
    eps << std::fixed << std::setprecision(2) << cfg.epsilon;
    out << std::setw(7) << eps.str();
  }
  for (const auto e : order) out << std::setw(18) << format_cell(report.find(e));
  out << std::right << '\n';
  if (report.failures > 0) err << "warning: " << report.failures << " replicate fits failed\n";
  return kExitOk;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Robust functional logistic regression via penalized density power divergence", "rflr"};
  app.require_subcommand(1);
  app.set_version_flag("--version", RFLR_VERSION);

  FitOptions fo;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a model to a wide curve CSV (id,y,t_1..t_m)");
  fit_cmd->add_option("input", fo.input, "Input CSV")->required();
  fit_cmd->add_option("--out,-o", fo.out, "Model report JSON")->capture_default_str();
  fit_cmd->add_option("--kappa", fo.kappa, "Tuning parameter: number or 'adaptive'")->capture_default_str();
  fit_cmd->add_option("--lambda", fo.lambda, "Penalty weight (sum form): number or 'aic'")->capture_default_str();
  fit_cmd->add_option("--basis-dim", fo.basis_dim, "B-spline dimension (0: floor(min(30, n/4)))");
  fit_cmd->add_option("--order", fo.order, "B-spline order")->capture_default_str();
  fit_cmd->add_option("--penalty-order", fo.penalty_order, "Derivative order of the roughness penalty")->capture_default_str();
  fit_cmd->add_option("--link", fo.link, "logit, probit or cloglog")->capture_default_str();
  fit_cmd->add_option("--grid", fo.grid, "Grid sidecar file or comma-separated points");
  fit_cmd->add_option("--seed", fo.seed, "Seed for randomized steps")->capture_default_str();
  fit_cmd->add_option("--threshold", fo.threshold, "Anscombe residual outlier threshold")->capture_default_str();
  fit_cmd->add_option("--tol", fo.tol, "Convergence tolerance on the coefficient change")->capture_default_str();
  fit_cmd->add_option("--max-iter", fo.max_iter, "Fisher scoring iteration limit")->capture_default_str();
  fit_cmd->add_option("--beta-out", fo.beta_out, "CSV of the slope estimate with +-2 SE bands");

  PredictOptions po;
  auto* predict_cmd = app.add_subcommand("predict", "Predict success probabilities for new curves");
  predict_cmd->add_option("model", po.model, "Model report JSON")->required();
  predict_cmd->add_option("input", po.input, "Curve CSV (id[,y],t_1..t_m)")->required();
  predict_cmd->add_option("--out,-o", po.out, "Output CSV (default stdout)");
  predict_cmd->add_option("--grid", po.grid, "Grid sidecar file or comma-separated points");

  DiagnoseOptions dopt;
  auto* diagnose_cmd = app.add_subcommand("diagnose", "Anscombe residuals and outlier flags");
  diagnose_cmd->add_option("model", dopt.model, "Model report JSON")->required();
  diagnose_cmd->add_option("input", dopt.input, "Curve CSV with labels")->required();
  diagnose_cmd->add_option("--out,-o", dopt.out, "Output CSV (default stdout)");
  diagnose_cmd->add_option("--grid", dopt.grid, "Grid sidecar file or comma-separated points");
  diagnose_cmd->add_option("--threshold", dopt.threshold, "Flag |r_A| >= threshold")->capture_default_str();

  SimulateOptions so;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo study over the Karhunen-Loeve design");
  sim_cmd->add_option("--beta", so.beta, "Coefficient function 1, 2 or 3")->capture_default_str();
  sim_cmd->add_option("--eps", so.eps, "Contamination fraction")->capture_default_str();
  sim_cmd->add_option("--n", so.n, "Sample size")->capture_default_str();
  sim_cmd->add_option("--reps", so.reps, "Replications")->capture_default_str();
  sim_cmd->add_option("--estimators", so.estimators, "Comma list of ML, DPD, DPD1, DPD2")->capture_default_str();
  sim_cmd->add_option("--seed", so.seed, "Master seed")->capture_default_str();
  sim_cmd->add_option("--out,-o", so.out, "Output directory");
  sim_cmd->add_option("--workers", so.workers, "Worker threads (0: RFLR_WORKERS or hardware)")->capture_default_str();
  sim_cmd->add_option("--grid-size", so.grid_size, "Points per curve")->capture_default_str();
  sim_cmd->add_option("--bootstrap", so.bootstrap, "Bootstrap resamples for the median SE")->capture_default_str();
  sim_cmd->add_option("--basis-dim", so.basis_dim, "B-spline dimension (0: default)");
  sim_cmd->add_option("--fresh-curves", so.fresh_curves, "Fresh curves per replicate for prediction error");

  std::vector<std::string> reversed(args.size() > 0 ? args.begin() + 1 : args.begin(), args.end());
  std::reverse(reversed.begin(), reversed.end());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << RFLR_VERSION << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitMalformed;
  }

  try {
    if (*fit_cmd) return cmd_fit(fo, out, err);
    if (*predict_cmd) return cmd_predict(po, out, err);
    if (*diagnose_cmd) return cmd_diagnose(dopt, out, err);
    if (*sim_cmd) return cmd_simulate(so, out, err);
  } catch (const CliError& e) {
    err << "error: " << e.what() << '\n';
    return e.code();
  } catch (const SingularMatrix& e) {
    err << "error: " << e.what() << '\n';
    return kExitSingular;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitMalformed;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitNotConverged;
  } catch (const std::runtime_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitNotConverged;
  }
  return kExitMalformed;
}

}  // namespace rflr::cli
