#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rflr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitMalformed = 2;
inline constexpr int kExitNotConverged = 3;
inline constexpr int kExitSingular = 4;

class CliError : public std::runtime_error {
 public:
  CliError(int code, const std::string& what) : std::runtime_error(what), code_(code) {}
  int code() const noexcept { return code_; }

 private:
  int code_;
};

struct FitOptions {
  std::string input;
  std::string out = "model.json";
  std::string kappa = "adaptive";  ///< number or "adaptive"
  std::string lambda = "aic";      ///< number or "aic"
  int basis_dim = 0;               ///< 0: default from sample size
  int order = 4;
  int penalty_order = 2;
  std::string link = "logit";
  std::optional<std::string> grid;  ///< sidecar file or inline list
  std::uint64_t seed = 0;
  double threshold = 2.0;
  double tol = 1e-8;
  int max_iter = 100;
  std::optional<std::string> beta_out;  ///< grid, beta, se, lower, upper
};

struct PredictOptions {
  std::string model;
  std::string input;
  std::optional<std::string> out;  ///< stdout when absent
  std::optional<std::string> grid;
};

struct DiagnoseOptions {
  std::string model;
  std::string input;
  std::optional<std::string> out;
  std::optional<std::string> grid;
  double threshold = 2.0;
};

struct SimulateOptions {
  int beta = 1;
  double eps = 0.0;
  int n = 400;
  int reps = 100;
  std::string estimators = "DPD,ML,DPD1,DPD2";
  std::uint64_t seed = 1;
  std::optional<std::string> out;  ///< directory for report.json and replicates.csv
  int workers = 0;
  int grid_size = 200;
  int bootstrap = 2000;
  int basis_dim = 0;
  int fresh_curves = 0;
};

int cmd_fit(const FitOptions& opt, std::ostream& out, std::ostream& err);
int cmd_predict(const PredictOptions& opt, std::ostream& out, std::ostream& err);
int cmd_diagnose(const DiagnoseOptions& opt, std::ostream& out, std::ostream& err);
int cmd_simulate(const SimulateOptions& opt, std::ostream& out, std::ostream& err);

/// Parses arguments (argv[0] is the program name), dispatches, and maps errors to exit codes.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rflr::cli
