#include "rflr/rflr.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace rflr;

FunctionalDataset make_data(int n, int m, std::uint64_t seed) {
  const Grid grid = make_uniform_grid(m);
  Rng rng = make_stream(seed, 0, 0);
  const Eigen::MatrixXd curves = generate_curves(n, grid, rng);
  const Eigen::VectorXi labels = generate_labels(curves, beta_true(1, grid), grid, Link{}, rng);
  return FunctionalDataset(curves, labels, grid);
}

void BM_EvalBasis(benchmark::State& state) {
  const BSplineBasis basis = make_basis(static_cast<int>(state.range(0)));
  const Grid grid = make_uniform_grid(200);
  for (auto _ : state) benchmark::DoNotOptimize(eval_basis(basis, grid));
}
BENCHMARK(BM_EvalBasis)->Arg(8)->Arg(30);

void BM_PenaltyMatrix(benchmark::State& state) {
  const BSplineBasis basis = make_basis(static_cast<int>(state.range(0)));
  const Grid grid = make_uniform_grid(200);
  for (auto _ : state) benchmark::DoNotOptimize(penalty_matrix(basis, grid, 2));
}
BENCHMARK(BM_PenaltyMatrix)->Arg(8)->Arg(30);

void BM_BuildDesign(benchmark::State& state) {
  const FunctionalDataset data = make_data(static_cast<int>(state.range(0)), 200, 1);
  const BSplineBasis basis = make_basis(default_dimension(data.size()));
  for (auto _ : state) benchmark::DoNotOptimize(build_design(data, basis));
}
BENCHMARK(BM_BuildDesign)->Arg(100)->Arg(400)->Unit(benchmark::kMicrosecond);

void BM_Fit(benchmark::State& state) {
  const FunctionalDataset data = make_data(400, 200, 2);
  const DesignMatrices design = build_design(data, make_basis(default_dimension(data.size())));
  FitConfig cfg;
  cfg.kappa = static_cast<double>(state.range(0)) / 10.0;
  cfg.lambda = 1.0;
  for (auto _ : state) benchmark::DoNotOptimize(fit(design, data.labels(), cfg));
}
BENCHMARK(BM_Fit)->Arg(0)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_SelectKappa(benchmark::State& state) {
  const FunctionalDataset data = make_data(200, 100, 3);
  const DesignMatrices design = build_design(data, make_basis(default_dimension(data.size())));
  for (auto _ : state) benchmark::DoNotOptimize(select_kappa(design, data.labels()));
}
BENCHMARK(BM_SelectKappa)->Unit(benchmark::kMillisecond)->Iterations(2);

}  // namespace

BENCHMARK_MAIN();
