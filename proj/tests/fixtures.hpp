#pragma once

#include "rflr/design.hpp"
#include "rflr/grid.hpp"
#include "rflr/link.hpp"
#include "rflr/simulation.hpp"

#include <cstdint>

namespace fixture {

/// Karhunen-Loeve curves with labels from a scaled coefficient function.
inline rflr::FunctionalDataset simulated(int n, int m, std::uint64_t seed, int beta_index = 1, double scale = 1.0,
                                         double epsilon = 0.0) {
  const rflr::Grid grid = rflr::make_uniform_grid(m);
  rflr::Rng rng = rflr::make_stream(seed, 7, 0);
  const Eigen::MatrixXd curves = rflr::generate_curves(n, grid, rng);
  const Eigen::VectorXd beta = scale * rflr::beta_true(beta_index, grid);
  const Eigen::VectorXi labels = rflr::generate_labels(curves, beta, grid, rflr::Link{}, rng);
  rflr::FunctionalDataset data(curves, labels, grid);
  if (epsilon > 0.0) return rflr::contaminate(data, epsilon, rng);
  return data;
}

}  // namespace fixture
