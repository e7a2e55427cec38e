// SPDX-License-Identifier: Apache-2.0

#ifndef RICHLAB_SPECTRAL_HPP
#define RICHLAB_SPECTRAL_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "richlab/sparse_matrix.hpp"

namespace richlab
{

enum class SpectralMethod
{
  Power,
  ShiftedPower,
  DenseOracle
};

std::string to_string(SpectralMethod method);

struct SpectralBounds
{
  double lambda_max = 0.0;
  double lambda_min = 0.0;
  SpectralMethod method = SpectralMethod::Power;
  // Relative change between the last two estimates (0 for the dense oracle).
  double residual_tolerance = 0.0;
  int iterations = 0;
  // Per-step Rayleigh quotient of the operator the power iteration ran on.
  std::vector<double> history;
};

// Power iteration with Rayleigh-quotient estimates; stops once successive estimates agree to
// tol (relative). Fills lambda_max only. Throws ConvergenceError after max_iter steps.
SpectralBounds estimate_lambda_max(const SparseMatrix<double> &A, double tol, int max_iter,
                                   std::uint64_t seed);

// Power iteration on sigma I - A with sigma = 1.01 lambda_max; requires lambda_max to be an
// upper bound of the spectrum. Returns both bounds.
SpectralBounds estimate_lambda_min(const SparseMatrix<double> &A, double lambda_max,
                                   double tol, int max_iter, std::uint64_t seed);

// Extreme eigenvalues of a symmetric matrix from a dense symmetric eigensolver. Intended
// for systems up to a few thousand unknowns.
SpectralBounds dense_spectral_bounds(const SparseMatrix<double> &A);

// Largest dimension accepted by dense_spectral_bounds.
inline constexpr std::size_t kMaxDenseSpectralDim = 20000;

}  // namespace richlab

#endif  // RICHLAB_SPECTRAL_HPP
