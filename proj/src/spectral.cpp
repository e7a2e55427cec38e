// SPDX-License-Identifier: Apache-2.0

#include "richlab/spectral.hpp"

#include <cmath>
#include <random>

#include <Eigen/Dense>

namespace richlab
{

std::string to_string(SpectralMethod method)
{
  switch (method)
  {
    case SpectralMethod::Power:
      return "power";
    case SpectralMethod::ShiftedPower:
      return "shifted-power";
    case SpectralMethod::DenseOracle:
      return "dense-oracle";
  }
  return "unknown";
}

namespace
{

// Dominant eigenvalue of a symmetric positive semidefinite operator given by `apply`.
template <typename Apply>
SpectralBounds power_iteration(std::size_t n, Apply &&apply, double tol, int max_iter,
                               std::uint64_t seed, const char *what)
{
  if (n == 0)
  {
    throw Error(std::string(what) + ": empty operator");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> x(n), y(n);
  for (auto &v : x)
  {
    v = normal(rng);
  }
  double nx = norm2(x);
  for (auto &v : x)
  {
    v /= nx;
  }

  SpectralBounds out;
  double prev = 0.0;
  for (int k = 1; k <= max_iter; k++)
  {
    apply(x, y);
    const double lambda = dot(x, y);
    out.history.push_back(lambda);
    out.iterations = k;
    if (k > 1)
    {
      out.residual_tolerance = std::abs(lambda - prev) / std::abs(lambda);
      if (out.residual_tolerance <= tol)
      {
        out.lambda_max = lambda;
        return out;
      }
    }
    prev = lambda;
    const double ny = norm2(y);
    if (ny == 0.0)
    {
      // x lies in the null space; the Rayleigh quotient is exact.
      out.lambda_max = lambda;
      out.residual_tolerance = 0.0;
      return out;
    }
    for (std::size_t i = 0; i < n; i++)
    {
      x[i] = y[i] / ny;
    }
  }
  throw ConvergenceError(std::string(what) + ": no convergence to " + std::to_string(tol) +
                             " after " + std::to_string(max_iter) + " iterations",
                         prev, max_iter);
}

void require_square(const SparseMatrix<double> &A, const char *what)
{
  if (!A.square())
  {
    throw DimensionError(std::string(what) + " needs a square matrix", A.rows(), A.cols());
  }
}

}  // namespace

SpectralBounds estimate_lambda_max(const SparseMatrix<double> &A, double tol, int max_iter,
                                   std::uint64_t seed)
{
  require_square(A, "estimate_lambda_max");
  auto apply = [&](const std::vector<double> &x, std::vector<double> &y)
  { A.Mult(std::span<const double>(x), std::span<double>(y)); };
  auto out = power_iteration(A.rows(), apply, tol, max_iter, seed, "estimate_lambda_max");
  out.method = SpectralMethod::Power;
  return out;
}

SpectralBounds estimate_lambda_min(const SparseMatrix<double> &A, double lambda_max,
                                   double tol, int max_iter, std::uint64_t seed)
{
  require_square(A, "estimate_lambda_min");
  if (!(lambda_max > 0.0))
  {
    throw Error("estimate_lambda_min: lambda_max must be positive");
  }
  const double sigma = 1.01 * lambda_max;
  auto apply = [&](const std::vector<double> &x, std::vector<double> &y)
  {
    A.Mult(std::span<const double>(x), std::span<double>(y));
    for (std::size_t i = 0; i < y.size(); i++)
    {
      y[i] = sigma * x[i] - y[i];
    }
  };
  try
  {
    auto out = power_iteration(A.rows(), apply, tol, max_iter, seed, "estimate_lambda_min");
    out.method = SpectralMethod::ShiftedPower;
    out.lambda_min = sigma - out.lambda_max;
    out.lambda_max = lambda_max;
    return out;
  }
  catch (const ConvergenceError &e)
  {
    throw ConvergenceError(e.what(), sigma - e.last_estimate, e.iterations);
  }
}

SpectralBounds dense_spectral_bounds(const SparseMatrix<double> &A)
{
  require_square(A, "dense_spectral_bounds");
  if (A.rows() > kMaxDenseSpectralDim)
  {
    throw DimensionError("dense_spectral_bounds dimension limit", kMaxDenseSpectralDim,
                         A.rows());
  }
  const auto n = static_cast<Eigen::Index>(A.rows());
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(n, n);
  const auto rs = A.RowStarts();
  const auto ci = A.ColIndices();
  const auto v = A.Values();
  for (std::size_t i = 0; i < A.rows(); i++)
  {
    for (std::size_t k = rs[i]; k < rs[i + 1]; k++)
    {
      dense(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(ci[k])) = v[k];
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
  {
    throw Error("dense_spectral_bounds: eigensolver failed");
  }
  SpectralBounds out;
  out.lambda_min = es.eigenvalues()(0);
  out.lambda_max = es.eigenvalues()(n - 1);
  out.method = SpectralMethod::DenseOracle;
  return out;
}

}  // namespace richlab
