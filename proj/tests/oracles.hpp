// SPDX-License-Identifier: Apache-2.0
// Dense reference helpers shared by the test binaries.

#ifndef RICHLAB_TESTS_ORACLES_HPP
#define RICHLAB_TESTS_ORACLES_HPP

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "richlab/sparse_matrix.hpp"

namespace oracle
{

using richlab::Complex;
using richlab::SparseMatrix;
using richlab::Triplet;

template <typename T>
using Dense = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

template <typename T>
Dense<T> to_dense(const SparseMatrix<T> &A)
{
  Dense<T> D = Dense<T>::Zero(A.rows(), A.cols());
  const auto rs = A.RowStarts();
  const auto ci = A.ColIndices();
  const auto va = A.Values();
  for (std::size_t i = 0; i < A.rows(); i++)
  {
    for (auto k = rs[i]; k < rs[i + 1]; k++)
    {
      D(i, ci[k]) = va[k];
    }
  }
  return D;
}

template <typename T>
SparseMatrix<T> from_dense(const Dense<T> &D)
{
  std::vector<Triplet<T>> t;
  for (Eigen::Index i = 0; i < D.rows(); i++)
  {
    for (Eigen::Index j = 0; j < D.cols(); j++)
    {
      if (D(i, j) != T{})
      {
        t.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), D(i, j)});
      }
    }
  }
  return SparseMatrix<T>::FromTriplets(D.rows(), D.cols(), t);
}

template <typename T>
Vec<T> to_eigen(const std::vector<T> &x)
{
  return Eigen::Map<const Vec<T>>(x.data(), static_cast<Eigen::Index>(x.size()));
}

template <typename T>
std::vector<T> from_eigen(const Vec<T> &x)
{
  return std::vector<T>(x.data(), x.data() + x.size());
}

template <typename T>
T draw(std::mt19937_64 &rng)
{
  std::normal_distribution<double> nd;
  if constexpr (std::is_same_v<T, Complex>)
  {
    const double re = nd(rng);
    return Complex(re, nd(rng));
  }
  else
  {
    return nd(rng);
  }
}

template <typename T>
std::vector<T> random_vector(std::size_t n, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::vector<T> x(n);
  for (auto &v : x)
  {
    v = draw<T>(rng);
  }
  return x;
}

inline Dense<double> random_spd_dense(int n, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  Dense<double> B(n, n);
  for (int i = 0; i < n; i++)
  {
    for (int j = 0; j < n; j++)
    {
      B(i, j) = draw<double>(rng);
    }
  }
  return B * B.transpose() / n + Dense<double>::Identity(n, n);
}

inline SparseMatrix<double> random_spd(int n, std::uint64_t seed)
{
  return from_dense<double>(random_spd_dense(n, seed));
}

template <typename T>
SparseMatrix<T> random_sparse(int rows, int cols, double density, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Dense<T> D = Dense<T>::Zero(rows, cols);
  for (int i = 0; i < rows; i++)
  {
    for (int j = 0; j < cols; j++)
    {
      if (u(rng) < density)
      {
        D(i, j) = draw<T>(rng);
      }
    }
  }
  return from_dense<T>(D);
}

inline SparseMatrix<double> tridiag(int n)
{
  std::vector<Triplet<double>> t;
  for (int i = 0; i < n; i++)
  {
    t.push_back({std::size_t(i), std::size_t(i), 2.0});
    if (i > 0)
    {
      t.push_back({std::size_t(i), std::size_t(i - 1), -1.0});
    }
    if (i + 1 < n)
    {
      t.push_back({std::size_t(i), std::size_t(i + 1), -1.0});
    }
  }
  return SparseMatrix<double>::FromTriplets(n, n, t);
}

template <typename T>
double rel_err(const std::vector<T> &a, const std::vector<T> &b)
{
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); i++)
  {
    num += std::norm(a[i] - b[i]);
    den += std::norm(b[i]);
  }
  return den == 0.0 ? std::sqrt(num) : std::sqrt(num / den);
}

// Dense eigenvalues of a symmetric matrix, ascending.
inline Vec<double> sym_eigenvalues(const SparseMatrix<double> &A)
{
  Eigen::SelfAdjointEigenSolver<Dense<double>> es(to_dense(A), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

}  // namespace oracle

#endif  // RICHLAB_TESTS_ORACLES_HPP
