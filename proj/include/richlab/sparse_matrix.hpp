// SPDX-License-Identifier: Apache-2.0

#ifndef RICHLAB_SPARSE_MATRIX_HPP
#define RICHLAB_SPARSE_MATRIX_HPP

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "richlab/core.hpp"

namespace richlab
{

template <Field T>
struct Triplet
{
  std::size_t row, col;
  T value;
};

//
// Compressed-row sparse matrix. Immutable after construction; column indices are strictly
// increasing within each row and explicit zeros are never stored by the builders.
//
template <Field T>
class SparseMatrix
{
public:
  SparseMatrix() = default;

  // Takes ownership of already-compressed arrays; throws Error if the CSR invariants fail.
  SparseMatrix(std::size_t nrows, std::size_t ncols, std::vector<std::size_t> row_starts,
               std::vector<std::size_t> col_indices, std::vector<T> values);

  // Duplicate (row, col) entries are summed; entries summing to exactly zero are dropped.
  static SparseMatrix FromTriplets(std::size_t nrows, std::size_t ncols,
                                   std::vector<Triplet<T>> triplets);
  static SparseMatrix Identity(std::size_t n);
  static SparseMatrix Diagonal(std::span<const T> diag);

  std::size_t rows() const { return nrows; }
  std::size_t cols() const { return ncols; }
  std::size_t nnz() const { return values.size(); }
  bool square() const { return nrows == ncols; }

  std::span<const std::size_t> RowStarts() const { return row_starts; }
  std::span<const std::size_t> ColIndices() const { return col_indices; }
  std::span<const T> Values() const { return values; }

  // Entry lookup by binary search; zero when not stored.
  T Coeff(std::size_t i, std::size_t j) const;
  std::vector<T> DiagonalEntries() const;

  // y = A x. Output must not alias the input.
  void Mult(std::span<const T> x, std::span<T> y) const;
  std::vector<T> Mult(std::span<const T> x) const;

  // y = A^H x.
  void MultAdjoint(std::span<const T> x, std::span<T> y) const;

  SparseMatrix Transpose() const;

  // Sum of |a_ij| over the row; max over rows bounds the spectral radius.
  double MaxAbsRowSum() const;

private:
  std::size_t nrows = 0, ncols = 0;
  std::vector<std::size_t> row_starts{0};
  std::vector<std::size_t> col_indices;
  std::vector<T> values;
};

template <Field T>
std::vector<T> spmv(const SparseMatrix<T> &A, std::span<const T> x)
{
  return A.Mult(x);
}
template <Field T>
std::vector<T> spmv(const SparseMatrix<T> &A, const std::vector<T> &x)
{
  return A.Mult(std::span<const T>(x));
}

// r = f - A u.
template <Field T>
void residual(const SparseMatrix<T> &A, std::span<const T> f, std::span<const T> u,
              std::span<T> r);

// C = A B.
template <Field T>
SparseMatrix<T> multiply(const SparseMatrix<T> &A, const SparseMatrix<T> &B);

// Real matrix viewed over the complex field.
SparseMatrix<Complex> complexify(const SparseMatrix<double> &A);

// Matrix Market coordinate format, 1-based indices, "general" symmetry.
template <Field T>
void write_matrix_market(std::ostream &os, const SparseMatrix<T> &A);
template <Field T>
SparseMatrix<T> read_matrix_market(std::istream &is);

}  // namespace richlab

#endif  // RICHLAB_SPARSE_MATRIX_HPP
