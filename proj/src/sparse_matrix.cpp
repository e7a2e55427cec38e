// SPDX-License-Identifier: Apache-2.0

#include "richlab/sparse_matrix.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace richlab
{

template <Field T>
SparseMatrix<T>::SparseMatrix(std::size_t nrows, std::size_t ncols,
                              std::vector<std::size_t> row_starts,
                              std::vector<std::size_t> col_indices, std::vector<T> values)
  : nrows(nrows), ncols(ncols), row_starts(std::move(row_starts)),
    col_indices(std::move(col_indices)), values(std::move(values))
{
  if (this->row_starts.size() != nrows + 1)
  {
    throw DimensionError("SparseMatrix row_starts", nrows + 1, this->row_starts.size());
  }
  if (this->col_indices.size() != this->values.size())
  {
    throw DimensionError("SparseMatrix col_indices", this->values.size(),
                         this->col_indices.size());
  }
  if (this->row_starts.front() != 0 || this->row_starts.back() != this->values.size())
  {
    throw Error("SparseMatrix: row_starts must begin at 0 and end at nnz");
  }
  for (std::size_t i = 0; i < nrows; i++)
  {
    if (this->row_starts[i] > this->row_starts[i + 1])
    {
      throw Error("SparseMatrix: row_starts decreases at row " + std::to_string(i));
    }
    for (std::size_t k = this->row_starts[i]; k < this->row_starts[i + 1]; k++)
    {
      if (this->col_indices[k] >= ncols)
      {
        throw Error("SparseMatrix: column index out of range in row " + std::to_string(i));
      }
      if (k > this->row_starts[i] && this->col_indices[k] <= this->col_indices[k - 1])
      {
        throw Error("SparseMatrix: column indices not strictly increasing in row " +
                    std::to_string(i));
      }
    }
  }
}

template <Field T>
SparseMatrix<T> SparseMatrix<T>::FromTriplets(std::size_t nrows, std::size_t ncols,
                                              std::vector<Triplet<T>> triplets)
{
  std::stable_sort(triplets.begin(), triplets.end(), [](const auto &a, const auto &b)
                   { return a.row != b.row ? a.row < b.row : a.col < b.col; });
  std::vector<std::size_t> starts(nrows + 1, 0), cols;
  std::vector<T> vals;
  cols.reserve(triplets.size());
  vals.reserve(triplets.size());
  std::size_t k = 0;
  while (k < triplets.size())
  {
    const auto row = triplets[k].row, col = triplets[k].col;
    if (row >= nrows || col >= ncols)
    {
      throw Error("SparseMatrix::FromTriplets: entry (" + std::to_string(row) + ", " +
                  std::to_string(col) + ") outside " + std::to_string(nrows) + "x" +
                  std::to_string(ncols));
    }
    T sum{};
    for (; k < triplets.size() && triplets[k].row == row && triplets[k].col == col; k++)
    {
      sum += triplets[k].value;
    }
    if (sum != T{})
    {
      cols.push_back(col);
      vals.push_back(sum);
      starts[row + 1]++;
    }
  }
  for (std::size_t i = 0; i < nrows; i++)
  {
    starts[i + 1] += starts[i];
  }
  return SparseMatrix(nrows, ncols, std::move(starts), std::move(cols), std::move(vals));
}

template <Field T>
SparseMatrix<T> SparseMatrix<T>::Identity(std::size_t n)
{
  std::vector<T> ones(n, T(1.0));
  return Diagonal(ones);
}

template <Field T>
SparseMatrix<T> SparseMatrix<T>::Diagonal(std::span<const T> diag)
{
  std::vector<Triplet<T>> t;
  t.reserve(diag.size());
  for (std::size_t i = 0; i < diag.size(); i++)
  {
    t.push_back({i, i, diag[i]});
  }
  return FromTriplets(diag.size(), diag.size(), std::move(t));
}

template <Field T>
T SparseMatrix<T>::Coeff(std::size_t i, std::size_t j) const
{
  const auto first = col_indices.begin() + row_starts[i];
  const auto last = col_indices.begin() + row_starts[i + 1];
  const auto it = std::lower_bound(first, last, j);
  return (it != last && *it == j) ? values[it - col_indices.begin()] : T{};
}

template <Field T>
std::vector<T> SparseMatrix<T>::DiagonalEntries() const
{
  std::vector<T> d(std::min(nrows, ncols));
  for (std::size_t i = 0; i < d.size(); i++)
  {
    d[i] = Coeff(i, i);
  }
  return d;
}

template <Field T>
void SparseMatrix<T>::Mult(std::span<const T> x, std::span<T> y) const
{
  if (x.size() != ncols)
  {
    throw DimensionError("spmv input (A is " + std::to_string(nrows) + "x" +
                             std::to_string(ncols) + ")",
                         ncols, x.size());
  }
  if (y.size() != nrows)
  {
    throw DimensionError("spmv output", nrows, y.size());
  }
  for (std::size_t i = 0; i < nrows; i++)
  {
    T s{};
    for (std::size_t k = row_starts[i]; k < row_starts[i + 1]; k++)
    {
      s += values[k] * x[col_indices[k]];
    }
    y[i] = s;
  }
}

template <Field T>
std::vector<T> SparseMatrix<T>::Mult(std::span<const T> x) const
{
  std::vector<T> y(nrows);
  Mult(x, y);
  return y;
}

template <Field T>
void SparseMatrix<T>::MultAdjoint(std::span<const T> x, std::span<T> y) const
{
  if (x.size() != nrows)
  {
    throw DimensionError("adjoint spmv input", nrows, x.size());
  }
  if (y.size() != ncols)
  {
    throw DimensionError("adjoint spmv output", ncols, y.size());
  }
  std::fill(y.begin(), y.end(), T{});
  for (std::size_t i = 0; i < nrows; i++)
  {
    for (std::size_t k = row_starts[i]; k < row_starts[i + 1]; k++)
    {
      y[col_indices[k]] += conj_if(values[k]) * x[i];
    }
  }
}

template <Field T>
SparseMatrix<T> SparseMatrix<T>::Transpose() const
{
  std::vector<std::size_t> starts(ncols + 1, 0), cols(nnz());
  std::vector<T> vals(nnz());
  for (auto c : col_indices)
  {
    starts[c + 1]++;
  }
  for (std::size_t j = 0; j < ncols; j++)
  {
    starts[j + 1] += starts[j];
  }
  std::vector<std::size_t> next(starts.begin(), starts.end() - 1);
  for (std::size_t i = 0; i < nrows; i++)
  {
    for (std::size_t k = row_starts[i]; k < row_starts[i + 1]; k++)
    {
      const auto dst = next[col_indices[k]]++;
      cols[dst] = i;
      vals[dst] = values[k];
    }
  }
  return SparseMatrix(ncols, nrows, std::move(starts), std::move(cols), std::move(vals));
}

template <Field T>
double SparseMatrix<T>::MaxAbsRowSum() const
{
  double best = 0.0;
  for (std::size_t i = 0; i < nrows; i++)
  {
    double s = 0.0;
    for (std::size_t k = row_starts[i]; k < row_starts[i + 1]; k++)
    {
      s += std::abs(values[k]);
    }
    best = std::max(best, s);
  }
  return best;
}

template <Field T>
void residual(const SparseMatrix<T> &A, std::span<const T> f, std::span<const T> u,
              std::span<T> r)
{
  A.Mult(u, r);
  for (std::size_t i = 0; i < r.size(); i++)
  {
    r[i] = f[i] - r[i];
  }
}

template <Field T>
SparseMatrix<T> multiply(const SparseMatrix<T> &A, const SparseMatrix<T> &B)
{
  if (A.cols() != B.rows())
  {
    throw DimensionError("sparse product inner dimension", A.cols(), B.rows());
  }
  const auto ars = A.RowStarts(), brs = B.RowStarts();
  const auto aci = A.ColIndices(), bci = B.ColIndices();
  const auto av = A.Values(), bv = B.Values();

  // Row-wise Gustavson product with a dense accumulator.
  std::vector<std::size_t> starts(A.rows() + 1, 0), cols;
  std::vector<T> vals, acc(B.cols(), T{});
  std::vector<char> used(B.cols(), 0);
  std::vector<std::size_t> pattern;
  for (std::size_t i = 0; i < A.rows(); i++)
  {
    pattern.clear();
    for (std::size_t ka = ars[i]; ka < ars[i + 1]; ka++)
    {
      const auto j = aci[ka];
      for (std::size_t kb = brs[j]; kb < brs[j + 1]; kb++)
      {
        const auto c = bci[kb];
        if (!used[c])
        {
          used[c] = 1;
          pattern.push_back(c);
        }
        acc[c] += av[ka] * bv[kb];
      }
    }
    std::sort(pattern.begin(), pattern.end());
    for (auto c : pattern)
    {
      if (acc[c] != T{})
      {
        cols.push_back(c);
        vals.push_back(acc[c]);
      }
      acc[c] = T{};
      used[c] = 0;
    }
    starts[i + 1] = cols.size();
  }
  return SparseMatrix<T>(A.rows(), B.cols(), std::move(starts), std::move(cols),
                         std::move(vals));
}

SparseMatrix<Complex> complexify(const SparseMatrix<double> &A)
{
  const auto rs = A.RowStarts();
  const auto ci = A.ColIndices();
  const auto v = A.Values();
  return SparseMatrix<Complex>(A.rows(), A.cols(),
                               std::vector<std::size_t>(rs.begin(), rs.end()),
                               std::vector<std::size_t>(ci.begin(), ci.end()),
                               std::vector<Complex>(v.begin(), v.end()));
}

namespace
{

// Shortest decimal form that parses back to the identical double.
std::string exact_decimal(double x)
{
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string &tok)
{
  double v = 0.0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
  {
    throw Error("Matrix Market: cannot parse value '" + tok + "'");
  }
  return v;
}

}  // namespace

template <Field T>
void write_matrix_market(std::ostream &os, const SparseMatrix<T> &A)
{
  constexpr bool cplx = is_complex<T>::value;
  os << "%%MatrixMarket matrix coordinate " << (cplx ? "complex" : "real") << " general\n";
  os << A.rows() << ' ' << A.cols() << ' ' << A.nnz() << '\n';
  const auto rs = A.RowStarts();
  const auto ci = A.ColIndices();
  const auto v = A.Values();
  for (std::size_t i = 0; i < A.rows(); i++)
  {
    for (std::size_t k = rs[i]; k < rs[i + 1]; k++)
    {
      os << i + 1 << ' ' << ci[k] + 1 << ' ';
      if constexpr (cplx)
      {
        os << exact_decimal(v[k].real()) << ' ' << exact_decimal(v[k].imag());
      }
      else
      {
        os << exact_decimal(v[k]);
      }
      os << '\n';
    }
  }
}

template <Field T>
SparseMatrix<T> read_matrix_market(std::istream &is)
{
  constexpr bool cplx = is_complex<T>::value;
  std::string line;
  if (!std::getline(is, line))
  {
    throw Error("Matrix Market: empty stream");
  }
  std::istringstream banner(line);
  std::string tag, object, format, field, symmetry;
  banner >> tag >> object >> format >> field >> symmetry;
  if (tag != "%%MatrixMarket" || object != "matrix" || format != "coordinate")
  {
    throw Error("Matrix Market: unsupported banner '" + line + "'");
  }
  if (symmetry != "general")
  {
    throw Error("Matrix Market: only 'general' symmetry is supported");
  }
  if (field != "real" && field != "complex")
  {
    throw Error("Matrix Market: unsupported field '" + field + "'");
  }
  if (field == "complex" && !cplx)
  {
    throw Error("Matrix Market: complex file cannot be read as a real matrix");
  }
  do
  {
    if (!std::getline(is, line))
    {
      throw Error("Matrix Market: missing size line");
    }
  } while (line.empty() || line[0] == '%');
  std::size_t nrows = 0, ncols = 0, nnz = 0;
  std::istringstream(line) >> nrows >> ncols >> nnz;
  std::vector<Triplet<T>> t;
  t.reserve(nnz);
  for (std::size_t k = 0; k < nnz; k++)
  {
    std::size_t i = 0, j = 0;
    std::string re, im;
    if (!(is >> i >> j >> re))
    {
      throw Error("Matrix Market: truncated entry list at entry " + std::to_string(k));
    }
    if (i == 0 || j == 0)
    {
      throw Error("Matrix Market: indices are 1-based");
    }
    T value{};
    if (field == "complex")
    {
      is >> im;
      if constexpr (cplx)
      {
        value = T(parse_double(re), parse_double(im));
      }
    }
    else
    {
      value = T(parse_double(re));
    }
    t.push_back({i - 1, j - 1, value});
  }
  return SparseMatrix<T>::FromTriplets(nrows, ncols, std::move(t));
}

template class SparseMatrix<double>;
template class SparseMatrix<Complex>;
template void residual(const SparseMatrix<double> &, std::span<const double>,
                       std::span<const double>, std::span<double>);
template void residual(const SparseMatrix<Complex> &, std::span<const Complex>,
                       std::span<const Complex>, std::span<Complex>);
template SparseMatrix<double> multiply(const SparseMatrix<double> &,
                                       const SparseMatrix<double> &);
template SparseMatrix<Complex> multiply(const SparseMatrix<Complex> &,
                                        const SparseMatrix<Complex> &);
template void write_matrix_market(std::ostream &, const SparseMatrix<double> &);
template void write_matrix_market(std::ostream &, const SparseMatrix<Complex> &);
template SparseMatrix<double> read_matrix_market(std::istream &);
template SparseMatrix<Complex> read_matrix_market(std::istream &);

}  // namespace richlab
