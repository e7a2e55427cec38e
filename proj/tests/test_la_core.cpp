// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "oracles.hpp"
#include "richlab/assembly.hpp"
#include "richlab/sine_transform.hpp"
#include "richlab/spectral.hpp"

using namespace richlab;

TEST_CASE("sparse matrix rejects malformed CSR arrays")
{
  CHECK_THROWS_AS(SparseMatrix<double>(2, 2, {0, 1}, {0}, {1.0}), Error);
  CHECK_THROWS_AS(SparseMatrix<double>(2, 2, {0, 2, 2}, {1, 0}, {1.0, 2.0}), Error);
  CHECK_THROWS_AS(SparseMatrix<double>(2, 2, {0, 1, 2}, {0, 2}, {1.0, 2.0}), Error);
  CHECK_NOTHROW(SparseMatrix<double>(2, 2, {0, 1, 2}, {0, 1}, {1.0, 2.0}));
}

TEST_CASE("triplet assembly sums duplicates and drops exact zeros")
{
  auto A = SparseMatrix<double>::FromTriplets(
      2, 2, {{0, 0, 1.0}, {0, 0, 2.0}, {1, 0, 1.0}, {1, 0, -1.0}, {1, 1, 4.0}});
  CHECK(A.nnz() == 2);
  CHECK(A.Coeff(0, 0) == 3.0);
  CHECK(A.Coeff(1, 0) == 0.0);
}

TEST_CASE("spmv examples")
{
  const auto I = SparseMatrix<double>::Identity(3);
  CHECK(spmv(I, std::vector<double>{1, 2, 3}) == std::vector<double>{1, 2, 3});
  const auto T = oracle::tridiag(3);
  CHECK(spmv(T, std::vector<double>{1, 1, 1}) == std::vector<double>{1, 0, 1});
}

TEST_CASE("spmv dimension mismatch names both sizes")
{
  const auto T = oracle::tridiag(3);
  try
  {
    (void)spmv(T, std::vector<double>{1, 1});
    FAIL("expected DimensionError");
  }
  catch (const DimensionError &e)
  {
    CHECK(e.expected == 3);
    CHECK(e.actual == 2);
  }
}

TEST_CASE_TEMPLATE("spmv matches the dense product", T, double, Complex)
{
  for (std::uint64_t seed = 0; seed < 20; seed++)
  {
    const auto A = oracle::random_sparse<T>(6, 6, 0.4, seed);
    const auto x = oracle::random_vector<T>(6, seed + 100);
    const auto y = spmv(A, x);
    const oracle::Vec<T> ref = oracle::to_dense(A) * oracle::to_eigen(x);
    CHECK(oracle::rel_err(y, oracle::from_eigen<T>(ref)) <= 1e-14);
  }
}

TEST_CASE("adjoint product and transpose agree with the dense oracle")
{
  const auto A = oracle::random_sparse<Complex>(5, 7, 0.5, 3);
  const auto x = oracle::random_vector<Complex>(5, 4);
  std::vector<Complex> y(7);
  A.MultAdjoint(x, y);
  const oracle::Vec<Complex> ref = oracle::to_dense(A).adjoint() * oracle::to_eigen(x);
  CHECK(oracle::rel_err(y, oracle::from_eigen<Complex>(ref)) <= 1e-14);
  CHECK((oracle::to_dense(A.Transpose()) - oracle::to_dense(A).transpose()).norm() == 0.0);
}

TEST_CASE("sparse product matches the dense product")
{
  const auto A = oracle::random_sparse<double>(6, 5, 0.5, 11);
  const auto B = oracle::random_sparse<double>(5, 7, 0.5, 12);
  const auto C = multiply(A, B);
  CHECK((oracle::to_dense(C) - oracle::to_dense(A) * oracle::to_dense(B)).norm() <= 1e-13);
}

TEST_CASE_TEMPLATE("Matrix Market round trip is bit exact", T, double, Complex)
{
  const auto A = oracle::random_sparse<T>(9, 9, 0.3, 5);
  std::stringstream ss;
  write_matrix_market(ss, A);
  const auto first = ss.str().substr(0, ss.str().find('\n'));
  CHECK(first == std::string("%%MatrixMarket matrix coordinate ") +
                     (std::is_same_v<T, double> ? "real" : "complex") + " general");
  const auto B = read_matrix_market<T>(ss);
  CHECK(B.rows() == A.rows());
  CHECK(std::vector<T>(B.Values().begin(), B.Values().end()) ==
        std::vector<T>(A.Values().begin(), A.Values().end()));
  CHECK(std::vector<std::size_t>(B.ColIndices().begin(), B.ColIndices().end()) ==
        std::vector<std::size_t>(A.ColIndices().begin(), A.ColIndices().end()));
}

TEST_CASE("lambda_max examples")
{
  const std::vector<double> d{1.0, 2.0, 3.0};
  const auto D = SparseMatrix<double>::Diagonal(d);
  CHECK(estimate_lambda_max(D, 1e-12, 10000, 1).lambda_max == doctest::Approx(3.0).epsilon(1e-10));
  const auto T = oracle::tridiag(4);
  CHECK(estimate_lambda_max(T, 1e-14, 10000, 1).lambda_max ==
        doctest::Approx(2.0 - 2.0 * std::cos(4.0 * std::numbers::pi / 5.0)).epsilon(1e-10));
}

TEST_CASE("lambda_max on an anisotropic FEM matrix agrees with the dense eigensolver")
{
  const auto A = assemble_anisotropic({0.1, std::numbers::pi / 6.0, 8});
  const auto ev = oracle::sym_eigenvalues(A);
  const auto b = estimate_lambda_max(A, 1e-12, 100000, 7);
  CHECK(std::abs(b.lambda_max - ev(ev.size() - 1)) / ev(ev.size() - 1) <= 1e-6);
  // Rayleigh quotients of an SPD operator never decrease along the power iteration.
  for (std::size_t k = 1; k < b.history.size(); k++)
  {
    CHECK(b.history[k] >= b.history[k - 1] * (1.0 - 1e-15));
  }
}

TEST_CASE("lambda_min examples")
{
  const std::vector<double> d{1.0, 2.0, 3.0};
  const auto D = SparseMatrix<double>::Diagonal(d);
  CHECK(estimate_lambda_min(D, 3.0, 1e-13, 100000, 1).lambda_min ==
        doctest::Approx(1.0).epsilon(1e-8));
  const auto T = oracle::tridiag(4);
  const double lmax = 2.0 - 2.0 * std::cos(4.0 * std::numbers::pi / 5.0);
  CHECK(estimate_lambda_min(T, lmax, 1e-14, 100000, 1).lambda_min ==
        doctest::Approx(2.0 - 2.0 * std::cos(std::numbers::pi / 5.0)).epsilon(1e-8));

  const auto A = assemble_anisotropic({1.0, 0.0, 8});
  const auto ev = oracle::sym_eigenvalues(A);
  const auto hi = estimate_lambda_max(A, 1e-12, 100000, 3);
  const auto lo = estimate_lambda_min(A, hi.lambda_max, 1e-12, 1000000, 3);
  CHECK(lo.method == SpectralMethod::ShiftedPower);
  CHECK(std::abs(lo.lambda_min - ev(0)) / ev(0) <= 1e-4);
}

TEST_CASE("power iteration reports non-convergence with the last estimate")
{
  const auto T = oracle::tridiag(50);
  try
  {
    (void)estimate_lambda_max(T, 1e-15, 3, 1);
    FAIL("expected ConvergenceError");
  }
  catch (const ConvergenceError &e)
  {
    CHECK(e.iterations == 3);
    CHECK(e.last_estimate > 0.0);
  }
}

TEST_CASE("dense spectral bounds")
{
  const auto A = assemble_anisotropic({0.01, 1.0, 8});
  const auto b = dense_spectral_bounds(A);
  const auto ev = oracle::sym_eigenvalues(A);
  CHECK(b.method == SpectralMethod::DenseOracle);
  CHECK(b.lambda_min == doctest::Approx(ev(0)).epsilon(1e-12));
  CHECK(b.lambda_max == doctest::Approx(ev(ev.size() - 1)).epsilon(1e-12));
  CHECK(b.lambda_max >= b.lambda_min);
  CHECK(b.lambda_min > 0.0);
}

namespace
{

std::vector<double> sine_mode(int N, int p, int q)
{
  const int m = N - 1;
  std::vector<double> s(m * m);
  for (int j = 1; j <= m; j++)
  {
    for (int i = 1; i <= m; i++)
    {
      s[(j - 1) * m + (i - 1)] =
          std::sin(p * std::numbers::pi * i / N) * std::sin(q * std::numbers::pi * j / N);
    }
  }
  return s;
}

}  // namespace

TEST_CASE("dst2 maps a single sine mode to one coefficient")
{
  const int N = 8, m = N - 1;
  for (int p = 1; p <= m; p += 2)
  {
    for (int q = 1; q <= m; q += 3)
    {
      auto s = sine_mode(N, p, q);
      const double nrm = norm2(s);
      for (auto &x : s)
      {
        x /= nrm;
      }
      const auto c = dst2(s);
      for (int k = 0; k < m * m; k++)
      {
        const double expect = k == (q - 1) * m + (p - 1) ? 1.0 : 0.0;
        CHECK(std::abs(std::abs(c[k]) - expect) <= 1e-12);
      }
    }
  }
}

TEST_CASE("dst2 is an involutive isometry")
{
  for (int N : {4, 8, 13})
  {
    const auto x = oracle::random_vector<double>((N - 1) * (N - 1), N);
    const auto c = dst2(x);
    CHECK(std::abs(norm2(c) - norm2(x)) / norm2(x) <= 1e-12);
    CHECK(oracle::rel_err(dst2_inv(c), x) <= 1e-12);
  }
  CHECK_THROWS_AS((void)dst2(std::vector<double>(10)), Error);
}

TEST_CASE("dst2 diagonalizes the isotropic FEM matrix")
{
  const int N = 8, m = N - 1;
  const auto A = assemble_anisotropic({1.0, 0.0, N});
  for (int p = 1; p <= m; p++)
  {
    for (int q = 1; q <= m; q++)
    {
      const auto c = dst2(A.Mult(sine_mode(N, p, q)));
      int nonzero = 0;
      for (double x : c)
      {
        nonzero += std::abs(x) > 1e-12;
      }
      CHECK(nonzero == 1);
    }
  }
}

TEST_CASE("assembled SPD matrices are positive on random vectors")
{
  for (double eps : {1.0, 1e-2, 1e-6})
  {
    for (double theta : {0.0, 0.7, 2.0})
    {
      const auto A = assemble_anisotropic({eps, theta, 12});
      for (std::uint64_t s = 0; s < 100; s++)
      {
        const auto x = oracle::random_vector<double>(A.rows(), s);
        CHECK(dot(x, A.Mult(x)) > 0.0);
      }
    }
  }
}
