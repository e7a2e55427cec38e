// SPDX-License-Identifier: Apache-2.0

#include "richlab/krylov.hpp"

#include <chrono>
#include <cmath>

namespace richlab
{

void FgmresConfig::Validate() const
{
  if (restart < 1)
  {
    throw ConfigError("fgmres: restart must be >= 1");
  }
  if (!(tol > 0.0))
  {
    throw ConfigError("fgmres: tol must be positive");
  }
  if (max_outer < 1)
  {
    throw ConfigError("fgmres: max_outer must be >= 1");
  }
}

namespace
{

// Rotation [c s; -conj(s) c] with real c that zeroes b in (a, b).
template <Field T>
void givens(const T &a, const T &b, double &c, T &s)
{
  const double na = std::abs(a), nb = std::abs(b);
  if (nb == 0.0)
  {
    c = 1.0;
    s = T{};
    return;
  }
  if (na == 0.0)
  {
    c = 0.0;
    s = conj_if(b) / nb;
    return;
  }
  const double nu = std::hypot(na, nb);
  c = na / nu;
  s = (a / na) * conj_if(b) / nu;
}

}  // namespace

template <Field T>
FgmresResult<T> fgmres(const SparseMatrix<T> &A, const std::vector<T> &f,
                       const PrecondApply<T> &precond, const FgmresConfig &cfg)
{
  cfg.Validate();
  if (!A.square() || f.size() != A.rows())
  {
    throw DimensionError("fgmres right-hand side", A.rows(), f.size());
  }
  const auto start = std::chrono::steady_clock::now();
  const auto n = A.rows();
  const auto k_max = static_cast<std::size_t>(cfg.restart);
  FgmresResult<T> out;
  auto &report = out.report;
  out.u.assign(n, T{});
  const double fnorm = norm2(f);
  if (fnorm == 0.0)
  {
    report.converged = true;
    report.final_relative_residual = 0.0;
    report.trace = {0.0};
    report.stop_reason = "zero right-hand side";
    return out;
  }

  std::vector<std::vector<T>> V(k_max + 1, std::vector<T>(n)), Z(k_max, std::vector<T>(n));
  std::vector<std::vector<T>> H(k_max + 1, std::vector<T>(k_max, T{}));  // H[i][j]
  std::vector<double> cs(k_max);
  std::vector<T> sn(k_max), g(k_max + 1), w(n), r(n);
  report.trace.push_back(1.0);
  report.stop_reason = "max_outer reached";
  double explicit_rel = 1.0;

  for (int cycle = 0; cycle < cfg.max_outer; cycle++)
  {
    residual<T>(A, f, out.u, r);
    const double beta = norm2(r);
    if (beta / fnorm <= cfg.tol)
    {
      report.converged = true;
      report.stop_reason = "relative residual below tol";
      break;
    }
    for (std::size_t i = 0; i < n; i++)
    {
      V[0][i] = r[i] / beta;
    }
    std::fill(g.begin(), g.end(), T{});
    g[0] = beta;
    for (auto &row : H)
    {
      std::fill(row.begin(), row.end(), T{});
    }

    std::size_t k = 0;
    double resid = beta;
    bool breakdown = false;
    for (std::size_t j = 0; j < k_max; j++)
    {
      Z[j] = precond(V[j]);
      if (Z[j].size() != n)
      {
        throw DimensionError("fgmres preconditioner output", n, Z[j].size());
      }
      A.Mult(Z[j], w);
      report.iterations++;
      for (std::size_t i = 0; i <= j; i++)
      {
        const T h = dot(V[i], w);
        H[i][j] = h;
        for (std::size_t t = 0; t < n; t++)
        {
          w[t] -= h * V[i][t];
        }
      }
      const double hnext = norm2(w);
      H[j + 1][j] = hnext;
      for (std::size_t i = 0; i < j; i++)
      {
        const T a = H[i][j], b = H[i + 1][j];
        H[i][j] = cs[i] * a + sn[i] * b;
        H[i + 1][j] = -conj_if(sn[i]) * a + cs[i] * b;
      }
      givens<T>(H[j][j], H[j + 1][j], cs[j], sn[j]);
      H[j][j] = cs[j] * H[j][j] + sn[j] * H[j + 1][j];
      H[j + 1][j] = T{};
      g[j + 1] = -conj_if(sn[j]) * g[j];
      g[j] = cs[j] * g[j];
      resid = std::abs(g[j + 1]);
      report.trace.push_back(resid / fnorm);
      k = j + 1;
      if (!std::isfinite(resid))
      {
        throw DivergenceError("fgmres produced a non-finite residual", report.iterations, resid);
      }
      if (hnext <= 1e-14 * beta)
      {
        breakdown = true;
        break;
      }
      for (std::size_t t = 0; t < n; t++)
      {
        V[j + 1][t] = w[t] / hnext;
      }
      if (resid / fnorm <= cfg.tol)
      {
        break;
      }
    }

    std::vector<T> y(k);
    for (std::size_t i = k; i-- > 0;)
    {
      T s = g[i];
      for (std::size_t t = i + 1; t < k; t++)
      {
        s -= H[i][t] * y[t];
      }
      y[i] = s / H[i][i];
    }
    for (std::size_t i = 0; i < k; i++)
    {
      for (std::size_t t = 0; t < n; t++)
      {
        out.u[t] += y[i] * Z[i][t];
      }
    }
    residual<T>(A, f, out.u, r);
    explicit_rel = norm2(r) / fnorm;
    out.restart_residuals.emplace_back(resid, explicit_rel * fnorm);
    if (breakdown)
    {
      report.converged = true;
      report.stop_reason = "happy breakdown";
      break;
    }
    if (resid / fnorm <= cfg.tol)
    {
      report.converged = true;
      report.stop_reason = "relative residual below tol";
      break;
    }
    if (!(resid < beta))
    {
      report.stagnated = true;
      report.stop_reason = "stagnation over a restart cycle";
      break;
    }
  }
  residual<T>(A, f, out.u, r);
  report.final_relative_residual = norm2(r) / fnorm;
  report.inner_iterations = report.iterations;
  report.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

template FgmresResult<double> fgmres(const SparseMatrix<double> &, const std::vector<double> &,
                                     const PrecondApply<double> &, const FgmresConfig &);
template FgmresResult<Complex> fgmres(const SparseMatrix<Complex> &, const std::vector<Complex> &,
                                      const PrecondApply<Complex> &, const FgmresConfig &);

}  // namespace richlab
