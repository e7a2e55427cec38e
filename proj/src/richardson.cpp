// SPDX-License-Identifier: Apache-2.0

#include "richlab/richardson.hpp"

#include <chrono>
#include <cmath>

namespace richlab
{

template <Field T>
double inner_step(const SparseMatrix<T> &A, std::span<const T> f, std::vector<T> &u,
                  std::vector<T> &v, double omega, double alpha, double alpha_tilde,
                  const Preconditioner<T> &P, SweepWorkspace<T> &work)
{
  const auto n = u.size();
  for (std::size_t i = 0; i < n; i++)
  {
    work.look_ahead[i] = u[i] + alpha_tilde * v[i];
  }
  residual<T>(A, f, work.look_ahead, work.r);
  const double rnorm = norm2(work.r);
  P.Apply(work.r, work.z);
  for (std::size_t i = 0; i < n; i++)
  {
    v[i] = alpha * v[i] + omega * work.z[i];
    u[i] += v[i];
  }
  return rnorm;
}

template <Field T>
void sweep_in_place(const SparseMatrix<T> &A, std::span<const T> f, IterationState<T> &state,
                    const WeightSchedule &schedule, const Preconditioner<T> &P,
                    SweepWorkspace<T> &work)
{
  if (f.size() != A.rows() || state.u.size() != A.cols() || state.v.size() != A.cols())
  {
    throw DimensionError("outer sweep state", A.rows(),
                         f.size() != A.rows() ? f.size() : state.u.size());
  }
  for (int i = 0; i < schedule.m(); i++)
  {
    const double rnorm = inner_step(A, f, state.u, state.v, schedule.omega[i],
                                    schedule.alpha[i], schedule.alpha_tilde[i], P, work);
    state.inner_residual_norms.push_back(rnorm);
  }
  state.outer_count++;
  if (!all_finite(state.u) || !all_finite(state.v))
  {
    throw DivergenceError("Richardson sweep produced a non-finite iterate", state.outer_count,
                          state.inner_residual_norms.back());
  }
}

template <Field T>
IterationState<T> outer_sweep(const SparseMatrix<T> &A, const std::vector<T> &f,
                              IterationState<T> state, const WeightSchedule &schedule,
                              const Preconditioner<T> &P)
{
  schedule.Validate();
  SweepWorkspace<T> work(A.rows());
  sweep_in_place<T>(A, f, state, schedule, P, work);
  return state;
}

template <Field T>
SolveResult<std::vector<T>> solve_stationary(const SparseMatrix<T> &A, const std::vector<T> &f,
                                             const WeightSchedule &schedule,
                                             const Preconditioner<T> &P,
                                             const StationaryOptions &opts)
{
  if (!(opts.tol > 0.0))
  {
    throw ConfigError("solve_stationary: tol must be positive");
  }
  if (f.size() != A.rows())
  {
    throw DimensionError("solve_stationary right-hand side", A.rows(), f.size());
  }
  schedule.Validate();
  const auto start = std::chrono::steady_clock::now();
  const auto n = A.rows();

  SolveResult<std::vector<T>> out;
  auto &report = out.report;
  auto state = IterationState<T>::Zero(n);
  const double fnorm = norm2(f);
  if (fnorm == 0.0)
  {
    out.u = std::move(state.u);
    report.converged = true;
    report.final_relative_residual = 0.0;
    report.trace = {0.0};
    report.stop_reason = "zero right-hand side";
    return out;
  }

  SweepWorkspace<T> work(n);
  std::vector<T> r(n);
  double rel = 1.0;
  report.trace.push_back(rel);
  report.stop_reason = "max_outer reached";
  while (state.outer_count < opts.max_outer)
  {
    sweep_in_place<T>(A, f, state, schedule, P, work);
    residual<T>(A, f, state.u, r);
    rel = norm2(r) / fnorm;
    report.trace.push_back(rel);
    if (!std::isfinite(rel) || rel > opts.divergence_factor * report.trace.front())
    {
      throw DivergenceError("solve_stationary diverged: relative residual " +
                                std::to_string(rel),
                            state.outer_count, rel);
    }
    if (rel <= opts.tol)
    {
      report.converged = true;
      report.stop_reason = "relative residual below tol";
      break;
    }
  }
  report.iterations = state.outer_count;
  report.inner_iterations = state.outer_count * schedule.m();
  report.final_relative_residual = rel;
  report.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
          .count();
  out.u = std::move(state.u);
  return out;
}

template double inner_step(const SparseMatrix<double> &, std::span<const double>,
                           std::vector<double> &, std::vector<double> &, double, double, double,
                           const Preconditioner<double> &, SweepWorkspace<double> &);
template double inner_step(const SparseMatrix<Complex> &, std::span<const Complex>,
                           std::vector<Complex> &, std::vector<Complex> &, double, double,
                           double, const Preconditioner<Complex> &, SweepWorkspace<Complex> &);
template void sweep_in_place(const SparseMatrix<double> &, std::span<const double>,
                             IterationState<double> &, const WeightSchedule &,
                             const Preconditioner<double> &, SweepWorkspace<double> &);
template void sweep_in_place(const SparseMatrix<Complex> &, std::span<const Complex>,
                             IterationState<Complex> &, const WeightSchedule &,
                             const Preconditioner<Complex> &, SweepWorkspace<Complex> &);
template IterationState<double> outer_sweep(const SparseMatrix<double> &,
                                            const std::vector<double> &, IterationState<double>,
                                            const WeightSchedule &,
                                            const Preconditioner<double> &);
template IterationState<Complex> outer_sweep(const SparseMatrix<Complex> &,
                                             const std::vector<Complex> &,
                                             IterationState<Complex>, const WeightSchedule &,
                                             const Preconditioner<Complex> &);
template SolveResult<std::vector<double>> solve_stationary(const SparseMatrix<double> &,
                                                           const std::vector<double> &,
                                                           const WeightSchedule &,
                                                           const Preconditioner<double> &,
                                                           const StationaryOptions &);
template SolveResult<std::vector<Complex>> solve_stationary(const SparseMatrix<Complex> &,
                                                            const std::vector<Complex> &,
                                                            const WeightSchedule &,
                                                            const Preconditioner<Complex> &,
                                                            const StationaryOptions &);

}  // namespace richlab
