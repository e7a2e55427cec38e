// SPDX-License-Identifier: Apache-2.0

#ifndef RICHLAB_RICHARDSON_HPP
#define RICHLAB_RICHARDSON_HPP

#include <vector>

#include "richlab/preconditioner.hpp"
#include "richlab/schedule.hpp"
#include "richlab/solve_report.hpp"
#include "richlab/sparse_matrix.hpp"

namespace richlab
{

template <Field T>
struct IterationState
{
  std::vector<T> u;
  std::vector<T> v;  // velocity, zero at solve start and carried across sweeps
  long outer_count = 0;
  // Norm of the residual evaluated by each inner step (at the look-ahead point for Nag/NagEx).
  std::vector<double> inner_residual_norms;

  static IterationState Zero(std::size_t n)
  {
    return IterationState{std::vector<T>(n, T{}), std::vector<T>(n, T{}), 0, {}};
  }
};

// Scratch buffers reused across inner steps.
template <Field T>
struct SweepWorkspace
{
  std::vector<T> look_ahead, r, z;
  explicit SweepWorkspace(std::size_t n) : look_ahead(n), r(n), z(n) {}
};

// One update of the unified recurrence; returns ||f - A u~||.
//   u~ = u + alpha_tilde v;  r = f - A u~;  v = alpha v + omega B^-1 r;  u = u + v
template <Field T>
double inner_step(const SparseMatrix<T> &A, std::span<const T> f, std::vector<T> &u,
                  std::vector<T> &v, double omega, double alpha, double alpha_tilde,
                  const Preconditioner<T> &P, SweepWorkspace<T> &work);

// The m inner updates of one outer sweep, updating the state in place. Throws
// DivergenceError carrying the outer index if u or v stops being finite.
template <Field T>
void sweep_in_place(const SparseMatrix<T> &A, std::span<const T> f, IterationState<T> &state,
                    const WeightSchedule &schedule, const Preconditioner<T> &P,
                    SweepWorkspace<T> &work);

template <Field T>
IterationState<T> outer_sweep(const SparseMatrix<T> &A, const std::vector<T> &f,
                              IterationState<T> state, const WeightSchedule &schedule,
                              const Preconditioner<T> &P);

template <Field T>
std::vector<T> apply_preconditioner(const Preconditioner<T> &P, const std::vector<T> &r)
{
  return P.Apply(std::span<const T>(r));
}

struct StationaryOptions
{
  double tol = 1e-6;
  long max_outer = 100000;
  // Abort once the relative residual exceeds this multiple of its initial value.
  double divergence_factor = 1e12;
};

// Zero initial guess; stops when ||f - A u|| / ||f|| <= tol or after max_outer sweeps.
template <Field T>
SolveResult<std::vector<T>> solve_stationary(const SparseMatrix<T> &A, const std::vector<T> &f,
                                             const WeightSchedule &schedule,
                                             const Preconditioner<T> &P,
                                             const StationaryOptions &opts = {});

}  // namespace richlab

#endif  // RICHLAB_RICHARDSON_HPP
