// SPDX-License-Identifier: Apache-2.0

#ifndef RICHLAB_SOLVE_REPORT_HPP
#define RICHLAB_SOLVE_REPORT_HPP

#include <string>
#include <vector>

namespace richlab
{

struct SolveReport
{
  // Outer iterations (sweeps, Krylov steps or hybrid steps depending on the solver).
  long iterations = 0;
  // Inner work units: Richardson updates for stationary solvers, smoothing steps for
  // hybrid solvers, Arnoldi steps for FGMRES.
  long inner_iterations = 0;
  bool converged = false;
  bool stagnated = false;
  double final_relative_residual = 1.0;
  double wall_ms = 0.0;
  // Relative residual after each outer iteration; trace[0] is the initial guess.
  std::vector<double> trace;
  std::string stop_reason;
};

template <typename Vec>
struct SolveResult
{
  Vec u;
  SolveReport report;
};

}  // namespace richlab

#endif  // RICHLAB_SOLVE_REPORT_HPP
