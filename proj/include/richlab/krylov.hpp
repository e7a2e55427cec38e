// SPDX-License-Identifier: Apache-2.0

#ifndef RICHLAB_KRYLOV_HPP
#define RICHLAB_KRYLOV_HPP

#include <functional>
#include <utility>
#include <vector>

#include "richlab/solve_report.hpp"
#include "richlab/sparse_matrix.hpp"

namespace richlab
{

struct FgmresConfig
{
  int restart = 20;
  double tol = 1e-6;
  int max_outer = 50;  // restart cycles

  void Validate() const;
};

template <Field T>
using PrecondApply = std::function<std::vector<T>(const std::vector<T> &)>;

template <Field T>
struct FgmresResult
{
  std::vector<T> u;
  SolveReport report;
  // (recurrence residual, explicit ||f - A u||) at the end of each restart cycle.
  std::vector<std::pair<double, double>> restart_residuals;
};

//
// Right-preconditioned flexible GMRES(restart) from a zero initial guess. The preconditioned
// directions z_j = M_j(v_j) are stored, so M may change between applications. Arnoldi uses
// modified Gram-Schmidt; the small least-squares problem is solved with Givens rotations.
// report.iterations counts Arnoldi steps (preconditioner applications).
//
template <Field T>
FgmresResult<T> fgmres(const SparseMatrix<T> &A, const std::vector<T> &f,
                       const PrecondApply<T> &precond, const FgmresConfig &cfg = {});

// Identity preconditioner.
template <Field T>
PrecondApply<T> identity_precond()
{
  return [](const std::vector<T> &v) { return v; };
}

}  // namespace richlab

#endif  // RICHLAB_KRYLOV_HPP
