// SPDX-License-Identifier: Apache-2.0

#ifndef RICHLAB_MULTILEVEL_HPP
#define RICHLAB_MULTILEVEL_HPP

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "richlab/preconditioner.hpp"
#include "richlab/schedule.hpp"
#include "richlab/solve_report.hpp"
#include "richlab/sparse_matrix.hpp"

namespace richlab
{

// Full-weighting restriction from n to n/2 cells per side, stencil (1/16)[1 2 1; 2 4 2; 1 2 1].
// Throws ConfigError for odd n or n < 4.
SparseMatrix<double> restriction_matrix(int n);
// Bilinear interpolation from n/2 to n cells per side; equals 4 R^T.
SparseMatrix<double> prolongation_matrix(int n);

template <Field T>
std::vector<T> restrict_vector(std::span<const T> fine, int n);
template <Field T>
std::vector<T> prolong_vector(std::span<const T> coarse, int n);

template <Field T>
SparseMatrix<T> galerkin_coarse(const SparseMatrix<T> &A, const SparseMatrix<T> &R,
                                const SparseMatrix<T> &P);

template <Field T>
struct Level
{
  int n = 0;  // cells per side
  SparseMatrix<T> A;
  SparseMatrix<T> R, P;  // to and from level + 1; empty on the coarsest level
  WeightSchedule schedule;
  std::shared_ptr<const Preconditioner<T>> smoother;
};

template <Field T>
class DenseSolver;

struct HierarchyOptions
{
  int coarsest_n = 8;
  PreconditionerSpec smoother{};
};

// Schedule for level l given its operator.
template <Field T>
using ScheduleForLevel = std::function<WeightSchedule(int level, const SparseMatrix<T> &A)>;

//
// Geometric hierarchy with Galerkin coarse operators, coarsening by 2 until n reaches
// coarsest_n, and a dense factorization on the coarsest level.
//
template <Field T>
class Hierarchy
{
public:
  Hierarchy(const SparseMatrix<T> &A, int n, const ScheduleForLevel<T> &schedule_for_level,
            const HierarchyOptions &opts = {});

  std::size_t Depth() const { return levels.size(); }
  const Level<T> &At(std::size_t l) const { return levels[l]; }
  std::vector<T> SolveCoarsest(std::span<const T> f) const;

private:
  std::vector<Level<T>> levels;
  std::shared_ptr<const DenseSolver<T>> coarse;
};

// Fine schedule reused on every level with omega rescaled by the ratio of max absolute row
// sums, so that omega * lambda_max stays roughly level-independent.
template <Field T>
ScheduleForLevel<T> rescaled_schedule(const WeightSchedule &fine, const SparseMatrix<T> &fine_A);

// One V-cycle starting from u: `pre` and `post` smoothing sweeps of each level's schedule,
// with the velocity reset at the start of every smoothing phase.
template <Field T>
std::vector<T> v_cycle(const Hierarchy<T> &h, std::span<const T> f, std::span<const T> u, int pre,
                       int post);

}  // namespace richlab

#endif  // RICHLAB_MULTILEVEL_HPP
