// SPDX-License-Identifier: Apache-2.0

#ifndef RICHLAB_UNROLL_HPP
#define RICHLAB_UNROLL_HPP

#include <span>
#include <vector>

#include "richlab/preconditioner.hpp"
#include "richlab/schedule.hpp"
#include "richlab/sine_transform.hpp"
#include "richlab/sparse_matrix.hpp"

namespace richlab
{

struct UnrollStep
{
  enum class Kind
  {
    Inner,          // one Richardson update with schedule slot `slot`
    Correction,     // u += S (lambda~ * S (f - A u))
    ResetVelocity,  // v = 0
  };
  Kind kind = Kind::Inner;
  int slot = 0;
};

// K outer sweeps of m inner updates each, velocity carried throughout.
std::vector<UnrollStep> richardson_program(int outer_sweeps, int m);
// K hybrid steps: velocity reset, `smoothing` inner updates cycling slots i mod m, correction.
std::vector<UnrollStep> hybrid_program(int steps, int smoothing, int m);

struct UnrollGradient
{
  double loss = 1.0;
  std::vector<double> d_omega, d_alpha, d_alpha_tilde;
  std::vector<double> d_lambda;
};

//
// A fixed program of updates started from u = v = 0, with loss ||f - A u_K|| / ||f||. Forward
// keeps the trajectory so that Backward can run the exact adjoint of every step:
//   inner:       g = v' + u';  d_omega += Re<z, g>;  d_alpha += Re<v, g>;
//                u~' = -A^H B^-H (omega g);  u = u' + u~';  v = alpha g + alpha_tilde u~'
//   correction:  c = S u';  d_lambda += c * S r;  u = u' - A^T S (lambda~ * c)
//   reset:       v = 0
// The inner update calls the same routine as the stationary solver.
//
template <Field T>
class UnrolledIteration
{
public:
  UnrolledIteration(const SparseMatrix<T> &A, std::span<const T> f, const Preconditioner<T> &P,
                    std::vector<UnrollStep> program, const SineTransform2D *transform = nullptr);

  double Forward(const WeightSchedule &schedule, std::span<const double> lambda_tilde = {});
  const std::vector<T> &Solution() const { return u; }
  double Loss() const { return loss; }
  // Requires a preceding Forward.
  UnrollGradient Backward() const;

private:
  void Correct(std::vector<T> &x, std::span<const double> lambda) const;

  const SparseMatrix<T> &A;
  std::span<const T> f;
  const Preconditioner<T> &P;
  std::vector<UnrollStep> program;
  const SineTransform2D *transform;

  WeightSchedule schedule;
  std::vector<double> lambda;
  std::vector<std::vector<T>> u_hist, v_hist;  // state before each step
  std::vector<T> u, r_final;
  double fnorm = 0.0, loss = 1.0;
  bool ran = false;
};

// Relative residual after running `program` with a fixed schedule.
template <Field T>
double unrolled_loss(const SparseMatrix<T> &A, std::span<const T> f, const Preconditioner<T> &P,
                     const WeightSchedule &schedule, const std::vector<UnrollStep> &program,
                     std::span<const double> lambda_tilde = {},
                     const SineTransform2D *transform = nullptr);

}  // namespace richlab

#endif  // RICHLAB_UNROLL_HPP
