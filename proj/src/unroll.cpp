// SPDX-License-Identifier: Apache-2.0

#include "richlab/unroll.hpp"

#include <cmath>

#include "richlab/richardson.hpp"

namespace richlab
{

std::vector<UnrollStep> richardson_program(int outer_sweeps, int m)
{
  if (outer_sweeps < 0 || m < 1)
  {
    throw ConfigError("richardson_program: need outer_sweeps >= 0 and m >= 1");
  }
  std::vector<UnrollStep> prog;
  for (int k = 0; k < outer_sweeps; k++)
  {
    for (int i = 0; i < m; i++)
    {
      prog.push_back({UnrollStep::Kind::Inner, i});
    }
  }
  return prog;
}

std::vector<UnrollStep> hybrid_program(int steps, int smoothing, int m)
{
  if (steps < 0 || smoothing < 0 || m < 1)
  {
    throw ConfigError("hybrid_program: need steps >= 0, smoothing >= 0 and m >= 1");
  }
  std::vector<UnrollStep> prog;
  for (int k = 0; k < steps; k++)
  {
    prog.push_back({UnrollStep::Kind::ResetVelocity, 0});
    for (int i = 0; i < smoothing; i++)
    {
      prog.push_back({UnrollStep::Kind::Inner, i % m});
    }
    prog.push_back({UnrollStep::Kind::Correction, 0});
  }
  return prog;
}

template <Field T>
UnrolledIteration<T>::UnrolledIteration(const SparseMatrix<T> &A_, std::span<const T> f_,
                                        const Preconditioner<T> &P_,
                                        std::vector<UnrollStep> program_,
                                        const SineTransform2D *transform_)
    : A(A_), f(f_), P(P_), program(std::move(program_)), transform(transform_)
{
  if (!A.square() || f.size() != A.rows())
  {
    throw DimensionError("unrolled iteration right-hand side", A.rows(), f.size());
  }
  for (const auto &s : program)
  {
    if (s.kind != UnrollStep::Kind::Correction)
    {
      continue;
    }
    if constexpr (is_complex_v<T>)
    {
      throw ConfigError("unrolled iteration: spectral correction requires a real problem");
    }
    if (transform == nullptr || transform->Size() != A.rows())
    {
      throw ConfigError("unrolled iteration: spectral correction needs a matching transform");
    }
  }
}

template <Field T>
void UnrolledIteration<T>::Correct(std::vector<T> &x, std::span<const double> lam) const
{
  if constexpr (!is_complex_v<T>)
  {
    std::vector<double> r(x.size());
    residual<double>(A, f, x, r);
    auto c = transform->Forward(r);
    for (std::size_t k = 0; k < c.size(); k++)
    {
      c[k] *= lam[k];
    }
    const auto e = transform->Forward(c);
    for (std::size_t k = 0; k < x.size(); k++)
    {
      x[k] += e[k];
    }
  }
}

template <Field T>
double UnrolledIteration<T>::Forward(const WeightSchedule &sched,
                                     std::span<const double> lambda_tilde)
{
  sched.Validate();
  for (const auto &s : program)
  {
    if (s.kind == UnrollStep::Kind::Inner && s.slot >= sched.m())
    {
      throw ConfigError("unrolled iteration: program slot beyond schedule length");
    }
    if (s.kind == UnrollStep::Kind::Correction && lambda_tilde.size() != A.rows())
    {
      throw DimensionError("spectral correction coefficients", A.rows(), lambda_tilde.size());
    }
  }
  schedule = sched;
  lambda.assign(lambda_tilde.begin(), lambda_tilde.end());
  const auto n = A.rows();
  u.assign(n, T{});
  std::vector<T> v(n, T{});
  u_hist.clear();
  v_hist.clear();
  u_hist.reserve(program.size());
  v_hist.reserve(program.size());
  SweepWorkspace<T> work(n);
  for (const auto &s : program)
  {
    u_hist.push_back(u);
    v_hist.push_back(v);
    switch (s.kind)
    {
    case UnrollStep::Kind::Inner:
      inner_step<T>(A, f, u, v, schedule.omega[s.slot], schedule.alpha[s.slot],
                    schedule.alpha_tilde[s.slot], P, work);
      break;
    case UnrollStep::Kind::Correction:
      Correct(u, lambda);
      break;
    case UnrollStep::Kind::ResetVelocity:
      std::fill(v.begin(), v.end(), T{});
      break;
    }
  }
  r_final.assign(n, T{});
  residual<T>(A, f, u, r_final);
  fnorm = norm2(f);
  loss = norm2(r_final) / fnorm;
  ran = true;
  return loss;
}

template <Field T>
UnrollGradient UnrolledIteration<T>::Backward() const
{
  if (!ran)
  {
    throw Error("unrolled iteration: Backward before Forward");
  }
  const auto n = A.rows();
  const int m = schedule.m();
  UnrollGradient g;
  g.loss = loss;
  g.d_omega.assign(m, 0.0);
  g.d_alpha.assign(m, 0.0);
  g.d_alpha_tilde.assign(m, 0.0);
  g.d_lambda.assign(lambda.size(), 0.0);

  std::vector<T> ub(n, T{}), vb(n, T{});
  const double rnorm = norm2(r_final);
  if (rnorm == 0.0 || !std::isfinite(loss))
  {
    return g;
  }
  {
    std::vector<T> scaled(n);
    for (std::size_t i = 0; i < n; i++)
    {
      scaled[i] = r_final[i] / (rnorm * fnorm);
    }
    A.MultAdjoint(scaled, ub);
    for (auto &x : ub)
    {
      x = -x;
    }
  }

  std::vector<T> look(n), r(n), z(n), gt(n), zb(n), rb(n), ut(n);
  for (std::size_t step = program.size(); step-- > 0;)
  {
    const auto &s = program[step];
    const auto &u0 = u_hist[step];
    const auto &v0 = v_hist[step];
    switch (s.kind)
    {
    case UnrollStep::Kind::Inner:
    {
      const double omega = schedule.omega[s.slot];
      const double alpha = schedule.alpha[s.slot];
      const double alpha_t = schedule.alpha_tilde[s.slot];
      for (std::size_t i = 0; i < n; i++)
      {
        look[i] = u0[i] + alpha_t * v0[i];
      }
      residual<T>(A, f, look, r);
      P.Apply(r, z);
      for (std::size_t i = 0; i < n; i++)
      {
        gt[i] = vb[i] + ub[i];
        zb[i] = omega * gt[i];
      }
      g.d_omega[s.slot] += real_dot(z, gt);
      g.d_alpha[s.slot] += real_dot(v0, gt);
      P.ApplyAdjoint(zb, rb);
      A.MultAdjoint(rb, ut);
      for (std::size_t i = 0; i < n; i++)
      {
        ut[i] = -ut[i];
      }
      g.d_alpha_tilde[s.slot] += real_dot(v0, ut);
      for (std::size_t i = 0; i < n; i++)
      {
        ub[i] += ut[i];
        vb[i] = alpha * gt[i] + alpha_t * ut[i];
      }
      break;
    }
    case UnrollStep::Kind::Correction:
    {
      if constexpr (!is_complex_v<T>)
      {
        residual<double>(A, f, u0, r);
        const auto rhat = transform->Forward(r);
        auto c = transform->Forward(ub);
        for (std::size_t k = 0; k < n; k++)
        {
          g.d_lambda[k] += c[k] * rhat[k];
          c[k] *= lambda[k];
        }
        const auto back = transform->Forward(c);
        A.MultAdjoint(back, ut);
        for (std::size_t i = 0; i < n; i++)
        {
          ub[i] -= ut[i];
        }
      }
      break;
    }
    case UnrollStep::Kind::ResetVelocity:
      std::fill(vb.begin(), vb.end(), T{});
      break;
    }
  }

  // Tie the gradient to the variant's free weights.
  switch (schedule.variant)
  {
  case Variant::Plain:
    std::fill(g.d_alpha.begin(), g.d_alpha.end(), 0.0);
    std::fill(g.d_alpha_tilde.begin(), g.d_alpha_tilde.end(), 0.0);
    break;
  case Variant::Mom:
    std::fill(g.d_alpha_tilde.begin(), g.d_alpha_tilde.end(), 0.0);
    break;
  case Variant::Nag:
    for (int i = 0; i < m; i++)
    {
      g.d_alpha[i] += g.d_alpha_tilde[i];
      g.d_alpha_tilde[i] = 0.0;
    }
    break;
  case Variant::NagEx:
    break;
  }
  return g;
}

template <Field T>
double unrolled_loss(const SparseMatrix<T> &A, std::span<const T> f, const Preconditioner<T> &P,
                     const WeightSchedule &schedule, const std::vector<UnrollStep> &program,
                     std::span<const double> lambda_tilde, const SineTransform2D *transform)
{
  UnrolledIteration<T> it(A, f, P, program, transform);
  return it.Forward(schedule, lambda_tilde);
}

template class UnrolledIteration<double>;
template class UnrolledIteration<Complex>;
template double unrolled_loss(const SparseMatrix<double> &, std::span<const double>,
                              const Preconditioner<double> &, const WeightSchedule &,
                              const std::vector<UnrollStep> &, std::span<const double>,
                              const SineTransform2D *);
template double unrolled_loss(const SparseMatrix<Complex> &, std::span<const Complex>,
                              const Preconditioner<Complex> &, const WeightSchedule &,
                              const std::vector<UnrollStep> &, std::span<const double>,
                              const SineTransform2D *);

}  // namespace richlab
