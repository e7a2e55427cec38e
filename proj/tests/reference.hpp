// SPDX-License-Identifier: Apache-2.0
// Dense re-derivations of iterator, network, multigrid and sine-basis quantities. Shared by
// the unit tests and the acceptance binary.

#ifndef RICHLAB_TESTS_REFERENCE_HPP
#define RICHLAB_TESTS_REFERENCE_HPP

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "oracles.hpp"
#include "richlab/dataset.hpp"
#include "richlab/meta_net.hpp"
#include "richlab/multilevel.hpp"

namespace oracle
{

// T_m = prod (I - omega_i A) applied right to left; g = (I - T_m) A^-1 f.
inline Dense<double> explicit_operator(const Dense<double> &A, const std::vector<double> &omega)
{
  const auto n = A.rows();
  Dense<double> T = Dense<double>::Identity(n, n);
  for (double w : omega)
  {
    T = (Dense<double>::Identity(n, n) - w * A) * T;
  }
  return T;
}

// Extended-precision re-derivation of the network and the Nag recurrence (softplus omega,
// sigmoid alpha), used as the central-difference oracle so that cancellation in
// (L(p+h) - L(p-h)) stays far below the gradient entries being checked.
inline long double oracle_loss(const richlab::MetaNet &net, const std::vector<long double> &p,
                               const richlab::Instance<double> &in, int K)
{
  const auto widths = net.Widths();
  const auto &cfg = net.Config();
  std::vector<long double> x(in.mu.size());
  for (std::size_t k = 0; k < x.size(); k++)
  {
    x[k] = 2.0L * (in.mu[k] - cfg.input_lo[k]) / (cfg.input_hi[k] - cfg.input_lo[k]) - 1.0L;
  }
  const int layers = static_cast<int>(widths.size()) - 1;
  for (int l = 0; l < layers; l++)
  {
    std::vector<long double> y(widths[l + 1]);
    for (int o = 0; o < widths[l + 1]; o++)
    {
      long double s = p[net.BiasOffset(l) + o];
      for (int i = 0; i < widths[l]; i++)
      {
        s += p[net.WeightOffset(l) + o * widths[l] + i] * x[i];
      }
      y[o] = l + 1 < layers ? std::tanh(s) : s;
    }
    x = std::move(y);
  }
  const int m = net.M();
  std::vector<long double> omega(m), alpha(m);
  for (int i = 0; i < m; i++)
  {
    omega[i] = std::log1p(std::exp(x[i]));
    alpha[i] = 1.0L / (1.0L + std::exp(-x[m + i]));
  }
  const auto n = in.A.rows();
  std::vector<long double> u(n, 0.0L), v(n, 0.0L), look(n), r(n);
  auto resid = [&](const std::vector<long double> &w) {
    for (std::size_t i = 0; i < n; i++)
    {
      long double s = in.f[i];
      for (auto e = in.A.RowStarts()[i]; e < in.A.RowStarts()[i + 1]; e++)
      {
        s -= static_cast<long double>(in.A.Values()[e]) * w[in.A.ColIndices()[e]];
      }
      r[i] = s;
    }
  };
  for (int k = 0; k < K; k++)
  {
    for (int i = 0; i < m; i++)
    {
      for (std::size_t t = 0; t < n; t++)
      {
        look[t] = u[t] + alpha[i] * v[t];
      }
      resid(look);
      for (std::size_t t = 0; t < n; t++)
      {
        v[t] = alpha[i] * v[t] + omega[i] * r[t];
        u[t] += v[t];
      }
    }
  }
  resid(u);
  long double rn = 0.0L, fn = 0.0L;
  for (std::size_t t = 0; t < n; t++)
  {
    rn += r[t] * r[t];
    fn += static_cast<long double>(in.f[t]) * in.f[t];
  }
  return std::sqrt(rn / fn);
}

// Full weighting written node by node: coarse (I, J) gathers fine (2I + di, 2J + dj).
inline Dense<double> dense_restriction(int n)
{
  const int mf = n - 1, mc = n / 2 - 1;
  Dense<double> R = Dense<double>::Zero(mc * mc, mf * mf);
  for (int J = 1; J <= mc; J++)
  {
    for (int I = 1; I <= mc; I++)
    {
      for (int dj = -1; dj <= 1; dj++)
      {
        for (int di = -1; di <= 1; di++)
        {
          const double w = (di == 0 ? 2.0 : 1.0) * (dj == 0 ? 2.0 : 1.0) / 16.0;
          R((J - 1) * mc + (I - 1), (2 * J + dj - 1) * mf + (2 * I + di - 1)) = w;
        }
      }
    }
  }
  return R;
}

// Bilinear interpolation: fine node value is the average of the coarse nodes it sits between.
inline Dense<double> dense_prolongation(int n)
{
  const int mf = n - 1, mc = n / 2 - 1;
  Dense<double> P = Dense<double>::Zero(mf * mf, mc * mc);
  for (int j = 1; j <= mf; j++)
  {
    for (int i = 1; i <= mf; i++)
    {
      const std::vector<int> xs = i % 2 == 0 ? std::vector<int>{i / 2} : std::vector<int>{(i - 1) / 2, (i + 1) / 2};
      const std::vector<int> ys = j % 2 == 0 ? std::vector<int>{j / 2} : std::vector<int>{(j - 1) / 2, (j + 1) / 2};
      const double w = 1.0 / double(xs.size() * ys.size());
      for (int X : xs)
      {
        for (int Y : ys)
        {
          if (X >= 1 && X <= mc && Y >= 1 && Y <= mc)
          {
            P((j - 1) * mf + (i - 1), (Y - 1) * mc + (X - 1)) += w;
          }
        }
      }
    }
  }
  return P;
}

// Columns E e_j of the V-cycle's error propagation, read off with f = 0.
inline Dense<double> vcycle_operator(const richlab::Hierarchy<double> &h, int pre, int post)
{
  const auto n = h.At(0).A.rows();
  Dense<double> E(n, n);
  const std::vector<double> zero(n, 0.0);
  for (std::size_t j = 0; j < n; j++)
  {
    std::vector<double> e(n, 0.0);
    e[j] = 1.0;
    const auto out = richlab::v_cycle<double>(h, zero, e, pre, post);
    for (std::size_t i = 0; i < n; i++)
    {
      E(i, j) = out[i];
    }
  }
  return E;
}

inline double spectral_radius(const Dense<double> &E)
{
  return Eigen::EigenSolver<Dense<double>>(E, false).eigenvalues().cwiseAbs().maxCoeff();
}

// Inverse eigenvalues of A for the normalized sine modes s_(p,q), stored at
// (q - 1)(n - 1) + (p - 1). Each mode is built from its closed form; `max_dev` receives the
// largest ||A s - lambda s|| / lambda, which is roundoff when the modes are eigenvectors.
inline std::vector<double> sine_inverse_eigenvalues(const SparseMatrix<double> &A, int n, double *max_dev)
{
  const int m = n - 1;
  const Dense<double> Ad = to_dense(A);
  std::vector<double> inv(m * m);
  double dev = 0.0;
  for (int q = 1; q <= m; q++)
  {
    for (int p = 1; p <= m; p++)
    {
      Vec<double> s(m * m);
      for (int j = 1; j <= m; j++)
      {
        for (int i = 1; i <= m; i++)
        {
          s((j - 1) * m + (i - 1)) = std::sin(p * std::numbers::pi * i / n) * std::sin(q * std::numbers::pi * j / n);
        }
      }
      s.normalize();
      const Vec<double> As = Ad * s;
      const double lambda = s.dot(As);
      dev = std::max(dev, (As - lambda * s).norm() / lambda);
      inv[(q - 1) * m + (p - 1)] = 1.0 / lambda;
    }
  }
  if (max_dev != nullptr)
  {
    *max_dev = dev;
  }
  return inv;
}

}  // namespace oracle

#endif  // RICHLAB_TESTS_REFERENCE_HPP
