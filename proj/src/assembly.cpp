// SPDX-License-Identifier: Apache-2.0

#include "richlab/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace richlab
{

void AnisotropicProblem::Validate() const
{
  if (!(epsilon > 0.0 && epsilon <= 1.0))
  {
    throw ConfigError("anisotropic problem: epsilon must lie in (0, 1], got " +
                      std::to_string(epsilon));
  }
  if (!(theta >= 0.0 && theta <= std::numbers::pi))
  {
    throw ConfigError("anisotropic problem: theta must lie in [0, pi], got " +
                      std::to_string(theta));
  }
  if (n < 2)
  {
    throw ConfigError("anisotropic problem: need n >= 2 cells per side");
  }
}

double HelmholtzProblem::PointsPerWavelength() const
{
  double cmin = 1.0;
  if (!wave_speed.empty())
  {
    cmin = *std::min_element(wave_speed.begin(), wave_speed.end());
  }
  return 2.0 * std::numbers::pi * cmin * n / omega;
}

int HelmholtzProblem::SpongeCells() const
{
  if (sponge_width >= 0)
  {
    return sponge_width;
  }
  return std::max(1, static_cast<int>(std::ceil(PointsPerWavelength() - 1e-9)));
}

void HelmholtzProblem::Validate() const
{
  if (!(omega > 0.0))
  {
    throw ConfigError("helmholtz problem: omega must be positive");
  }
  if (n < 2)
  {
    throw ConfigError("helmholtz problem: need n >= 2 cells per side");
  }
  const auto m = static_cast<std::size_t>(n - 1);
  if (!wave_speed.empty())
  {
    if (wave_speed.size() != m * m)
    {
      throw DimensionError("helmholtz wave speed", m * m, wave_speed.size());
    }
    for (auto c : wave_speed)
    {
      if (!(c > 0.0))
      {
        throw ConfigError("helmholtz problem: wave speed must be positive everywhere");
      }
    }
  }
  if (shannon_check && PointsPerWavelength() < 10.0)
  {
    std::ostringstream msg;
    msg << "helmholtz problem: only " << PointsPerWavelength()
        << " grid points per wavelength (need at least 10)";
    throw ConfigError(msg.str());
  }
}

std::vector<double> parameters(const ProblemSpec &spec)
{
  if (const auto *a = std::get_if<AnisotropicProblem>(&spec))
  {
    return {std::log10(a->epsilon), a->theta};
  }
  return {std::get<HelmholtzProblem>(spec).omega};
}

int grid_cells(const ProblemSpec &spec)
{
  return std::visit([](const auto &p) { return p.n; }, spec);
}

std::array<double, 4> coefficient_matrix(double epsilon, double theta)
{
  const double c = std::cos(theta), s = std::sin(theta);
  // Q diag(1, eps) Q^T with Q = [[c, -s], [s, c]].
  const double xx = c * c + epsilon * s * s;
  const double xy = c * s * (1.0 - epsilon);
  const double yy = s * s + epsilon * c * c;
  return {xx, xy, xy, yy};
}

std::array<double, 16> bilinear_element_stiffness(const std::array<double, 4> &C)
{
  static constexpr int corner_x[4] = {0, 1, 1, 0};
  static constexpr int corner_y[4] = {0, 0, 1, 1};
  const double g = 0.5 / std::sqrt(3.0);
  const double gauss[2] = {0.5 - g, 0.5 + g};
  std::array<double, 16> K{};
  for (double x : gauss)
  {
    for (double y : gauss)
    {
      double dx[4], dy[4];
      for (int a = 0; a < 4; a++)
      {
        const double fx = corner_x[a] ? x : 1.0 - x;
        const double fy = corner_y[a] ? y : 1.0 - y;
        dx[a] = (corner_x[a] ? 1.0 : -1.0) * fy;
        dy[a] = (corner_y[a] ? 1.0 : -1.0) * fx;
      }
      for (int a = 0; a < 4; a++)
      {
        for (int b = 0; b < 4; b++)
        {
          const double cgx = C[0] * dx[b] + C[1] * dy[b];
          const double cgy = C[2] * dx[b] + C[3] * dy[b];
          K[a * 4 + b] += 0.25 * (dx[a] * cgx + dy[a] * cgy);
        }
      }
    }
  }
  return K;
}

SparseMatrix<double> assemble_anisotropic(const AnisotropicProblem &p)
{
  p.Validate();
  const auto n = static_cast<std::size_t>(p.n);
  const auto m = n - 1;
  const auto K = bilinear_element_stiffness(coefficient_matrix(p.epsilon, p.theta));
  static constexpr int corner_x[4] = {0, 1, 1, 0};
  static constexpr int corner_y[4] = {0, 0, 1, 1};

  std::vector<Triplet<double>> t;
  t.reserve(16 * n * n);
  for (std::size_t ey = 0; ey < n; ey++)
  {
    for (std::size_t ex = 0; ex < n; ex++)
    {
      for (int a = 0; a < 4; a++)
      {
        const auto ia = ex + corner_x[a], ja = ey + corner_y[a];
        if (ia == 0 || ia == n || ja == 0 || ja == n)
        {
          continue;
        }
        for (int b = 0; b < 4; b++)
        {
          const auto ib = ex + corner_x[b], jb = ey + corner_y[b];
          if (ib == 0 || ib == n || jb == 0 || jb == n)
          {
            continue;
          }
          t.push_back({interior_index(ia, ja, n), interior_index(ib, jb, n), K[a * 4 + b]});
        }
      }
    }
  }
  return SparseMatrix<double>::FromTriplets(m * m, m * m, std::move(t));
}

std::vector<double> damping_mask(const HelmholtzProblem &p)
{
  p.Validate();
  const auto n = static_cast<std::size_t>(p.n);
  const auto m = n - 1;
  const double width = p.SpongeCells();
  std::vector<double> gamma(m * m, 0.0);
  if (width <= 0.0)
  {
    return gamma;
  }
  for (std::size_t j = 1; j <= m; j++)
  {
    for (std::size_t i = 1; i <= m; i++)
    {
      const double d = static_cast<double>(std::min({i, j, n - i, n - j}));
      if (d < width)
      {
        const double s = (width - d) / width;
        gamma[interior_index(i, j, n)] = p.omega * s * s;
      }
    }
  }
  return gamma;
}

SparseMatrix<Complex> assemble_helmholtz(const HelmholtzProblem &p)
{
  p.Validate();
  const auto n = static_cast<std::size_t>(p.n);
  const auto m = n - 1;
  const double h = 1.0 / static_cast<double>(n);
  const double inv_h2 = 1.0 / (h * h);
  const auto gamma = damping_mask(p);

  std::vector<Triplet<Complex>> t;
  t.reserve(5 * m * m);
  for (std::size_t j = 1; j <= m; j++)
  {
    for (std::size_t i = 1; i <= m; i++)
    {
      const auto row = interior_index(i, j, n);
      const double c = p.Speed(row);
      const double k = p.omega / c;
      const Complex center((4.0 - k * k * h * h) * inv_h2, gamma[row] * p.omega / (c * c));
      t.push_back({row, row, center});
      if (i > 1)
      {
        t.push_back({row, interior_index(i - 1, j, n), Complex(-inv_h2)});
      }
      if (i < m)
      {
        t.push_back({row, interior_index(i + 1, j, n), Complex(-inv_h2)});
      }
      if (j > 1)
      {
        t.push_back({row, interior_index(i, j - 1, n), Complex(-inv_h2)});
      }
      if (j < m)
      {
        t.push_back({row, interior_index(i, j + 1, n), Complex(-inv_h2)});
      }
    }
  }
  return SparseMatrix<Complex>::FromTriplets(m * m, m * m, std::move(t));
}

}  // namespace richlab
