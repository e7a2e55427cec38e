// SPDX-License-Identifier: Apache-2.0

#include "richlab/sine_transform.hpp"

#include <cmath>
#include <numbers>

#include "richlab/core.hpp"

namespace richlab
{

SineTransform2D::SineTransform2D(std::size_t n_cells) : n(n_cells), m(n_cells - 1)
{
  if (n_cells < 2)
  {
    throw Error("SineTransform2D: need at least 2 cells per side");
  }
  kernel.resize(m * m);
  const double scale = std::sqrt(2.0 / static_cast<double>(n));
  for (std::size_t j = 1; j <= m; j++)
  {
    for (std::size_t k = 1; k <= m; k++)
    {
      // Reduce j*k mod 2n first so the sine argument stays in [0, 2 pi).
      const auto r = (j * k) % (2 * n);
      kernel[(j - 1) * m + (k - 1)] =
          scale * std::sin(std::numbers::pi * static_cast<double>(r) / static_cast<double>(n));
    }
  }
}

void SineTransform2D::Apply(std::span<const double> in, std::span<double> out) const
{
  if (in.size() != Size())
  {
    throw DimensionError("SineTransform2D input", Size(), in.size());
  }
  if (out.size() != Size())
  {
    throw DimensionError("SineTransform2D output", Size(), out.size());
  }
  // tmp = X S along x, then out = S tmp along y.
  std::vector<double> tmp(Size(), 0.0);
  for (std::size_t row = 0; row < m; row++)
  {
    const double *x = in.data() + row * m;
    double *t = tmp.data() + row * m;
    for (std::size_t i = 0; i < m; i++)
    {
      const double xi = x[i];
      const double *s = kernel.data() + i * m;
      for (std::size_t p = 0; p < m; p++)
      {
        t[p] += xi * s[p];
      }
    }
  }
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t q = 0; q < m; q++)
  {
    double *o = out.data() + q * m;
    for (std::size_t row = 0; row < m; row++)
    {
      const double s = kernel[q * m + row];
      const double *t = tmp.data() + row * m;
      for (std::size_t p = 0; p < m; p++)
      {
        o[p] += s * t[p];
      }
    }
  }
}

std::vector<double> SineTransform2D::Forward(std::span<const double> in) const
{
  std::vector<double> out(Size());
  Apply(in, out);
  return out;
}

std::size_t cells_from_interior_size(std::size_t len)
{
  const auto m = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(len))));
  if (m == 0 || m * m != len)
  {
    throw Error("sine transform: length " + std::to_string(len) + " is not a perfect square");
  }
  return m + 1;
}

std::vector<double> dst2(std::span<const double> x)
{
  return SineTransform2D(cells_from_interior_size(x.size())).Forward(x);
}

std::vector<double> dst2_inv(std::span<const double> x)
{
  return SineTransform2D(cells_from_interior_size(x.size())).Inverse(x);
}

}  // namespace richlab
