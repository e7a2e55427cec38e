// SPDX-License-Identifier: Apache-2.0

#ifndef RICHLAB_SINE_TRANSFORM_HPP
#define RICHLAB_SINE_TRANSFORM_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace richlab
{

//
// Orthonormal 2D type-I discrete sine transform over the (n-1) x (n-1) interior nodes of an
// n x n cell grid, unknowns ordered row-major (x fastest). The 1D kernel
// S_jk = sqrt(2/n) sin(pi j k / n) is symmetric and orthogonal, so the transform is its own
// inverse. Coefficient (p, q) of mode sin(p pi i / n) sin(q pi j / n) sits at (q-1)(n-1)+(p-1).
// Applied as a separable dense product; the plan is immutable and shareable across threads.
//
class SineTransform2D
{
public:
  explicit SineTransform2D(std::size_t n_cells);

  std::size_t Cells() const { return n; }
  std::size_t Size() const { return m * m; }

  void Apply(std::span<const double> in, std::span<double> out) const;
  std::vector<double> Forward(std::span<const double> in) const;
  std::vector<double> Inverse(std::span<const double> in) const { return Forward(in); }

private:
  std::size_t n, m;
  std::vector<double> kernel;  // m x m, symmetric
};

// Convenience wrappers inferring the grid from a perfect-square length.
std::vector<double> dst2(std::span<const double> x);
std::vector<double> dst2_inv(std::span<const double> x);

// Cells per side for an interior vector of length (n-1)^2; throws Error otherwise.
std::size_t cells_from_interior_size(std::size_t len);

}  // namespace richlab

#endif  // RICHLAB_SINE_TRANSFORM_HPP
