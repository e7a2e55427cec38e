// SPDX-License-Identifier: Apache-2.0

#ifndef RICHLAB_ASSEMBLY_HPP
#define RICHLAB_ASSEMBLY_HPP

#include <array>
#include <cstddef>
#include <variant>
#include <vector>

#include "richlab/sparse_matrix.hpp"

namespace richlab
{

// -div(C grad u) = f on the unit square, u = 0 on the boundary, with
// C = Q(theta) diag(1, epsilon) Q(theta)^T. The grid has n x n cells.
struct AnisotropicProblem
{
  double epsilon = 1.0;
  double theta = 0.0;
  int n = 32;

  void Validate() const;
};

// -lap u - k^2 u + i gamma (omega / c^2) u = f with k = omega / c and a sponge mask gamma that
// rises quadratically from 0 to omega across `sponge_width` cells next to the boundary.
struct HelmholtzProblem
{
  double omega = 1.0;
  int n = 32;
  // Wave speed per interior node (row-major, (n-1)^2 entries); empty means c = 1.
  std::vector<double> wave_speed;
  // Sponge thickness in cells; negative selects one wavelength at the minimum wave speed.
  int sponge_width = -1;
  bool shannon_check = false;

  void Validate() const;
  double Speed(std::size_t node) const { return wave_speed.empty() ? 1.0 : wave_speed[node]; }
  int SpongeCells() const;
  // Grid points per wavelength at the slowest wave speed.
  double PointsPerWavelength() const;
};

using ProblemSpec = std::variant<AnisotropicProblem, HelmholtzProblem>;

// Network-facing parameter vector: (lg epsilon, theta) or (omega).
std::vector<double> parameters(const ProblemSpec &spec);
int grid_cells(const ProblemSpec &spec);

// Row-major 2x2 symmetric coefficient tensor.
std::array<double, 4> coefficient_matrix(double epsilon, double theta);

// Bilinear element stiffness on the reference square (h cancels in 2D), nodes ordered
// (0,0), (1,0), (1,1), (0,1); 2x2 Gauss quadrature.
std::array<double, 16> bilinear_element_stiffness(const std::array<double, 4> &C);

// (n-1)^2 SPD system with homogeneous Dirichlet rows and columns eliminated. Unknown ordering
// is row-major over interior nodes: index (j-1)(n-1) + (i-1) for node (i, j).
SparseMatrix<double> assemble_anisotropic(const AnisotropicProblem &p);

// Complex symmetric 5-point system scaled by 1/h^2 with the sponge term on the diagonal.
SparseMatrix<Complex> assemble_helmholtz(const HelmholtzProblem &p);

// Damping mask gamma per interior node.
std::vector<double> damping_mask(const HelmholtzProblem &p);

inline std::size_t interior_index(std::size_t i, std::size_t j, std::size_t n)
{
  return (j - 1) * (n - 1) + (i - 1);
}

}  // namespace richlab

#endif  // RICHLAB_ASSEMBLY_HPP
