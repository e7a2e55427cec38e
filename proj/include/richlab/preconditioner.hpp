// SPDX-License-Identifier: Apache-2.0

#ifndef RICHLAB_PRECONDITIONER_HPP
#define RICHLAB_PRECONDITIONER_HPP

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "richlab/sparse_matrix.hpp"

namespace richlab
{

enum class PreconditionerKind
{
  Identity,
  WeightedJacobi,
  GaussSeidel,
  Sor,
  Ssor,
  External
};

std::string to_string(PreconditionerKind kind);
PreconditionerKind parse_preconditioner_kind(std::string_view name);

// What to build; the matrix-dependent caches come later.
struct PreconditionerSpec
{
  PreconditionerKind kind = PreconditionerKind::Identity;
  double relax = 1.0;
};

//
// B^-1 for the stationary methods written as preconditioned Richardson with omega = 1, with A
// split as D - L - U (D diagonal, -L / -U strict lower / upper parts):
//   weighted Jacobi  relax D^-1
//   Gauss-Seidel     (D - L)^-1
//   SOR              relax (D - relax L)^-1
//   SSOR             relax (2 - relax) (D - relax U)^-1 D (D - relax L)^-1
// Triangular solves follow the matrix's row order. Caches are immutable once built.
//
template <Field T>
class Preconditioner
{
public:
  using ApplyFn = std::function<void(std::span<const T>, std::span<T>)>;

  Preconditioner() = default;

  // Throws Error naming the row when a needed diagonal entry is zero, and ConfigError when
  // SOR/SSOR relax lies outside (0, 2).
  Preconditioner(const SparseMatrix<T> &A, PreconditionerSpec spec);

  // Caller-supplied B^-1 (and optionally its adjoint for differentiation).
  static Preconditioner External(std::size_t n, ApplyFn apply, ApplyFn adjoint = {});

  PreconditionerKind Kind() const { return spec.kind; }
  double Relax() const { return spec.relax; }
  bool IsIdentity() const { return spec.kind == PreconditionerKind::Identity; }

  // z = B^-1 r. z must not alias r.
  void Apply(std::span<const T> r, std::span<T> z) const;
  std::vector<T> Apply(std::span<const T> r) const;

  // z = B^-H r.
  void ApplyAdjoint(std::span<const T> r, std::span<T> z) const;

private:
  void Forward(std::span<const T> r, std::span<T> y) const;   // (D - relax L) y = r
  void Backward(std::span<const T> r, std::span<T> y) const;  // (D - relax U) y = r
  void ForwardAdjoint(std::span<const T> r, std::span<T> y) const;   // (D - relax L)^H y = r
  void BackwardAdjoint(std::span<const T> r, std::span<T> y) const;  // (D - relax U)^H y = r

  PreconditionerSpec spec;
  std::size_t n = 0;
  std::vector<T> diag;
  SparseMatrix<T> lower, upper;  // strict parts of A
  ApplyFn external, external_adjoint;
};

}  // namespace richlab

#endif  // RICHLAB_PRECONDITIONER_HPP
