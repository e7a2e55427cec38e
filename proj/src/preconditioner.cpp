// SPDX-License-Identifier: Apache-2.0

#include "richlab/preconditioner.hpp"

#include <algorithm>

namespace richlab
{

std::string to_string(PreconditionerKind kind)
{
  switch (kind)
  {
    case PreconditionerKind::Identity:
      return "none";
    case PreconditionerKind::WeightedJacobi:
      return "jacobi";
    case PreconditionerKind::GaussSeidel:
      return "gs";
    case PreconditionerKind::Sor:
      return "sor";
    case PreconditionerKind::Ssor:
      return "ssor";
    case PreconditionerKind::External:
      return "external";
  }
  return "unknown";
}

PreconditionerKind parse_preconditioner_kind(std::string_view name)
{
  if (name == "none" || name == "identity")
  {
    return PreconditionerKind::Identity;
  }
  if (name == "jacobi")
  {
    return PreconditionerKind::WeightedJacobi;
  }
  if (name == "gs" || name == "gauss-seidel")
  {
    return PreconditionerKind::GaussSeidel;
  }
  if (name == "sor")
  {
    return PreconditionerKind::Sor;
  }
  if (name == "ssor")
  {
    return PreconditionerKind::Ssor;
  }
  throw ConfigError("unknown preconditioner '" + std::string(name) +
                    "' (expected none, jacobi, gs, sor, ssor)");
}

template <Field T>
Preconditioner<T>::Preconditioner(const SparseMatrix<T> &A, PreconditionerSpec spec)
  : spec(spec), n(A.rows())
{
  if (!A.square())
  {
    throw DimensionError("preconditioner needs a square matrix", A.rows(), A.cols());
  }
  if (spec.kind == PreconditionerKind::External)
  {
    throw ConfigError("external preconditioners are built with Preconditioner::External");
  }
  if (spec.kind == PreconditionerKind::GaussSeidel)
  {
    this->spec.relax = 1.0;
  }
  if ((spec.kind == PreconditionerKind::Sor || spec.kind == PreconditionerKind::Ssor) &&
      !(spec.relax > 0.0 && spec.relax < 2.0))
  {
    throw ConfigError("SOR/SSOR relaxation must lie in (0, 2), got " +
                      std::to_string(spec.relax));
  }
  if (spec.kind == PreconditionerKind::Identity)
  {
    return;
  }
  diag = A.DiagonalEntries();
  for (std::size_t i = 0; i < n; i++)
  {
    if (diag[i] == T{})
    {
      throw Error("preconditioner " + to_string(spec.kind) + ": zero diagonal entry in row " +
                  std::to_string(i));
    }
  }
  if (spec.kind == PreconditionerKind::WeightedJacobi)
  {
    return;
  }
  std::vector<Triplet<T>> lo, up;
  const auto rs = A.RowStarts();
  const auto ci = A.ColIndices();
  const auto v = A.Values();
  for (std::size_t i = 0; i < n; i++)
  {
    for (std::size_t k = rs[i]; k < rs[i + 1]; k++)
    {
      if (ci[k] < i)
      {
        lo.push_back({i, ci[k], v[k]});
      }
      else if (ci[k] > i)
      {
        up.push_back({i, ci[k], v[k]});
      }
    }
  }
  lower = SparseMatrix<T>::FromTriplets(n, n, std::move(lo));
  upper = SparseMatrix<T>::FromTriplets(n, n, std::move(up));
}

template <Field T>
Preconditioner<T> Preconditioner<T>::External(std::size_t n, ApplyFn apply, ApplyFn adjoint)
{
  Preconditioner p;
  p.spec.kind = PreconditionerKind::External;
  p.n = n;
  p.external = std::move(apply);
  p.external_adjoint = std::move(adjoint);
  return p;
}

template <Field T>
void Preconditioner<T>::Forward(std::span<const T> r, std::span<T> y) const
{
  const auto rs = lower.RowStarts();
  const auto ci = lower.ColIndices();
  const auto v = lower.Values();
  const double w = spec.relax;
  for (std::size_t i = 0; i < n; i++)
  {
    T s{};
    for (std::size_t k = rs[i]; k < rs[i + 1]; k++)
    {
      s += v[k] * y[ci[k]];
    }
    y[i] = (r[i] - w * s) / diag[i];
  }
}

template <Field T>
void Preconditioner<T>::Backward(std::span<const T> r, std::span<T> y) const
{
  const auto rs = upper.RowStarts();
  const auto ci = upper.ColIndices();
  const auto v = upper.Values();
  const double w = spec.relax;
  for (std::size_t ii = n; ii-- > 0;)
  {
    T s{};
    for (std::size_t k = rs[ii]; k < rs[ii + 1]; k++)
    {
      s += v[k] * y[ci[k]];
    }
    y[ii] = (r[ii] - w * s) / diag[ii];
  }
}

template <Field T>
void Preconditioner<T>::ForwardAdjoint(std::span<const T> r, std::span<T> y) const
{
  // Upper-triangular system: eliminate from the last row up, scattering along columns.
  const auto rs = lower.RowStarts();
  const auto ci = lower.ColIndices();
  const auto v = lower.Values();
  const double w = spec.relax;
  std::vector<T> t(r.begin(), r.end());
  for (std::size_t ii = n; ii-- > 0;)
  {
    y[ii] = t[ii] / conj_if(diag[ii]);
    for (std::size_t k = rs[ii]; k < rs[ii + 1]; k++)
    {
      t[ci[k]] -= w * conj_if(v[k]) * y[ii];
    }
  }
}

template <Field T>
void Preconditioner<T>::BackwardAdjoint(std::span<const T> r, std::span<T> y) const
{
  const auto rs = upper.RowStarts();
  const auto ci = upper.ColIndices();
  const auto v = upper.Values();
  const double w = spec.relax;
  std::vector<T> t(r.begin(), r.end());
  for (std::size_t i = 0; i < n; i++)
  {
    y[i] = t[i] / conj_if(diag[i]);
    for (std::size_t k = rs[i]; k < rs[i + 1]; k++)
    {
      t[ci[k]] -= w * conj_if(v[k]) * y[i];
    }
  }
}

template <Field T>
void Preconditioner<T>::Apply(std::span<const T> r, std::span<T> z) const
{
  if (spec.kind == PreconditionerKind::Identity)
  {
    // The identity is size-agnostic; a default-constructed one has n = 0.
    if (z.size() != r.size())
    {
      throw DimensionError("preconditioner apply", r.size(), z.size());
    }
    std::copy(r.begin(), r.end(), z.begin());
    return;
  }
  if (r.size() != n || z.size() != n)
  {
    throw DimensionError("preconditioner apply", n, r.size() != n ? r.size() : z.size());
  }
  const double w = spec.relax;
  switch (spec.kind)
  {
    case PreconditionerKind::Identity:
      std::copy(r.begin(), r.end(), z.begin());
      return;
    case PreconditionerKind::WeightedJacobi:
      for (std::size_t i = 0; i < n; i++)
      {
        z[i] = w * r[i] / diag[i];
      }
      return;
    case PreconditionerKind::GaussSeidel:
      Forward(r, z);
      return;
    case PreconditionerKind::Sor:
      Forward(r, z);
      for (auto &x : z)
      {
        x *= w;
      }
      return;
    case PreconditionerKind::Ssor:
    {
      std::vector<T> y(n);
      Forward(r, y);
      for (std::size_t i = 0; i < n; i++)
      {
        y[i] *= diag[i];
      }
      Backward(y, z);
      const double c = w * (2.0 - w);
      for (auto &x : z)
      {
        x *= c;
      }
      return;
    }
    case PreconditionerKind::External:
      external(r, z);
      return;
  }
}

template <Field T>
std::vector<T> Preconditioner<T>::Apply(std::span<const T> r) const
{
  std::vector<T> z(r.size());
  Apply(r, z);
  return z;
}

template <Field T>
void Preconditioner<T>::ApplyAdjoint(std::span<const T> r, std::span<T> z) const
{
  if (spec.kind == PreconditionerKind::Identity)
  {
    if (z.size() != r.size())
    {
      throw DimensionError("preconditioner adjoint apply", r.size(), z.size());
    }
    std::copy(r.begin(), r.end(), z.begin());
    return;
  }
  if (r.size() != n || z.size() != n)
  {
    throw DimensionError("preconditioner adjoint apply", n,
                         r.size() != n ? r.size() : z.size());
  }
  const double w = spec.relax;
  switch (spec.kind)
  {
    case PreconditionerKind::Identity:
      std::copy(r.begin(), r.end(), z.begin());
      return;
    case PreconditionerKind::WeightedJacobi:
      for (std::size_t i = 0; i < n; i++)
      {
        z[i] = w * r[i] / conj_if(diag[i]);
      }
      return;
    case PreconditionerKind::GaussSeidel:
      ForwardAdjoint(r, z);
      return;
    case PreconditionerKind::Sor:
      ForwardAdjoint(r, z);
      for (auto &x : z)
      {
        x *= w;
      }
      return;
    case PreconditionerKind::Ssor:
    {
      std::vector<T> y(n);
      BackwardAdjoint(r, y);
      for (std::size_t i = 0; i < n; i++)
      {
        y[i] *= conj_if(diag[i]);
      }
      ForwardAdjoint(y, z);
      const double c = w * (2.0 - w);
      for (auto &x : z)
      {
        x *= c;
      }
      return;
    }
    case PreconditionerKind::External:
      if (!external_adjoint)
      {
        throw Error("external preconditioner has no adjoint");
      }
      external_adjoint(r, z);
      return;
  }
}

template class Preconditioner<double>;
template class Preconditioner<Complex>;

}  // namespace richlab
