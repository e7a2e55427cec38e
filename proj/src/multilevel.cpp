// SPDX-License-Identifier: Apache-2.0

#include "richlab/multilevel.hpp"

#include <Eigen/Dense>
#include <cstdlib>

#include "richlab/richardson.hpp"

namespace richlab
{

namespace
{

void check_even(int n, const char *what)
{
  if (n < 4 || n % 2 != 0)
  {
    throw ConfigError(std::string(what) + ": n must be even and >= 4, got " + std::to_string(n));
  }
}

}  // namespace

SparseMatrix<double> restriction_matrix(int n)
{
  check_even(n, "restriction");
  const int nf = n - 1, nc = n / 2 - 1;
  std::vector<Triplet<double>> trips;
  for (int J = 1; J <= nc; J++)
  {
    for (int I = 1; I <= nc; I++)
    {
      const auto row = static_cast<std::size_t>((J - 1) * nc + (I - 1));
      for (int dj = -1; dj <= 1; dj++)
      {
        for (int di = -1; di <= 1; di++)
        {
          const int i = 2 * I + di, j = 2 * J + dj;
          const double w = (2 - std::abs(di)) * (2 - std::abs(dj)) / 16.0;
          trips.push_back({row, static_cast<std::size_t>((j - 1) * nf + (i - 1)), w});
        }
      }
    }
  }
  return SparseMatrix<double>::FromTriplets(static_cast<std::size_t>(nc * nc),
                                            static_cast<std::size_t>(nf * nf), trips);
}

SparseMatrix<double> prolongation_matrix(int n)
{
  auto Rt = restriction_matrix(n).Transpose();
  std::vector<double> vals(Rt.Values().begin(), Rt.Values().end());
  for (auto &v : vals)
  {
    v *= 4.0;
  }
  return SparseMatrix<double>(Rt.rows(), Rt.cols(),
                              std::vector<std::size_t>(Rt.RowStarts().begin(), Rt.RowStarts().end()),
                              std::vector<std::size_t>(Rt.ColIndices().begin(), Rt.ColIndices().end()),
                              std::move(vals));
}

template <Field T>
static SparseMatrix<T> as_field(const SparseMatrix<double> &M)
{
  if constexpr (is_complex_v<T>)
  {
    return complexify(M);
  }
  else
  {
    return M;
  }
}

template <Field T>
std::vector<T> restrict_vector(std::span<const T> fine, int n)
{
  const auto R = as_field<T>(restriction_matrix(n));
  if (fine.size() != R.cols())
  {
    throw DimensionError("restrict", R.cols(), fine.size());
  }
  return R.Mult(fine);
}

template <Field T>
std::vector<T> prolong_vector(std::span<const T> coarse, int n)
{
  const auto P = as_field<T>(prolongation_matrix(n));
  if (coarse.size() != P.cols())
  {
    throw DimensionError("prolong", P.cols(), coarse.size());
  }
  return P.Mult(coarse);
}

template <Field T>
SparseMatrix<T> galerkin_coarse(const SparseMatrix<T> &A, const SparseMatrix<T> &R,
                                const SparseMatrix<T> &P)
{
  if (R.cols() != A.rows() || A.cols() != P.rows())
  {
    throw DimensionError("galerkin triple product", A.rows(), R.cols() != A.rows() ? R.cols()
                                                                                   : P.rows());
  }
  return multiply(R, multiply(A, P));
}

template <Field T>
class DenseSolver
{
public:
  using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

  explicit DenseSolver(const SparseMatrix<T> &A) : lu(to_dense(A))
  {
    if (!lu.isInvertible())
    {
      throw Error("coarsest-level operator is singular");
    }
  }

  std::vector<T> Solve(std::span<const T> f) const
  {
    Vector b = Eigen::Map<const Vector>(f.data(), static_cast<Eigen::Index>(f.size()));
    Vector x = lu.solve(b);
    if (!x.allFinite())
    {
      throw Error("coarsest-level solve produced non-finite values");
    }
    return std::vector<T>(x.data(), x.data() + x.size());
  }

private:
  static Matrix to_dense(const SparseMatrix<T> &A)
  {
    Matrix D = Matrix::Zero(static_cast<Eigen::Index>(A.rows()), static_cast<Eigen::Index>(A.cols()));
    const auto rs = A.RowStarts();
    const auto ci = A.ColIndices();
    const auto va = A.Values();
    for (std::size_t i = 0; i < A.rows(); i++)
    {
      for (auto k = rs[i]; k < rs[i + 1]; k++)
      {
        D(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(ci[k])) = va[k];
      }
    }
    return D;
  }

  Eigen::FullPivLU<Matrix> lu;
};

template <Field T>
Hierarchy<T>::Hierarchy(const SparseMatrix<T> &A, int n,
                        const ScheduleForLevel<T> &schedule_for_level,
                        const HierarchyOptions &opts)
{
  if (opts.coarsest_n < 2)
  {
    throw ConfigError("hierarchy: coarsest_n must be >= 2");
  }
  if (A.rows() != static_cast<std::size_t>((n - 1) * (n - 1)) || !A.square())
  {
    throw DimensionError("hierarchy fine operator", static_cast<std::size_t>((n - 1) * (n - 1)),
                         A.rows());
  }
  Level<T> fine;
  fine.n = n;
  fine.A = A;
  levels.push_back(std::move(fine));
  while (levels.back().n > opts.coarsest_n)
  {
    auto &cur = levels.back();
    check_even(cur.n, "hierarchy coarsening");
    cur.R = as_field<T>(restriction_matrix(cur.n));
    cur.P = as_field<T>(prolongation_matrix(cur.n));
    Level<T> next;
    next.n = cur.n / 2;
    next.A = galerkin_coarse(cur.A, cur.R, cur.P);
    levels.push_back(std::move(next));
  }
  if (levels.size() < 2)
  {
    throw ConfigError("hierarchy: need at least two levels (n = " + std::to_string(n) +
                      ", coarsest_n = " + std::to_string(opts.coarsest_n) + ")");
  }
  if (levels.back().A.rows() > 1024)
  {
    throw ConfigError("hierarchy: coarsest dimension exceeds 1024");
  }
  for (std::size_t l = 0; l + 1 < levels.size(); l++)
  {
    auto &lev = levels[l];
    lev.schedule = schedule_for_level(static_cast<int>(l), lev.A);
    lev.schedule.Validate();
    lev.smoother = std::make_shared<const Preconditioner<T>>(lev.A, opts.smoother);
  }
  coarse = std::make_shared<const DenseSolver<T>>(levels.back().A);
}

template <Field T>
std::vector<T> Hierarchy<T>::SolveCoarsest(std::span<const T> f) const
{
  return coarse->Solve(f);
}

template <Field T>
ScheduleForLevel<T> rescaled_schedule(const WeightSchedule &fine, const SparseMatrix<T> &fine_A)
{
  const double fine_bound = fine_A.MaxAbsRowSum();
  return [fine, fine_bound](int, const SparseMatrix<T> &A) {
    return fine.ScaledOmega(fine_bound / A.MaxAbsRowSum());
  };
}

namespace
{

template <Field T>
void smooth(const Level<T> &lev, std::span<const T> f, std::vector<T> &u, int sweeps)
{
  if (sweeps <= 0)
  {
    return;
  }
  auto state = IterationState<T>::Zero(0);
  state.u = std::move(u);
  state.v.assign(state.u.size(), T{});
  SweepWorkspace<T> work(state.u.size());
  for (int s = 0; s < sweeps; s++)
  {
    sweep_in_place<T>(lev.A, f, state, lev.schedule, *lev.smoother, work);
  }
  u = std::move(state.u);
}

template <Field T>
std::vector<T> cycle(const Hierarchy<T> &h, std::size_t l, std::span<const T> f,
                     std::vector<T> u, int pre, int post)
{
  if (l + 1 == h.Depth())
  {
    return h.SolveCoarsest(f);
  }
  const auto &lev = h.At(l);
  smooth(lev, f, u, pre);
  std::vector<T> r(u.size());
  residual<T>(lev.A, f, u, r);
  const auto rc = lev.R.Mult(std::span<const T>(r));
  const auto ec = cycle<T>(h, l + 1, rc, std::vector<T>(rc.size(), T{}), pre, post);
  const auto e = lev.P.Mult(std::span<const T>(ec));
  for (std::size_t i = 0; i < u.size(); i++)
  {
    u[i] += e[i];
  }
  smooth(lev, f, u, post);
  return u;
}

}  // namespace

template <Field T>
std::vector<T> v_cycle(const Hierarchy<T> &h, std::span<const T> f, std::span<const T> u, int pre,
                       int post)
{
  const auto &fine = h.At(0);
  if (f.size() != fine.A.rows() || u.size() != fine.A.rows())
  {
    throw DimensionError("v_cycle", fine.A.rows(), f.size() != fine.A.rows() ? f.size() : u.size());
  }
  if (pre < 0 || post < 0)
  {
    throw ConfigError("v_cycle: smoothing counts must be >= 0");
  }
  return cycle<T>(h, 0, f, std::vector<T>(u.begin(), u.end()), pre, post);
}

#define RICHLAB_INSTANTIATE(T)                                                                  \
  template std::vector<T> restrict_vector(std::span<const T>, int);                            \
  template std::vector<T> prolong_vector(std::span<const T>, int);                             \
  template SparseMatrix<T> galerkin_coarse(const SparseMatrix<T> &, const SparseMatrix<T> &,   \
                                           const SparseMatrix<T> &);                           \
  template class DenseSolver<T>;                                                               \
  template class Hierarchy<T>;                                                                 \
  template ScheduleForLevel<T> rescaled_schedule(const WeightSchedule &, const SparseMatrix<T> &); \
  template std::vector<T> v_cycle(const Hierarchy<T> &, std::span<const T>, std::span<const T>, \
                                  int, int);

RICHLAB_INSTANTIATE(double)
RICHLAB_INSTANTIATE(Complex)
#undef RICHLAB_INSTANTIATE

}  // namespace richlab
