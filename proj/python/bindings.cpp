// SPDX-License-Identifier: Apache-2.0

#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "harness.hpp"
#include "richlab/richardson.hpp"
#include "richlab/sine_transform.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace richlab;

namespace
{

template <typename T>
py::array_t<T> to_numpy(std::span<const T> x)
{
  py::array_t<T> out(static_cast<py::ssize_t>(x.size()));
  std::copy(x.begin(), x.end(), out.mutable_data());
  return out;
}

template <typename T>
std::vector<T> from_numpy(const py::array_t<T, py::array::c_style | py::array::forcecast> &a)
{
  if (a.ndim() != 1)
  {
    throw DimensionError("expected a 1-D array", 1, static_cast<std::size_t>(a.ndim()));
  }
  return std::vector<T>(a.data(), a.data() + a.size());
}

template <Field T>
void bind_matrix(py::module_ &m, const char *name)
{
  py::class_<SparseMatrix<T>>(m, name, "Compressed-row sparse matrix")
      .def_static(
          "from_csr",
          [](std::size_t rows, std::size_t cols, const std::vector<std::size_t> &indptr,
             const std::vector<std::size_t> &indices, py::array_t<T, py::array::c_style | py::array::forcecast> data) {
            return SparseMatrix<T>(rows, cols, indptr, indices, from_numpy<T>(data));
          },
          "rows"_a, "cols"_a, "indptr"_a, "indices"_a, "data"_a)
      .def_property_readonly("shape", [](const SparseMatrix<T> &A) { return py::make_tuple(A.rows(), A.cols()); })
      .def_property_readonly("nnz", &SparseMatrix<T>::nnz)
      .def("csr",
           [](const SparseMatrix<T> &A) {
             return py::make_tuple(to_numpy<std::size_t>(A.RowStarts()), to_numpy<std::size_t>(A.ColIndices()),
                                   to_numpy<T>(A.Values()));
           },
           "(indptr, indices, data) arrays, scipy.sparse.csr_matrix compatible")
      .def("matvec",
           [](const SparseMatrix<T> &A, py::array_t<T, py::array::c_style | py::array::forcecast> x) {
             const auto v = from_numpy<T>(x);
             const auto y = A.Mult(std::span<const T>(v));
             return to_numpy<T>(y);
           })
      .def("max_abs_row_sum", &SparseMatrix<T>::MaxAbsRowSum);
}

py::dict row_dict(const harness::Row &r)
{
  return py::dict("method"_a = r.method, "m"_a = r.m, "precond"_a = r.precond, "seed"_a = r.seed,
                  "inner_iters"_a = r.inner, "outer_iters"_a = r.outer, "converged"_a = r.converged,
                  "rel_residual"_a = r.rel_residual, "wall_ms"_a = r.wall_ms, "note"_a = r.note);
}

Variant variant_from(const std::string &name)
{
  for (auto v : {Variant::Plain, Variant::Mom, Variant::Nag, Variant::NagEx})
  {
    if (name == to_string(v))
    {
      return v;
    }
  }
  throw ConfigError("unknown variant '" + name + "'");
}

PreconditionerSpec precond_from(const std::string &kind, double relax)
{
  if (kind == "none" || kind == "identity")
  {
    return {};
  }
  return {parse_preconditioner_kind(kind), relax};
}

}  // namespace

PYBIND11_MODULE(_richlab, m)
{
  m.doc() = "Richardson iterations with learned weights, multigrid and flexible GMRES";

  py::register_exception<Error>(m, "Error");
  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<DivergenceError>(m, "DivergenceError");

  bind_matrix<double>(m, "SparseMatrix");
  bind_matrix<Complex>(m, "ComplexSparseMatrix");

  m.def("assemble_anisotropic",
        [](double eps, double theta, int n) { return assemble_anisotropic({eps, theta, n}); }, "eps"_a,
        "theta"_a = 0.0, "n"_a = 32, "bilinear finite-element matrix of -div(C grad u) on an n x n grid");
  m.def(
      "assemble_helmholtz",
      [](double omega, int n, int sponge_width) {
        HelmholtzProblem p;
        p.omega = omega;
        p.n = n;
        p.sponge_width = sponge_width;
        return assemble_helmholtz(p);
      },
      "omega"_a, "n"_a = 32, "sponge_width"_a = -1);

  m.def("chebyshev_weights", &chebyshev_weights, "lambda_max"_a, "lambda_min"_a, "m"_a);
  m.def("chebyshev_semi_weights", &chebyshev_semi_weights, "lambda_max"_a, "alpha"_a, "m"_a);
  m.def(
      "spectral_bounds",
      [](const SparseMatrix<double> &A) {
        const auto b = dense_spectral_bounds(A);
        return py::make_tuple(b.lambda_min, b.lambda_max);
      },
      "A"_a, "(lambda_min, lambda_max) from a dense symmetric eigensolver");

  py::class_<WeightSchedule>(m, "WeightSchedule")
      .def_static("plain", &WeightSchedule::Plain, "omega"_a)
      .def_static("mom", &WeightSchedule::Mom, "omega"_a, "alpha"_a)
      .def_static("nag", &WeightSchedule::Nag, "omega"_a, "alpha"_a)
      .def_static("nagex", &WeightSchedule::NagEx, "omega"_a, "alpha"_a, "alpha_tilde"_a)
      .def_property_readonly("variant", [](const WeightSchedule &s) { return to_string(s.variant); })
      .def_property_readonly("m", &WeightSchedule::m)
      .def_readonly("omega", &WeightSchedule::omega)
      .def_readonly("alpha", &WeightSchedule::alpha)
      .def_readonly("alpha_tilde", &WeightSchedule::alpha_tilde);

  m.def(
      "solve_stationary",
      [](const SparseMatrix<double> &A, py::array_t<double, py::array::c_style | py::array::forcecast> f,
         const WeightSchedule &schedule, const std::string &precond, double relax, double tol, long max_outer) {
        const auto fv = from_numpy<double>(f);
        const Preconditioner<double> P(A, precond_from(precond, relax));
        StationaryOptions opts;
        opts.tol = tol;
        opts.max_outer = max_outer;
        SolveResult<std::vector<double>> res;
        {
          py::gil_scoped_release release;
          res = solve_stationary(A, fv, schedule, P, opts);
        }
        return py::dict("u"_a = to_numpy<double>(res.u), "outer_iters"_a = res.report.iterations,
                        "inner_iters"_a = res.report.inner_iterations, "converged"_a = res.report.converged,
                        "rel_residual"_a = res.report.final_relative_residual, "trace"_a = res.report.trace);
      },
      "A"_a, "f"_a, "schedule"_a, "precond"_a = "none", "relax"_a = 1.0, "tol"_a = 1e-6, "max_outer"_a = 100000,
      "zero initial guess; stops at ||f - A u|| / ||f|| <= tol");

  m.def(
      "solve_helmholtz",
      [](double omega, int n, const std::string &precond, std::uint64_t seed, double tol) {
        HelmholtzProblem p;
        p.omega = omega;
        p.n = n;
        harness::SolveSettings s;
        s.tol = tol;
        harness::HelmholtzPrecond hp = harness::HelmholtzPrecond::Identity;
        if (precond == "vcycle")
        {
          hp = harness::HelmholtzPrecond::VCycle;
        }
        else if (precond != "none")
        {
          throw ConfigError("precond must be 'none' or 'vcycle'");
        }
        py::gil_scoped_release release;
        const auto row = harness::solve_helmholtz(p, hp, harness::HelmholtzSmoother{}, seed, s);
        py::gil_scoped_acquire acquire;
        return row_dict(row);
      },
      "omega"_a, "n"_a = 64, "precond"_a = "vcycle", "seed"_a = 0, "tol"_a = 1e-6,
      "FGMRES on the Helmholtz system with an optional multigrid preconditioner");

  m.def(
      "train_checkpoint",
      [](const std::string &problem, int n, int samples, const std::string &variant, const std::string &precond,
         int m, int K, int epochs, std::uint64_t seed, std::uint64_t data_seed) {
        harness::TrainSettings s;
        s.problem = problem;
        s.n = n;
        s.samples = samples;
        s.data_seed = data_seed;
        s.variant = variant_from(variant);
        s.precond = precond_from(precond, 1.0);
        s.train.m = m;
        s.train.K = K;
        s.train.epochs = epochs;
        s.train.seed = seed;
        s.train.learn_log_omega = parse_problem_kind(problem) == ProblemKind::Helmholtz;
        std::ostringstream log, os;
        {
          py::gil_scoped_release release;
          write_checkpoint(os, harness::train_to_checkpoint(s, log));
        }
        return py::bytes(os.str());
      },
      "problem"_a = "anisotropic", "n"_a = 16, "samples"_a = 40, "variant"_a = "plain", "precond"_a = "none",
      "m"_a = 3, "K"_a = 10, "epochs"_a = 2, "seed"_a = 0, "data_seed"_a = 0,
      "train a meta network and return the checkpoint bytes");

  m.def(
      "sample_rhs",
      [](std::uint64_t seed, std::size_t index, std::size_t size) {
        const auto f = sample_rhs<double>(seed, index, size);
        return to_numpy<double>(f);
      },
      "seed"_a, "index"_a, "size"_a);
  m.def(
      "dst2",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> x) {
        const auto v = from_numpy<double>(x);
        return to_numpy<double>(dst2(v));
      },
      "orthonormal 2-D sine transform of an (n-1)^2 interior vector (its own inverse)");
}
