// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "reference.hpp"
#include "richlab/assembly.hpp"
#include "richlab/checkpoint.hpp"
#include "richlab/fns_lite.hpp"
#include "richlab/multilevel.hpp"
#include "richlab/richardson.hpp"
#include "richlab/spectral.hpp"

using namespace richlab;
using oracle::Dense;
using oracle::Vec;

namespace
{

ScheduleForLevel<double> semi_plain(int m)
{
  return [m](int, const SparseMatrix<double> &A) {
    const auto b = dense_spectral_bounds(A);
    return WeightSchedule::Plain(chebyshev_semi_weights(b.lambda_max, 1.0 / 30.0, m));
  };
}

}  // namespace

TEST_CASE("transfer operators match the dense stencil matrices at n = 8")
{
  const auto R = oracle::to_dense(restriction_matrix(8));
  const auto P = oracle::to_dense(prolongation_matrix(8));
  CHECK((R - oracle::dense_restriction(8)).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK((P - oracle::dense_prolongation(8)).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK((P - 4.0 * R.transpose()).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK_THROWS_AS(restriction_matrix(7), ConfigError);
  CHECK_THROWS_AS(prolongation_matrix(2), ConfigError);
}

TEST_CASE("restriction preserves constants away from the boundary")
{
  const int n = 16;
  const std::vector<double> ones((n - 1) * (n - 1), 1.0);
  const auto c = restrict_vector<double>(ones, n);
  const int mc = n / 2 - 1;
  for (int J = 2; J < mc; J++)
  {
    for (int I = 2; I < mc; I++)
    {
      CHECK(c[(J - 1) * mc + (I - 1)] == doctest::Approx(1.0).epsilon(1e-15));
    }
  }
  const auto back = prolong_vector<double>(std::vector<double>(mc * mc, 2.0), n);
  CHECK(back[interior_index(n / 2, n / 2, n)] == 2.0);
}

TEST_CASE_TEMPLATE("<R x, y> = (1/4) <x, P y>", T, double, Complex)
{
  for (int n : {8, 16, 32})
  {
    const int mf = n - 1, mc = n / 2 - 1;
    const auto x = oracle::random_vector<T>(mf * mf, n);
    const auto y = oracle::random_vector<T>(mc * mc, n + 1);
    const T lhs = dot(restrict_vector<T>(x, n), y);
    const T rhs = 0.25 * dot(x, prolong_vector<T>(y, n));
    CHECK(std::abs(lhs - rhs) <= 1e-13 * std::abs(lhs));
  }
}

TEST_CASE("Galerkin coarse operator")
{
  const int n = 8;
  const auto A = assemble_anisotropic({1.0, 0.0, n});
  const auto R = restriction_matrix(n), P = prolongation_matrix(n);
  const auto Ac = galerkin_coarse(A, R, P);
  CHECK(Ac.rows() == 9);
  CHECK(Ac.cols() == 9);
  const Dense<double> ref = oracle::dense_restriction(n) * oracle::to_dense(A) * oracle::dense_prolongation(n);
  CHECK((oracle::to_dense(Ac) - ref).cwiseAbs().maxCoeff() <= 1e-13);

  const auto B = assemble_anisotropic({1e-3, 0.9, 16});
  const auto Bc = oracle::to_dense(galerkin_coarse(B, restriction_matrix(16), prolongation_matrix(16)));
  CHECK(Bc.rows() == 49);
  CHECK((Bc - Bc.transpose()).cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("V-cycle fixed point and argument checks")
{
  const auto A = assemble_anisotropic({1.0, 0.0, 16});
  const Hierarchy<double> h(A, 16, semi_plain(2));
  CHECK(h.Depth() == 2);
  const std::vector<double> zero(A.rows(), 0.0);
  const auto out = v_cycle<double>(h, zero, zero, 2, 2);
  for (double x : out)
  {
    CHECK(x == 0.0);
  }
  HierarchyOptions deep;
  deep.coarsest_n = 128;
  CHECK_THROWS_AS(Hierarchy<double>(A, 16, semi_plain(2), deep), ConfigError);
  HierarchyOptions big;
  big.coarsest_n = 64;
  const auto A128 = assemble_anisotropic({1.0, 0.0, 128});
  CHECK_THROWS_AS(Hierarchy<double>(A128, 128, semi_plain(1), big), ConfigError);
}

TEST_CASE("two-grid V-cycle without smoothing is the coarse-grid correction")
{
  const int n = 8;
  const auto A = assemble_anisotropic({1.0, 0.0, n});
  HierarchyOptions opts;
  opts.coarsest_n = 4;
  const Hierarchy<double> h(A, n, semi_plain(1), opts);
  REQUIRE(h.Depth() == 2);
  const Dense<double> Ad = oracle::to_dense(A);
  const Dense<double> R = oracle::dense_restriction(n), P = oracle::dense_prolongation(n);
  const Dense<double> Ac = R * Ad * P;
  const Dense<double> E = Dense<double>::Identity(Ad.rows(), Ad.cols()) - P * Ac.lu().solve(R * Ad);
  CHECK((oracle::vcycle_operator(h, 0, 0) - E).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("two-grid error propagation contracts with a Chebyshev smoother")
{
  const int n = 16;
  const auto A = assemble_anisotropic({1.0, 0.0, n});
  const Hierarchy<double> h(A, n, semi_plain(2));
  REQUIRE(h.Depth() == 2);
  const double rho = oracle::spectral_radius(oracle::vcycle_operator(h, 1, 1));
  MESSAGE("two-grid spectral radius ", rho);
  CHECK(rho < 1.0);

  // Same operator assembled from dense factors: S_post (I - P Ac^-1 R A) S_pre.
  const Dense<double> Ad = oracle::to_dense(A);
  const auto w = h.At(0).schedule.omega;
  Dense<double> S = Dense<double>::Identity(Ad.rows(), Ad.cols());
  for (double wi : w)
  {
    S = (Dense<double>::Identity(Ad.rows(), Ad.cols()) - wi * Ad) * S;
  }
  const Dense<double> R = oracle::dense_restriction(n), P = oracle::dense_prolongation(n);
  const Dense<double> C =
      Dense<double>::Identity(Ad.rows(), Ad.cols()) - P * (R * Ad * P).lu().solve(R * Ad);
  CHECK((oracle::vcycle_operator(h, 1, 1) - S * C * S).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("one V-cycle never increases the residual")
{
  const int n = 32;
  const auto A = assemble_anisotropic({1.0, 0.0, n});
  const Hierarchy<double> h(A, n, semi_plain(2));
  CHECK(h.Depth() == 3);
  const std::vector<double> u0(A.rows(), 0.0);
  for (std::uint64_t s = 0; s < 20; s++)
  {
    const auto f = oracle::random_vector<double>(A.rows(), 500 + s);
    const auto u = v_cycle<double>(h, f, u0, 2, 2);
    std::vector<double> r(A.rows());
    residual<double>(A, f, u, r);
    CHECK(norm2(r) <= norm2(f));
  }
}

TEST_CASE("complex hierarchies run on the Helmholtz operator")
{
  HelmholtzProblem p;
  p.omega = 2 * std::numbers::pi * 2;
  p.n = 32;
  const auto A = assemble_helmholtz(p);
  const WeightSchedule s = WeightSchedule::Plain({0.2 / 1024.0});
  const Hierarchy<Complex> h(A, p.n, rescaled_schedule<Complex>(s, A));
  CHECK(h.Depth() == 3);
  CHECK(h.At(1).schedule.omega[0] > s.omega[0]);
  const auto f = oracle::random_vector<Complex>(A.rows(), 1);
  const auto u = v_cycle<Complex>(h, f, std::vector<Complex>(A.rows()), 1, 1);
  for (const auto &x : u)
  {
    CHECK(std::isfinite(std::abs(x)));
  }
}

TEST_CASE("exact spectral correction solves the isotropic problem in one step")
{
  const int n = 16;
  const auto A = assemble_anisotropic({1.0, 0.0, n});
  double dev = 1.0;
  const auto lam = oracle::sine_inverse_eigenvalues(A, n, &dev);
  CHECK(dev <= 1e-12);
  const auto rq = sine_rayleigh_inverse(A, n);
  CHECK(oracle::rel_err(rq, lam) <= 1e-12);
  const SpectralCorrection corr(n, lam);
  const auto f = oracle::random_vector<double>(A.rows(), 9);
  const auto u = fns_lite_step(A, f, std::vector<double>(A.rows(), 0.0), WeightSchedule::Plain({0.1}), 0,
                               corr, Preconditioner<double>());
  std::vector<double> r(A.rows());
  residual<double>(A, f, u, r);
  CHECK(norm2(r) / norm2(f) <= 1e-12);
}

TEST_CASE("zero correction reduces the hybrid step to smoothing")
{
  const int n = 16;
  const auto A = assemble_anisotropic({0.01, 0.3, n});
  const auto f = oracle::random_vector<double>(A.rows(), 2);
  const auto u0 = oracle::random_vector<double>(A.rows(), 3);
  const auto s = WeightSchedule::Mom({0.2, 0.5, 0.3}, {0.1, 0.3, 0.2});
  const Preconditioner<double> P(A, {PreconditionerKind::WeightedJacobi, 0.8});
  const SpectralCorrection corr(n, std::vector<double>(A.rows(), 0.0));
  const auto u = fns_lite_step(A, f, u0, s, 6, corr, P);
  IterationState<double> st = IterationState<double>::Zero(A.rows());
  st.u = u0;
  st = outer_sweep(A, f, st, s, P);
  st = outer_sweep(A, f, st, s, P);
  CHECK(u == st.u);
}

TEST_CASE("hybrid step is linear in (u, f)")
{
  const int n = 16;
  const auto A = assemble_anisotropic({0.1, 1.0, n});
  const auto s = WeightSchedule::Nag({0.2, 0.4}, {0.3, 0.5});
  const SpectralCorrection corr(n, sine_rayleigh_inverse(A, n));
  const Preconditioner<double> P;
  const auto u1 = oracle::random_vector<double>(A.rows(), 1), u2 = oracle::random_vector<double>(A.rows(), 2);
  const auto f1 = oracle::random_vector<double>(A.rows(), 3), f2 = oracle::random_vector<double>(A.rows(), 4);
  std::vector<double> us(A.rows()), fs(A.rows());
  for (std::size_t i = 0; i < us.size(); i++)
  {
    us[i] = u1[i] + u2[i];
    fs[i] = f1[i] + f2[i];
  }
  const auto a = fns_lite_step(A, f1, u1, s, 10, corr, P);
  const auto b = fns_lite_step(A, f2, u2, s, 10, corr, P);
  const auto c = fns_lite_step(A, fs, us, s, 10, corr, P);
  std::vector<double> sum(a.size());
  for (std::size_t i = 0; i < a.size(); i++)
  {
    sum[i] = a[i] + b[i];
  }
  CHECK(oracle::rel_err(c, sum) <= 1e-12);
}

TEST_CASE("spectral correction acts mode by mode")
{
  const int n = 8, m = n - 1;
  const auto r = oracle::random_vector<double>(m * m, 5);
  for (int k = 0; k < m * m; k++)
  {
    std::vector<double> lam(m * m, 0.0);
    lam[k] = 1.7;
    const auto c = dst2(SpectralCorrection(n, lam).Apply(r));
    const auto rc = dst2(r);
    for (int j = 0; j < m * m; j++)
    {
      if (j == k)
      {
        CHECK(c[j] == doctest::Approx(1.7 * rc[j]).epsilon(1e-12));
      }
      else
      {
        CHECK(std::abs(c[j]) <= 1e-13);
      }
    }
  }
  CHECK_THROWS_AS(SpectralCorrection(n, std::vector<double>(10, 0.0)), Error);
  std::vector<double> bad(m * m, 0.0);
  bad[2] = std::nan("");
  CHECK_THROWS_AS(SpectralCorrection(n, bad), Error);
}

TEST_CASE("hybrid step reports divergence")
{
  const int n = 8;
  const auto A = assemble_anisotropic({1.0, 0.0, n});
  const auto f = oracle::random_vector<double>(A.rows(), 1);
  const SpectralCorrection corr(n, std::vector<double>(A.rows(), 0.0));
  CHECK_THROWS_AS(fns_lite_step(A, f, std::vector<double>(A.rows(), 0.0), WeightSchedule::Plain({1e300}), 200,
                                corr, Preconditioner<double>()),
                  DivergenceError);
}

TEST_CASE("bucket grid indexing")
{
  BucketGrid g;
  CHECK(g.Index(std::vector<double>{-6.0, 0.0}) == 0);
  CHECK(g.Index(std::vector<double>{0.0, std::numbers::pi}) == 255);
  for (int idx : {0, 17, 100, 255})
  {
    CHECK(g.Index(g.Center(idx)) == idx);
  }
}

namespace
{

FnsTrainConfig tiny_fns()
{
  FnsTrainConfig c;
  c.base.m = 2;
  c.base.hidden = {8, 8};
  c.base.batch_size = 4;
  c.base.seed = 3;
  c.base.learning_rate = 1e-2;
  c.base.validation_fraction = 0.25;
  c.steps = 2;
  c.smoothing = 3;
  c.cycles = 1;
  c.interval = 2;
  return c;
}

}  // namespace

TEST_CASE("alternating training with zero cycles returns phase-0 artifacts")
{
  const auto data = build_dataset<double>(sample_manifest("anisotropic", 12, 8, 8));
  auto c = tiny_fns();
  c.cycles = 0;
  const auto r = train_fns_lite(c, data);
  REQUIRE(r.phases.size() == 1);
  CHECK(r.phases[0].name == "lambda");
  CHECK(r.best_phase == 0);
  CHECK_FALSE(r.model.net_active);
  CHECK(r.model.fixed_schedule.omega == std::vector<double>(2, 0.5));
  CHECK_FALSE(r.model.lambda.empty());
}

TEST_CASE("alternating training freezes the inactive parameters")
{
  const auto data = build_dataset<double>(sample_manifest("anisotropic", 12, 9, 8));
  auto c = tiny_fns();
  c.cycles = 2;
  std::vector<FnsLiteModel> snaps;
  std::vector<std::string> names;
  const auto r = train_fns_lite(c, data, [&](const FnsPhase &p, const FnsLiteModel &m) {
    names.push_back(p.name);
    snaps.push_back(m);
  });
  REQUIRE(snaps.size() >= 3);
  CHECK(names[0] == "lambda");
  for (std::size_t k = 1; k < snaps.size(); k++)
  {
    if (names[k] == "omega")
    {
      CHECK(snaps[k].lambda == snaps[k - 1].lambda);
      CHECK(snaps[k].net_active);
    }
    else
    {
      CHECK(snaps[k].omega_net.Parameters() == snaps[k - 1].omega_net.Parameters());
      CHECK(snaps[k].net_active == snaps[k - 1].net_active);
    }
  }
  double best = r.phases[0].validation_loss;
  for (const auto &p : r.phases)
  {
    best = std::min(best, p.validation_loss);
  }
  CHECK(r.phases[r.best_phase].validation_loss == best);

  Checkpoint ck;
  store_fns_lite(ck, r.model);
  std::stringstream ss;
  write_checkpoint(ss, ck);
  const auto back = restore_fns_lite(read_checkpoint(ss));
  CHECK(back.lambda == r.model.lambda);
  CHECK(back.omega_net.Parameters() == r.model.omega_net.Parameters());
  CHECK(back.net_active == r.model.net_active);
  const auto mu = data.items[0].mu;
  CHECK(back.CorrectionFor(mu).lambda_tilde == r.model.CorrectionFor(mu).lambda_tilde);
}

TEST_CASE("untrained buckets use their center's Rayleigh-quotient start")
{
  FnsLiteModel model;
  model.n = 16;
  model.lambda[0] = std::vector<double>(15 * 15, 1.0);
  const std::vector<double> mu{-2.0, std::numbers::pi / 10};
  const int b = model.grid.Index(mu);
  REQUIRE(b != 0);
  const auto c = model.grid.Center(b);
  const auto expect = sine_rayleigh_inverse(assemble_anisotropic({std::pow(10.0, c[0]), c[1], 16}), 16);
  CHECK(model.LambdaFor(mu) == expect);
  model.lambda[b] = std::vector<double>(15 * 15, 2.0);
  CHECK(model.LambdaFor(mu) == model.lambda[b]);
}

TEST_CASE("alternating training requires an anisotropic dataset")
{
  const auto data = build_dataset<Complex>(sample_manifest("helmholtz", 4, 1, 32));
  Dataset<double> empty;
  empty.manifest = data.manifest;
  CHECK_THROWS_AS(train_fns_lite(tiny_fns(), empty), ConfigError);
}
