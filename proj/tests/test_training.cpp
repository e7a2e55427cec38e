// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "reference.hpp"
#include "richlab/checkpoint.hpp"
#include "richlab/richardson.hpp"
#include "richlab/training.hpp"

using namespace richlab;

namespace
{

MetaNetConfig small_config(Variant v, int m, std::uint64_t seed = 1)
{
  MetaNetConfig c;
  c.variant = v;
  c.m = m;
  c.seed = seed;
  return c;
}

Instance<double> spd_instance(int n, std::uint64_t seed, std::vector<double> mu)
{
  Instance<double> in;
  in.spec = AnisotropicProblem{1.0, 0.0, 2};
  in.mu = std::move(mu);
  in.A = oracle::random_spd(n, seed);
  in.f = oracle::random_vector<double>(n, seed + 1000);
  return in;
}

std::vector<TrainingInstance<double>> wrap(const std::vector<Instance<double>> &items,
                                           PreconditionerSpec spec = {})
{
  std::vector<TrainingInstance<double>> out;
  for (const auto &in : items)
  {
    out.push_back({&in, std::make_shared<const Preconditioner<double>>(in.A, spec)});
  }
  return out;
}

// Straight-line dense recurrence with Eigen, independent of the library's iterators.
double scripted_loss(const Instance<double> &in, const WeightSchedule &s, int K)
{
  const auto A = oracle::to_dense(in.A);
  const auto f = oracle::to_eigen(in.f);
  const auto n = A.rows();
  oracle::Vec<double> u = oracle::Vec<double>::Zero(n), v = oracle::Vec<double>::Zero(n);
  for (int k = 0; k < K; k++)
  {
    for (int i = 0; i < s.m(); i++)
    {
      const double at = s.variant == Variant::Plain || s.variant == Variant::Mom ? 0.0 : s.alpha_tilde[i];
      const double al = s.variant == Variant::Plain ? 0.0 : s.alpha[i];
      const oracle::Vec<double> look = u + at * v;
      v = al * v + s.omega[i] * (f - A * look);
      u += v;
    }
  }
  return (f - A * u).norm() / f.norm();
}

}  // namespace

TEST_CASE("meta_forward: zero output layer gives the positive map of 0")
{
  for (auto map : {OmegaMap::Softplus, OmegaMap::Exp})
  {
    auto c = small_config(Variant::NagEx, 3);
    c.omega_map = map;
    MetaNet net(c);
    net.ZeroOutputLayer();
    const std::vector<double> mu{-2.0, 1.0};
    const auto s = meta_forward(net, mu);
    for (int i = 0; i < 3; i++)
    {
      CHECK(s.omega[i] == (map == OmegaMap::Softplus ? std::log(2.0) : 1.0));
      CHECK(s.alpha[i] == 0.5);
      CHECK(s.alpha_tilde[i] == 0.5);
    }
  }
}

TEST_CASE("meta_forward is deterministic and shapes match the variant")
{
  const std::vector<double> mu{-3.0, 2.0};
  for (auto v : {Variant::Plain, Variant::Mom, Variant::Nag, Variant::NagEx})
  {
    MetaNet net(small_config(v, 4, 9));
    CHECK(net.OutputDim() == 4 * weights_per_step(v));
    const auto a = meta_forward(net, mu), b = meta_forward(net, mu);
    CHECK(a.omega == b.omega);
    CHECK(a.alpha == b.alpha);
    CHECK(a.alpha_tilde == b.alpha_tilde);
    CHECK_NOTHROW(a.Validate());
    for (int i = 0; i < 4; i++)
    {
      CHECK(a.omega[i] > 0.0);
      if (v != Variant::Plain)
      {
        CHECK(a.alpha[i] >= 0.0);
        CHECK(a.alpha[i] < 1.0);
      }
    }
  }
  MetaNet net(small_config(Variant::Plain, 2));
  auto p = net.Parameters();
  p[3] = std::nan("");
  CHECK_THROWS_AS(net.SetParameters(p), Error);
}

TEST_CASE("fresh networks start near the configured schedule")
{
  auto c = small_config(Variant::Mom, 3, 4);
  c.initial_omega = 0.7;
  c.initial_alpha = 0.2;
  MetaNet net(c);
  const auto s = meta_forward(net, std::vector<double>{-3.0, 1.5});
  for (int i = 0; i < 3; i++)
  {
    CHECK(std::abs(s.omega[i] - 0.7) < 0.2);
    CHECK(std::abs(s.alpha[i] - 0.2) < 0.1);
  }
}

TEST_CASE("initial omega ladder spans initial_omega to spread times it")
{
  auto c = small_config(Variant::Plain, 3, 4);
  c.initial_omega = 0.3;
  c.initial_omega_spread = 3.0;
  c.output_weight_scale = 0.0;
  MetaNet net(c);
  const auto s = meta_forward(net, std::vector<double>{-1.0, 0.5});
  CHECK(s.omega[0] == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(s.omega[1] == doctest::Approx(0.3 * std::sqrt(3.0)).epsilon(1e-12));
  CHECK(s.omega[2] == doctest::Approx(0.9).epsilon(1e-12));
  c.initial_omega_spread = 0.0;
  CHECK_THROWS_AS(MetaNet{c}, ConfigError);
}

TEST_CASE("gradient clipping rescales only oversized gradients")
{
  std::vector<double> g{3.0, 4.0};
  clip_global_norm(g, 1.0);
  CHECK(g[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(g[1] == doctest::Approx(0.8).epsilon(1e-15));
  std::vector<double> h{0.03, 0.04};
  clip_global_norm(h, 1.0);
  CHECK(h == std::vector<double>{0.03, 0.04});
}

TEST_CASE("perturbing a hidden weight moves omega by the tape derivative")
{
  MetaNet net(small_config(Variant::Plain, 2, 3));
  const std::vector<double> mu{-1.5, 0.8};
  const std::size_t probe = net.WeightOffset(1) + 5;
  Tape tape;
  const auto vars = net.Bind(tape);
  const auto out = net.Outputs(tape, vars, mu);
  const auto g = gradient(out[0], tape, vars);
  REQUIRE(std::abs(g[probe]) > 0.0);

  auto p = net.Parameters();
  const double base = net.Outputs(mu)[0];
  p[probe] += 1e-6;
  net.SetParameters(p);
  const double moved = net.Outputs(mu)[0] - base;
  CHECK(std::abs(moved - g[probe] * 1e-6) <= 1e-4 * std::abs(g[probe] * 1e-6));
}

TEST_CASE("tape reuse and foreign outputs are rejected")
{
  Tape tape;
  const auto x = tape.Variable(2.0);
  const auto y = x * x + 3.0 * x;
  const auto g = tape.Gradient(y);
  CHECK(g[x.index] == 7.0);
  CHECK_THROWS_AS(tape.Gradient(y), Error);
  Tape other;
  const auto z = other.Variable(1.0);
  Tape third;
  CHECK_THROWS_AS(third.Gradient(z), Error);
}

TEST_CASE("tape elementary derivatives match closed forms")
{
  const double x0 = 0.37;
  Tape tape;
  const auto x = tape.Variable(x0);
  const auto y = tanh(x) + exp(x) + log(x) + softplus(x) + sigmoid(x) + x / (x + 1.0) - x;
  const auto g = tape.Gradient(y);
  const double s = 1.0 / (1.0 + std::exp(-x0));
  const double expect = (1.0 - std::tanh(x0) * std::tanh(x0)) + std::exp(x0) + 1.0 / x0 + s +
                        s * (1.0 - s) + 1.0 / ((x0 + 1.0) * (x0 + 1.0)) - 1.0;
  CHECK(g[x.index] == doctest::Approx(expect).epsilon(1e-14));
  CHECK(softplus_inverse(softplus(0.3)) == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(logit(sigmoid(-1.2)) == doctest::Approx(-1.2).epsilon(1e-14));
}

TEST_CASE("loss examples")
{
  std::vector<Instance<double>> items{spd_instance(8, 1, {-2.0, 1.0}), spd_instance(8, 2, {-4.0, 0.3})};
  const auto batch = wrap(items);
  MetaNet net(small_config(Variant::Nag, 3, 5));
  CHECK(loss_relative_residual<double>(batch, net, 0) == 1.0);

  Instance<double> id;
  id.spec = AnisotropicProblem{1.0, 0.0, 2};
  id.mu = {-1.0, 1.0};
  id.A = SparseMatrix<double>::Identity(8);
  id.f = oracle::random_vector<double>(8, 77);
  std::vector<Instance<double>> ids{id};
  CHECK(loss_with_schedule<double>(wrap(ids), WeightSchedule::Plain({1.0}), 1) == 0.0);

  CHECK_THROWS_AS(loss_relative_residual<double>({}, net, 3), Error);
}

TEST_CASE("loss equals a scripted dense recomputation")
{
  std::vector<Instance<double>> items;
  for (std::uint64_t s = 0; s < 6; s++)
  {
    items.push_back(spd_instance(8, 40 + s, {-0.5 - 0.8 * double(s), 0.4 * double(s)}));
  }
  const auto batch = wrap(items);
  for (auto v : {Variant::Plain, Variant::Mom, Variant::Nag, Variant::NagEx})
  {
    auto c = small_config(v, 3, 6);
    c.initial_omega = 0.05;
    c.initial_alpha = 0.3;
    MetaNet net(c);
    double ref = 0.0;
    for (const auto &in : items)
    {
      ref += scripted_loss(in, net.Forward(in.mu), 7);
    }
    ref /= double(items.size());
    const double got = loss_relative_residual<double>(batch, net, 7);
    CHECK(std::abs(got - ref) <= 1e-13 * std::max(1.0, ref));
  }
}

TEST_CASE("non-finite loss names the offending instance")
{
  std::vector<Instance<double>> items{spd_instance(8, 3, {-1.0, 1.0}), spd_instance(8, 4, {-2.0, 2.0})};
  items[1].f[0] = std::nan("");
  MetaNet net(small_config(Variant::Plain, 2));
  try
  {
    (void)loss_relative_residual<double>(wrap(items), net, 2);
    FAIL("expected Error");
  }
  catch (const Error &e)
  {
    CHECK(std::string(e.what()).find("1") != std::string::npos);
  }
}

TEST_CASE("unrolled forward equals the stationary iterator")
{
  const auto A = assemble_anisotropic({0.03, 0.7, 8});
  const auto f = oracle::random_vector<double>(A.rows(), 5);
  const Preconditioner<double> P(A, {PreconditionerKind::Ssor, 1.1});
  const auto s = WeightSchedule::NagEx({0.3, 0.9, 0.5}, {0.2, 0.4, 0.1}, {0.3, 0.1, 0.6});
  UnrolledIteration<double> it(A, f, P, richardson_program(20, 3));
  it.Forward(s);
  auto st = IterationState<double>::Zero(A.rows());
  for (int k = 0; k < 20; k++)
  {
    st = outer_sweep(A, f, st, s, P);
  }
  CHECK(oracle::rel_err(it.Solution(), st.u) <= 1e-13);
}

TEST_CASE("loss is invariant under rhs scaling")
{
  std::vector<Instance<double>> items{spd_instance(8, 11, {-1.0, 0.5}), spd_instance(8, 12, {-5.0, 2.5})};
  MetaNet net(small_config(Variant::Mom, 2, 2));
  const double base = loss_relative_residual<double>(wrap(items), net, 6);
  for (auto &in : items)
  {
    for (auto &x : in.f)
    {
      x *= 1e5;
    }
  }
  CHECK(std::abs(loss_relative_residual<double>(wrap(items), net, 6) - base) <= 1e-12);
}

namespace
{

template <Field T>
void check_schedule_gradient(const SparseMatrix<T> &A, const std::vector<T> &f,
                             const Preconditioner<T> &P, const WeightSchedule &s, int K)
{
  const auto program = richardson_program(K, s.m());
  UnrolledIteration<T> it(A, f, P, program);
  it.Forward(s);
  const auto g = it.Backward();
  const auto packed = s.Packed();
  const auto gp = packed_gradient(g, s.variant);
  REQUIRE(gp.size() == packed.size());
  for (std::size_t k = 0; k < packed.size(); k++)
  {
    const double h = 1e-6 * std::max(1.0, std::abs(packed[k]));
    auto plus = packed, minus = packed;
    plus[k] += h;
    minus[k] -= h;
    const double fd = (unrolled_loss<T>(A, f, P, WeightSchedule::Unpack(s.variant, s.m(), plus), program) -
                       unrolled_loss<T>(A, f, P, WeightSchedule::Unpack(s.variant, s.m(), minus), program)) /
                      (2 * h);
    CHECK(std::abs(fd - gp[k]) <= 1e-5 * std::abs(gp[k]) + 1e-9);
  }
}

}  // namespace

TEST_CASE("schedule gradients of the unrolled loss match central differences")
{
  const auto A = assemble_anisotropic({0.2, 0.4, 6});
  const auto f = oracle::random_vector<double>(A.rows(), 3);
  for (auto spec : {PreconditionerSpec{}, PreconditionerSpec{PreconditionerKind::Ssor, 1.2}})
  {
    const Preconditioner<double> P(A, spec);
    const double w = spec.kind == PreconditionerKind::Identity ? 0.25 : 0.8;
    check_schedule_gradient<double>(A, f, P, WeightSchedule::Plain({w, 0.5 * w}), 4);
    check_schedule_gradient<double>(A, f, P, WeightSchedule::Mom({w, 0.5 * w}, {0.3, 0.6}), 4);
    check_schedule_gradient<double>(A, f, P, WeightSchedule::Nag({w, 0.5 * w}, {0.3, 0.6}), 4);
    check_schedule_gradient<double>(A, f, P, WeightSchedule::NagEx({w, 0.5 * w}, {0.3, 0.6}, {0.7, 0.1}), 4);
  }
}

TEST_CASE("complex schedule gradients match central differences")
{
  HelmholtzProblem hp;
  hp.omega = 2 * std::numbers::pi;
  hp.n = 16;
  const auto A = assemble_helmholtz(hp);
  const auto f = oracle::random_vector<Complex>(A.rows(), 4);
  const Preconditioner<Complex> P(A, {PreconditionerKind::WeightedJacobi, 0.6});
  check_schedule_gradient<Complex>(A, f, P, WeightSchedule::NagEx({0.7, 0.4}, {0.2, 0.5}, {0.3, 0.1}), 3);
}

TEST_CASE("network gradient matches central differences on every parameter")
{
  // N = 8 anisotropic instance, K = 5.
  const auto manifest = sample_manifest("anisotropic", 1, 17, 8);
  const auto data = build_dataset<double>(manifest);
  std::vector<TrainingInstance<double>> batch{
      {&data.items[0], std::make_shared<const Preconditioner<double>>()}};
  auto c = small_config(Variant::Nag, 3, 21);
  c.initial_omega = 0.2;
  MetaNet net(c);
  const int K = 5;
  const auto lg = loss_and_gradient<double>(batch, net, K);
  CHECK(lg.loss == loss_relative_residual<double>(batch, net, K));

  std::vector<long double> p(net.Parameters().begin(), net.Parameters().end());
  CHECK(std::abs(static_cast<double>(oracle::oracle_loss(net, p, data.items[0], K)) - lg.loss) <= 1e-13);
  std::size_t checked = 0, bad = 0;
  double worst = 0.0;
  for (std::size_t k = 0; k < p.size(); k++)
  {
    if (std::abs(lg.gradient[k]) <= 1e-8)
    {
      continue;
    }
    const long double h = 1e-6L * std::max(1.0L, std::abs(p[k]));
    const long double keep = p[k];
    p[k] = keep + h;
    const long double lp = oracle::oracle_loss(net, p, data.items[0], K);
    p[k] = keep - h;
    const long double lm = oracle::oracle_loss(net, p, data.items[0], K);
    p[k] = keep;
    const double fd = static_cast<double>((lp - lm) / (2 * h));
    const double rel = std::abs(fd - lg.gradient[k]) / std::abs(lg.gradient[k]);
    worst = std::max(worst, rel);
    checked++;
    bad += rel > 1e-5;
  }
  MESSAGE("checked ", checked, " of ", p.size(), " parameters, worst relative error ", worst);
  CHECK(checked > p.size() / 2);
  CHECK(bad == 0);
}

TEST_CASE("gradient is exactly zero for parameters the loss ignores")
{
  std::vector<Instance<double>> items{spd_instance(8, 5, {-1.0, 1.0})};
  const auto batch = wrap(items);
  MetaNet net(small_config(Variant::Plain, 2, 8));
  // Kill hidden unit 0 of the last hidden layer: its outgoing weights vanish, so its
  // incoming weights and bias no longer reach the loss.
  auto p = net.Parameters();
  const int L = static_cast<int>(net.Widths().size()) - 1;
  const auto widths = net.Widths();
  const int in = widths[L - 1], out = widths[L];
  for (int o = 0; o < out; o++)
  {
    p[net.WeightOffset(L - 1) + o * in] = 0.0;
  }
  net.SetParameters(p);
  const auto g = loss_and_gradient<double>(batch, net, 3).gradient;
  const int prev = widths[L - 2];
  for (int j = 0; j < prev; j++)
  {
    CHECK(g[net.WeightOffset(L - 2) + 0 * prev + j] == 0.0);
  }
  CHECK(g[net.BiasOffset(L - 2) + 0] == 0.0);
}

TEST_CASE("gradient is linear in the loss")
{
  std::vector<Instance<double>> items{spd_instance(8, 6, {-2.0, 0.2}), spd_instance(8, 7, {-3.0, 0.9})};
  const auto batch = wrap(items);
  MetaNet net(small_config(Variant::Mom, 2, 3));
  const auto base = loss_and_gradient<double>(batch, net, 4);
  Tape tape;
  const auto vars = net.Bind(tape);
  const auto loss = record_loss<double>(tape, vars, batch, net, 4);
  const auto g2 = gradient(2.0 * loss, tape, vars);
  for (std::size_t k = 0; k < g2.size(); k++)
  {
    CHECK(g2[k] == 2.0 * base.gradient[k]);
  }
}

namespace
{

TrainConfig tiny_train()
{
  TrainConfig c;
  c.K = 5;
  c.epochs = 6;
  c.batch_size = 4;
  c.m = 2;
  c.seed = 13;
  c.hidden = {8, 8};
  c.learning_rate = 3e-2;
  c.validation_fraction = 0.25;
  c.initial_omega = 0.15;
  return c;
}

}  // namespace

TEST_CASE("training with zero epochs returns the initial network")
{
  const auto data = build_dataset<double>(sample_manifest("anisotropic", 8, 3, 8));
  auto c = tiny_train();
  c.epochs = 0;
  const auto r = train_ns<double>(c, data, Variant::Mom, {});
  const MetaNet fresh(net_config(c, Variant::Mom, ProblemKind::Anisotropic, 8));
  CHECK(r.net.Parameters() == fresh.Parameters());
}

TEST_CASE("seeded training is bitwise reproducible")
{
  const auto data = build_dataset<double>(sample_manifest("anisotropic", 16, 4, 8));
  const auto c = tiny_train();
  const auto a = train_ns<double>(c, data, Variant::Nag, {});
  const auto b = train_ns<double>(c, data, Variant::Nag, {});
  CHECK(a.net.Parameters() == b.net.Parameters());
  CHECK(a.history.validation_loss == b.history.validation_loss);
  auto c2 = c;
  c2.threads = 3;
  const auto t = train_ns<double>(c2, data, Variant::Nag, {});
  CHECK(t.net.Parameters() == a.net.Parameters());
}

TEST_CASE("returned network is the argmin of recorded validation losses")
{
  const auto data = build_dataset<double>(sample_manifest("anisotropic", 16, 5, 8));
  auto c = tiny_train();
  c.learning_rate = 0.3;  // noisy on purpose
  c.epochs = 8;
  std::vector<double> seen;
  const auto r = train_ns<double>(c, data, Variant::Plain, {},
                                  [&](int, double, double val) { seen.push_back(val); });
  const auto &vl = r.history.validation_loss;
  REQUIRE(vl.size() == seen.size() + 1);
  const auto best = std::min_element(vl.begin(), vl.end()) - vl.begin();
  CHECK(r.history.best_epoch == best);

  std::vector<std::size_t> tr, va;
  split_indices(data.size(), c.validation_fraction, c.seed, tr, va);
  const auto items = prepare_instances(data, {});
  std::vector<TrainingInstance<double>> vset;
  for (auto i : va)
  {
    vset.push_back(items[i]);
  }
  CHECK(loss_relative_residual<double>(vset, r.net, c.K) == doctest::Approx(vl[best]).epsilon(1e-14));
}

TEST_CASE("patience stops training early")
{
  const auto data = build_dataset<double>(sample_manifest("anisotropic", 16, 6, 8));
  auto c = tiny_train();
  c.learning_rate = 2.0;
  c.epochs = 30;
  c.patience = 2;
  const auto r = train_ns<double>(c, data, Variant::Plain, {});
  if (r.history.early_stopped)
  {
    CHECK(r.history.train_loss.size() < 30);
  }
  CHECK(r.history.best_epoch >= 0);
}

TEST_CASE("diverging training aborts with its history")
{
  const auto data = build_dataset<double>(sample_manifest("anisotropic", 8, 7, 8));
  auto c = tiny_train();
  c.initial_omega = 3.0;  // omega * lambda_max well above 2
  c.learning_rate = 1e-12;
  c.epochs = 10;
  try
  {
    (void)train_ns<double>(c, data, Variant::Plain, {});
    FAIL("expected TrainingDivergedError");
  }
  catch (const TrainingDivergedError &e)
  {
    CHECK(e.history.train_loss.size() == 3);
  }
}

TEST_CASE("train config validation")
{
  TrainConfig c;
  c.K = 0;
  CHECK_THROWS_AS(c.Validate(), ConfigError);
  c = TrainConfig{};
  c.batch_size = 0;
  CHECK_THROWS_AS(c.Validate(), ConfigError);
  c = TrainConfig{};
  c.optimizer = "lbfgs";
  CHECK_THROWS_AS(c.Validate(), ConfigError);
  c = TrainConfig{};
  c.grad_clip = -1.0;
  CHECK_THROWS_AS(c.Validate(), ConfigError);
}

TEST_CASE("checkpoints round-trip bit-exactly")
{
  auto c = small_config(Variant::NagEx, 3, 44);
  c.omega_map = OmegaMap::Exp;
  MetaNet net(c);
  Checkpoint ck;
  store_net(ck, net, "K=50");
  std::stringstream ss;
  write_checkpoint(ss, ck);
  const auto first = ss.str();
  const auto back = restore_net(read_checkpoint(ss));
  CHECK(back.Parameters() == net.Parameters());
  CHECK(back.Widths() == net.Widths());
  CHECK(back.GetVariant() == Variant::NagEx);
  CHECK(back.Config().omega_map == OmegaMap::Exp);
  const std::vector<double> mu{-2.5, 0.9};
  CHECK(back.Outputs(mu) == net.Outputs(mu));

  Checkpoint again;
  store_net(again, back, "K=50");
  std::stringstream s2;
  write_checkpoint(s2, again);
  CHECK(s2.str() == first);

  std::stringstream broken(first.substr(0, first.size() / 2));
  CHECK_THROWS_AS(read_checkpoint(broken), Error);
  for (double x : {0.1, -1e-300, 1.0 / 3.0, 6.02214076e23})
  {
    CHECK(std::stod(exact_decimal(x)) == x);
  }
}
