// SPDX-License-Identifier: Apache-2.0

#include "richlab/fns_lite.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "richlab/assembly.hpp"
#include "richlab/parallel.hpp"
#include "richlab/unroll.hpp"

namespace richlab
{

SpectralCorrection::SpectralCorrection(std::size_t n_cells, std::vector<double> lambda)
    : lambda_tilde(std::move(lambda)), plan(std::make_shared<const SineTransform2D>(n_cells))
{
  Validate();
}

void SpectralCorrection::Validate() const
{
  if (!plan)
  {
    throw Error("spectral correction: missing transform");
  }
  if (lambda_tilde.size() != plan->Size())
  {
    throw DimensionError("spectral correction coefficients", plan->Size(), lambda_tilde.size());
  }
  if (!all_finite(lambda_tilde))
  {
    throw Error("spectral correction: coefficients must be finite");
  }
}

std::vector<double> SpectralCorrection::Apply(std::span<const double> r) const
{
  auto c = plan->Forward(r);
  for (std::size_t k = 0; k < c.size(); k++)
  {
    c[k] *= lambda_tilde[k];
  }
  return plan->Forward(c);
}

std::vector<double> sine_rayleigh_inverse(const SparseMatrix<double> &A, std::size_t n_cells)
{
  const std::size_t m = n_cells - 1;
  if (A.rows() != m * m || !A.square())
  {
    throw DimensionError("sine Rayleigh quotients", m * m, A.rows());
  }
  const double N = static_cast<double>(n_cells);
  // sin(p pi i / N) for p, i = 1..m
  std::vector<double> sines(m * m);
  for (std::size_t p = 0; p < m; p++)
  {
    for (std::size_t i = 0; i < m; i++)
    {
      sines[p * m + i] = std::sin(std::numbers::pi * static_cast<double>((p + 1) * (i + 1)) / N);
    }
  }
  std::vector<double> out(m * m), s(m * m), As(m * m);
  for (std::size_t q = 0; q < m; q++)
  {
    for (std::size_t p = 0; p < m; p++)
    {
      for (std::size_t j = 0; j < m; j++)
      {
        for (std::size_t i = 0; i < m; i++)
        {
          s[j * m + i] = (2.0 / N) * sines[p * m + i] * sines[q * m + j];
        }
      }
      A.Mult(s, As);
      const double rq = dot(s, As);
      out[q * m + p] = rq != 0.0 ? 1.0 / rq : 0.0;
    }
  }
  return out;
}

std::vector<double> fns_lite_step(const SparseMatrix<double> &A, std::span<const double> f,
                                  std::span<const double> u, const WeightSchedule &schedule,
                                  int smoothing, const SpectralCorrection &corr,
                                  const Preconditioner<double> &P)
{
  const auto n = A.rows();
  if (f.size() != n || u.size() != n)
  {
    throw DimensionError("hybrid step", n, f.size() != n ? f.size() : u.size());
  }
  if (corr.lambda_tilde.size() != n)
  {
    throw DimensionError("hybrid step correction", n, corr.lambda_tilde.size());
  }
  if (smoothing < 0)
  {
    throw ConfigError("hybrid step: smoothing count must be >= 0");
  }
  std::vector<double> x(u.begin(), u.end()), v(n, 0.0), r(n);
  SweepWorkspace<double> work(n);
  for (int i = 0; i < smoothing; i++)
  {
    const int slot = i % schedule.m();
    inner_step<double>(A, f, x, v, schedule.omega[slot], schedule.alpha[slot],
                       schedule.alpha_tilde[slot], P, work);
  }
  residual<double>(A, f, x, r);
  const auto e = corr.Apply(r);
  for (std::size_t i = 0; i < n; i++)
  {
    x[i] += e[i];
  }
  if (!all_finite(x))
  {
    throw DivergenceError("hybrid step produced a non-finite iterate", 0, norm2(r));
  }
  return x;
}

int BucketGrid::Index(std::span<const double> mu) const
{
  if (mu.size() != 2)
  {
    throw DimensionError("bucket lookup", 2, mu.size());
  }
  auto bin = [this](double x, double lo, double hi) {
    const int b = static_cast<int>(std::floor((x - lo) / (hi - lo) * bins));
    return std::clamp(b, 0, bins - 1);
  };
  return bin(mu[1], theta_lo, theta_hi) * bins + bin(mu[0], lg_lo, lg_hi);
}

std::vector<double> BucketGrid::Center(int index) const
{
  const int be = index % bins, bt = index / bins;
  return {lg_lo + (be + 0.5) * (lg_hi - lg_lo) / bins,
          theta_lo + (bt + 0.5) * (theta_hi - theta_lo) / bins};
}

WeightSchedule FnsLiteModel::ScheduleFor(std::span<const double> mu) const
{
  return net_active ? omega_net.Forward(mu) : fixed_schedule;
}

namespace
{

std::vector<double> bucket_initial_lambda(const BucketGrid &grid, int bucket, int n)
{
  const auto c = grid.Center(bucket);
  return sine_rayleigh_inverse(assemble_anisotropic({std::pow(10.0, c[0]), c[1], n}), static_cast<std::size_t>(n));
}

}  // namespace

std::vector<double> FnsLiteModel::LambdaFor(std::span<const double> mu) const
{
  const int b = grid.Index(mu);
  const auto it = lambda.find(b);
  return it != lambda.end() ? it->second : bucket_initial_lambda(grid, b, n);
}

SpectralCorrection FnsLiteModel::CorrectionFor(std::span<const double> mu) const
{
  return SpectralCorrection(static_cast<std::size_t>(n), LambdaFor(mu));
}

SolveResult<std::vector<double>> solve_fns_lite(const SparseMatrix<double> &A,
                                                const std::vector<double> &f,
                                                const WeightSchedule &schedule, int smoothing,
                                                const SpectralCorrection &corr,
                                                const Preconditioner<double> &P,
                                                const StationaryOptions &opts)
{
  if (!(opts.tol > 0.0))
  {
    throw ConfigError("solve_fns_lite: tol must be positive");
  }
  schedule.Validate();
  const auto start = std::chrono::steady_clock::now();
  SolveResult<std::vector<double>> out;
  auto &report = out.report;
  out.u.assign(A.rows(), 0.0);
  const double fnorm = norm2(f);
  if (fnorm == 0.0)
  {
    report.converged = true;
    report.final_relative_residual = 0.0;
    report.trace = {0.0};
    report.stop_reason = "zero right-hand side";
    return out;
  }
  std::vector<double> r(A.rows());
  double rel = 1.0;
  report.trace.push_back(rel);
  report.stop_reason = "max_outer reached";
  long k = 0;
  while (k < opts.max_outer)
  {
    try
    {
      out.u = fns_lite_step(A, f, out.u, schedule, smoothing, corr, P);
    }
    catch (const DivergenceError &)
    {
      throw DivergenceError("solve_fns_lite diverged", k + 1, rel);
    }
    k++;
    residual<double>(A, f, out.u, r);
    rel = norm2(r) / fnorm;
    report.trace.push_back(rel);
    if (!std::isfinite(rel) || rel > opts.divergence_factor)
    {
      throw DivergenceError("solve_fns_lite diverged: relative residual " + std::to_string(rel),
                            k, rel);
    }
    if (rel <= opts.tol)
    {
      report.converged = true;
      report.stop_reason = "relative residual below tol";
      break;
    }
  }
  report.iterations = k;
  report.inner_iterations = k * smoothing;
  report.final_relative_residual = rel;
  report.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

void FnsTrainConfig::Validate() const
{
  base.Validate();
  if (steps < 1 || smoothing < 0 || cycles < 0 || interval < 0 || max_interval < 1 ||
      plateau_window < 1 || !(plateau_tol >= 0.0) || !(omega0 > 0.0) ||
      !(lambda_learning_rate > 0.0) || bins < 1)
  {
    throw ConfigError("hybrid training: invalid configuration");
  }
}

namespace
{

struct HybridEval
{
  int bucket = 0;
  UnrollGradient grad;
};

HybridEval evaluate(const FnsLiteModel &model, const TrainingInstance<double> &item,
                    const WeightSchedule &schedule, const std::vector<UnrollStep> &program,
                    bool with_gradient)
{
  HybridEval out;
  out.bucket = model.grid.Index(item.instance->mu);
  const auto lam = model.LambdaFor(item.instance->mu);
  const SineTransform2D plan(static_cast<std::size_t>(model.n));
  UnrolledIteration<double> it(item.instance->A, item.instance->f, *item.P, program, &plan);
  it.Forward(schedule, lam);
  if (with_gradient)
  {
    out.grad = it.Backward();
  }
  else
  {
    out.grad.loss = it.Loss();
  }
  if (!std::isfinite(out.grad.loss))
  {
    throw Error("non-finite hybrid training loss (bucket " + std::to_string(out.bucket) + ")");
  }
  return out;
}

}  // namespace

double fns_lite_loss(const FnsLiteModel &model, std::span<const TrainingInstance<double>> batch,
                     int steps)
{
  if (batch.empty())
  {
    throw Error("hybrid loss: empty batch");
  }
  const int m = model.ScheduleFor(batch.front().instance->mu).m();
  const auto program = hybrid_program(steps, model.smoothing, m);
  double s = 0.0;
  for (const auto &item : batch)
  {
    s += evaluate(model, item, model.ScheduleFor(item.instance->mu), program, false).grad.loss;
  }
  return s / static_cast<double>(batch.size());
}

FnsTrainResult train_fns_lite(const FnsTrainConfig &config, const Dataset<double> &data,
                              const PhaseObserver &observer)
{
  config.Validate();
  if (data.manifest.kind != ProblemKind::Anisotropic)
  {
    throw ConfigError("hybrid training requires an anisotropic dataset");
  }
  if (data.size() == 0)
  {
    throw ConfigError("hybrid training: empty dataset");
  }
  const auto &base = config.base;
  const auto items = prepare_instances(data, PreconditionerSpec{});
  std::vector<std::size_t> train_idx, val_idx;
  split_indices(items.size(), base.validation_fraction, base.seed, train_idx, val_idx);
  if (val_idx.empty())
  {
    val_idx = train_idx;
  }
  std::vector<TrainingInstance<double>> val_set;
  for (auto i : val_idx)
  {
    val_set.push_back(items[i]);
  }

  FnsLiteModel model;
  model.n = data.manifest.n;
  model.smoothing = config.smoothing;
  model.grid.bins = config.bins;
  model.fixed_schedule = WeightSchedule::Plain(std::vector<double>(base.m, config.omega0));
  TrainConfig net_cfg = base;
  net_cfg.initial_omega = config.omega0;
  net_cfg.initial_omega_spread = 1.0;
  model.omega_net = MetaNet(net_config(net_cfg, Variant::Plain, ProblemKind::Anisotropic, model.n));
  for (auto i : train_idx)
  {
    const int b = model.grid.Index(items[i].instance->mu);
    if (!model.lambda.count(b))
    {
      model.lambda[b] = bucket_initial_lambda(model.grid, b, model.n);
    }
  }

  const auto program = hybrid_program(config.steps, config.smoothing, base.m);
  std::mt19937_64 rng(base.seed);
  const auto nb = static_cast<std::size_t>(base.batch_size);
  const std::size_t batches = std::max<std::size_t>(1, train_idx.size() / nb);

  FnsTrainResult result;
  double best = std::numeric_limits<double>::infinity();
  int above = 0;
  std::vector<double> all_losses;

  auto run_phase = [&](const std::string &name) {
    FnsPhase phase;
    phase.name = name;
    const bool train_lambda = name == "lambda";
    std::map<int, Adam> lambda_opt;
    Adam net_opt(model.omega_net.ParameterCount(), base.learning_rate);
    auto params = model.omega_net.Parameters();
    for (int epoch = 0;; epoch++)
    {
      if (config.interval > 0 && epoch >= config.interval)
      {
        break;
      }
      if (config.interval == 0)
      {
        const auto &L = phase.train_loss;
        const auto w = static_cast<std::size_t>(config.plateau_window);
        if (epoch >= config.max_interval)
        {
          break;
        }
        if (L.size() > w && L[L.size() - 1 - w] - L.back() < config.plateau_tol * L[L.size() - 1 - w])
        {
          break;
        }
      }
      std::shuffle(train_idx.begin(), train_idx.end(), rng);
      double sum = 0.0;
      for (std::size_t b = 0; b < batches; b++)
      {
        std::vector<std::size_t> batch(train_idx.begin() + static_cast<std::ptrdiff_t>(b * nb),
                                       train_idx.begin() + static_cast<std::ptrdiff_t>(
                                                               std::min(train_idx.size(), (b + 1) * nb)));
        const double scale = 1.0 / static_cast<double>(batch.size());
        if (train_lambda)
        {
          std::vector<HybridEval> evals(batch.size());
          parallel_for(batch.size(), base.threads, [&](std::size_t k) {
            const auto &item = items[batch[k]];
            evals[k] = evaluate(model, item, model.ScheduleFor(item.instance->mu), program, true);
          });
          std::map<int, std::vector<double>> grads;
          for (const auto &e : evals)
          {
            sum += e.grad.loss * scale;
            auto &g = grads[e.bucket];
            g.resize(e.grad.d_lambda.size(), 0.0);
            for (std::size_t k = 0; k < g.size(); k++)
            {
              g[k] += e.grad.d_lambda[k] * scale;
            }
          }
          for (auto &[bucket, g] : grads)
          {
            auto &lam = model.lambda.at(bucket);
            auto it = lambda_opt.find(bucket);
            if (it == lambda_opt.end())
            {
              it = lambda_opt.emplace(bucket, Adam(lam.size(), config.lambda_learning_rate)).first;
            }
            it->second.Step(lam, g);
          }
        }
        else
        {
          Tape tape;
          const auto vars = model.omega_net.Bind(tape);
          std::vector<std::vector<Var>> outs;
          for (auto i : batch)
          {
            outs.push_back(model.omega_net.Outputs(tape, vars, items[i].instance->mu));
          }
          std::vector<HybridEval> evals(batch.size());
          parallel_for(batch.size(), base.threads, [&](std::size_t k) {
            std::vector<double> packed;
            for (const auto &o : outs[k])
            {
              packed.push_back(o.value);
            }
            evals[k] = evaluate(model, items[batch[k]],
                                WeightSchedule::Unpack(Variant::Plain, base.m, packed), program,
                                true);
          });
          std::vector<Var> losses;
          for (std::size_t k = 0; k < batch.size(); k++)
          {
            std::vector<std::size_t> parents;
            for (const auto &o : outs[k])
            {
              parents.push_back(o.index);
            }
            losses.push_back(tape.Record(evals[k].grad.loss, parents,
                                         packed_gradient(evals[k].grad, Variant::Plain)));
          }
          const auto loss = mean(losses);
          sum += loss.value;
          auto g = gradient(loss, tape, vars);
          if (base.grad_clip > 0.0)
          {
            clip_global_norm(g, base.grad_clip);
          }
          net_opt.Step(params, g);
          model.omega_net.SetParameters(params);
        }
      }
      const double epoch_loss = sum / static_cast<double>(batches);
      phase.train_loss.push_back(epoch_loss);
      all_losses.push_back(epoch_loss);
      above = epoch_loss > 1e3 ? above + 1 : 0;
      if (above >= 3)
      {
        TrainHistory h;
        h.train_loss = all_losses;
        throw TrainingDivergedError("hybrid training diverged: loss above 1e3 for 3 consecutive epochs", h);
      }
    }
    phase.validation_loss = fns_lite_loss(model, val_set, config.steps);
    result.phases.push_back(phase);
    if (observer)
    {
      observer(phase, model);
    }
    if (phase.validation_loss < best)
    {
      best = phase.validation_loss;
      result.model = model;
      result.best_phase = static_cast<int>(result.phases.size()) - 1;
      return true;
    }
    return false;
  };

  run_phase("lambda");
  model.net_active = true;
  for (int cycle = 1; cycle <= config.cycles; cycle++)
  {
    const bool improved_net = run_phase("omega");
    const bool improved_lambda = run_phase("lambda");
    if (!improved_net && !improved_lambda)
    {
      result.early_stopped = cycle < config.cycles;
      break;
    }
  }
  return result;
}

void store_fns_lite(Checkpoint &ck, const FnsLiteModel &model)
{
  store_net(ck, model.omega_net);
  ck.Set("model", "fns-lite");
  ck.Set("grid_n", std::to_string(model.n));
  ck.Set("smoothing", std::to_string(model.smoothing));
  ck.Set("net_active", model.net_active ? "1" : "0");
  ck.Set("fixed_omega", join_doubles(model.fixed_schedule.omega));
  ck.Set("bins", std::to_string(model.grid.bins));
  std::vector<double> ids, lam;
  for (const auto &[b, l] : model.lambda)
  {
    ids.push_back(static_cast<double>(b));
    lam.insert(lam.end(), l.begin(), l.end());
  }
  ck.arrays.emplace_back("lambda_buckets", ids);
  ck.arrays.emplace_back("lambda_tilde", lam);
}

FnsLiteModel restore_fns_lite(const Checkpoint &ck)
{
  if (!ck.Has("model") || ck.Get("model") != "fns-lite")
  {
    throw Error("checkpoint does not hold a hybrid model");
  }
  FnsLiteModel model;
  model.omega_net = restore_net(ck);
  model.n = std::stoi(ck.Get("grid_n"));
  model.smoothing = std::stoi(ck.Get("smoothing"));
  model.net_active = ck.Get("net_active") == "1";
  model.fixed_schedule = WeightSchedule::Plain(split_doubles(ck.Get("fixed_omega")));
  model.grid.bins = std::stoi(ck.Get("bins"));
  const auto &ids = ck.Array("lambda_buckets");
  const auto &lam = ck.Array("lambda_tilde");
  const auto size = static_cast<std::size_t>((model.n - 1) * (model.n - 1));
  if (lam.size() != ids.size() * size)
  {
    throw DimensionError("checkpoint lambda_tilde", ids.size() * size, lam.size());
  }
  for (std::size_t k = 0; k < ids.size(); k++)
  {
    model.lambda[static_cast<int>(ids[k])] =
        std::vector<double>(lam.begin() + static_cast<std::ptrdiff_t>(k * size),
                            lam.begin() + static_cast<std::ptrdiff_t>((k + 1) * size));
  }
  return model;
}

}  // namespace richlab
