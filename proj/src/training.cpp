// SPDX-License-Identifier: Apache-2.0

#include "richlab/training.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "richlab/parallel.hpp"

namespace richlab
{

void clip_global_norm(std::span<double> g, double limit)
{
  double s = 0.0;
  for (double x : g)
  {
    s += x * x;
  }
  const double norm = std::sqrt(s);
  if (norm > limit)
  {
    for (double &x : g)
    {
      x *= limit / norm;
    }
  }
}

void TrainConfig::Validate() const
{
  if (K < 1)
  {
    throw ConfigError("training: K must be >= 1");
  }
  if (!(grad_clip >= 0.0))
  {
    throw ConfigError("training: gradient clip must be >= 0");
  }
  if (batch_size < 1)
  {
    throw ConfigError("training: batch size must be >= 1");
  }
  if (epochs < 0)
  {
    throw ConfigError("training: epochs must be >= 0");
  }
  if (m < 1)
  {
    throw ConfigError("training: m must be >= 1");
  }
  if (!(learning_rate > 0.0))
  {
    throw ConfigError("training: learning rate must be positive");
  }
  if (optimizer != "adam")
  {
    throw ConfigError("training: unsupported optimizer '" + optimizer + "'");
  }
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
  {
    throw ConfigError("training: validation fraction must lie in [0, 1)");
  }
  if (patience < 0 || threads < 1)
  {
    throw ConfigError("training: patience must be >= 0 and threads >= 1");
  }
}

namespace
{

template <Field T>
std::string describe(const TrainingInstance<T> &item, std::size_t position)
{
  std::ostringstream os;
  os << "batch position " << position << " (mu =";
  for (double x : item.instance->mu)
  {
    os << ' ' << x;
  }
  os << ')';
  return os.str();
}

template <Field T>
void check_loss(double loss, const TrainingInstance<T> &item, std::size_t position)
{
  if (!std::isfinite(loss))
  {
    throw Error("non-finite training loss on " + describe(item, position));
  }
}

}  // namespace

template <Field T>
std::vector<TrainingInstance<T>> prepare_instances(const Dataset<T> &data, PreconditionerSpec P)
{
  std::vector<TrainingInstance<T>> out;
  out.reserve(data.size());
  for (const auto &item : data.items)
  {
    out.push_back({&item, std::make_shared<const Preconditioner<T>>(item.A, P)});
  }
  return out;
}

std::vector<double> packed_gradient(const UnrollGradient &g, Variant variant)
{
  std::vector<double> out = g.d_omega;
  const auto per = weights_per_step(variant);
  if (per >= 2)
  {
    out.insert(out.end(), g.d_alpha.begin(), g.d_alpha.end());
  }
  if (per == 3)
  {
    out.insert(out.end(), g.d_alpha_tilde.begin(), g.d_alpha_tilde.end());
  }
  return out;
}

template <Field T>
double loss_relative_residual(std::span<const TrainingInstance<T>> batch, const MetaNet &net,
                              int K)
{
  if (batch.empty())
  {
    throw Error("loss: empty batch");
  }
  if (K < 0)
  {
    throw ConfigError("loss: K must be >= 0");
  }
  const auto program = richardson_program(K, net.M());
  double sum = 0.0;
  for (std::size_t b = 0; b < batch.size(); b++)
  {
    const auto &item = batch[b];
    const double l = unrolled_loss<T>(item.instance->A, item.instance->f, *item.P,
                                      net.Forward(item.instance->mu), program);
    check_loss(l, item, b);
    sum += l;
  }
  return sum / static_cast<double>(batch.size());
}

template <Field T>
double loss_with_schedule(std::span<const TrainingInstance<T>> batch,
                          const WeightSchedule &schedule, int K)
{
  if (batch.empty())
  {
    throw Error("loss: empty batch");
  }
  const auto program = richardson_program(K, schedule.m());
  double sum = 0.0;
  for (std::size_t b = 0; b < batch.size(); b++)
  {
    const auto &item = batch[b];
    const double l =
        unrolled_loss<T>(item.instance->A, item.instance->f, *item.P, schedule, program);
    check_loss(l, item, b);
    sum += l;
  }
  return sum / static_cast<double>(batch.size());
}

template <Field T>
Var record_loss(Tape &tape, const NetVars &vars, std::span<const TrainingInstance<T>> batch,
                const MetaNet &net, int K, int threads)
{
  if (batch.empty())
  {
    throw Error("loss: empty batch");
  }
  const auto program = richardson_program(K, net.M());
  std::vector<std::vector<Var>> outputs;
  outputs.reserve(batch.size());
  for (const auto &item : batch)
  {
    outputs.push_back(net.Outputs(tape, vars, item.instance->mu));
  }

  std::vector<UnrollGradient> grads(batch.size());
  parallel_for(batch.size(), threads, [&](std::size_t b) {
    std::vector<double> packed;
    for (const auto &o : outputs[b])
    {
      packed.push_back(o.value);
    }
    const auto schedule = WeightSchedule::Unpack(net.GetVariant(), net.M(), packed);
    UnrolledIteration<T> it(batch[b].instance->A, batch[b].instance->f, *batch[b].P, program);
    it.Forward(schedule);
    grads[b] = it.Backward();
  });

  std::vector<Var> losses;
  for (std::size_t b = 0; b < batch.size(); b++)
  {
    check_loss(grads[b].loss, batch[b], b);
    const auto partials = packed_gradient(grads[b], net.GetVariant());
    std::vector<std::size_t> parents;
    for (const auto &o : outputs[b])
    {
      parents.push_back(o.index);
    }
    losses.push_back(tape.Record(grads[b].loss, parents, partials));
  }
  return mean(losses);
}

template <Field T>
LossGradient loss_and_gradient(std::span<const TrainingInstance<T>> batch, const MetaNet &net,
                               int K, int threads)
{
  Tape tape;
  const auto vars = net.Bind(tape);
  const auto loss = record_loss<T>(tape, vars, batch, net, K, threads);
  return {loss.value, gradient(loss, tape, vars)};
}

void input_bounds(ProblemKind kind, int n, std::vector<double> &lo, std::vector<double> &hi)
{
  if (kind == ProblemKind::Helmholtz)
  {
    lo = {2.0 * std::numbers::pi};
    hi = {2.0 * std::numbers::pi * std::max(1.0, n / 10.0)};
    if (!(hi[0] > lo[0]))
    {
      hi[0] = lo[0] + 1.0;
    }
    return;
  }
  lo = {-6.0, 0.0};
  hi = {0.0, std::numbers::pi};
}

MetaNetConfig net_config(const TrainConfig &config, Variant variant, ProblemKind kind, int n)
{
  MetaNetConfig nc;
  nc.variant = variant;
  nc.m = config.m;
  nc.hidden = config.hidden;
  nc.omega_map = config.learn_log_omega ? OmegaMap::Exp : OmegaMap::Softplus;
  input_bounds(kind, n, nc.input_lo, nc.input_hi);
  nc.initial_omega = config.initial_omega;
  nc.initial_alpha = config.initial_alpha;
  nc.initial_omega_spread = variant == Variant::Plain ? config.initial_omega_spread : 1.0;
  nc.seed = config.seed;
  return nc;
}

void split_indices(std::size_t count, double validation_fraction, std::uint64_t seed,
                   std::vector<std::size_t> &train, std::vector<std::size_t> &validation)
{
  std::vector<std::size_t> idx(count);
  for (std::size_t i = 0; i < count; i++)
  {
    idx[i] = i;
  }
  std::mt19937_64 rng(seed ^ 0x5eed5eedULL);
  std::shuffle(idx.begin(), idx.end(), rng);
  auto n_val = static_cast<std::size_t>(std::floor(validation_fraction * static_cast<double>(count)));
  if (n_val >= count)
  {
    n_val = count > 0 ? count - 1 : 0;
  }
  validation.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
  train.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
  std::sort(validation.begin(), validation.end());
}

template <Field T>
TrainResult train_ns(const TrainConfig &config, const Dataset<T> &data, Variant variant,
                     PreconditionerSpec P, const EpochObserver &observer)
{
  config.Validate();
  if (data.size() == 0)
  {
    throw ConfigError("training: empty dataset");
  }
  const auto items = prepare_instances(data, P);
  std::vector<std::size_t> train_idx, val_idx;
  split_indices(items.size(), config.validation_fraction, config.seed, train_idx, val_idx);
  if (val_idx.empty())
  {
    val_idx = train_idx;
  }
  auto gather = [&](const std::vector<std::size_t> &idx) {
    std::vector<TrainingInstance<T>> out;
    for (auto i : idx)
    {
      out.push_back(items[i]);
    }
    return out;
  };
  const auto val_set = gather(val_idx);

  TrainResult result;
  result.net = MetaNet(net_config(config, variant, data.manifest.kind, data.manifest.n));
  if (config.epochs == 0)
  {
    return result;
  }

  auto evaluate = [&](const MetaNet &net) {
    std::vector<double> losses(val_set.size());
    const auto program = richardson_program(config.K, net.M());
    parallel_for(val_set.size(), config.threads, [&](std::size_t b) {
      losses[b] = unrolled_loss<T>(val_set[b].instance->A, val_set[b].instance->f, *val_set[b].P,
                                   net.Forward(val_set[b].instance->mu), program);
    });
    double s = 0.0;
    for (std::size_t b = 0; b < losses.size(); b++)
    {
      check_loss(losses[b], val_set[b], b);
      s += losses[b];
    }
    return s / static_cast<double>(losses.size());
  };

  MetaNet net = result.net;
  auto &hist = result.history;
  double best = evaluate(net);
  hist.validation_loss.push_back(best);
  hist.best_epoch = 0;

  Adam adam(net.ParameterCount(), config.learning_rate);
  std::mt19937_64 rng(config.seed);
  const auto nb = static_cast<std::size_t>(config.batch_size);
  const std::size_t batches = std::max<std::size_t>(1, train_idx.size() / nb);
  int above = 0;
  int stale = 0;
  auto params = net.Parameters();
  for (int epoch = 1; epoch <= config.epochs; epoch++)
  {
    std::shuffle(train_idx.begin(), train_idx.end(), rng);
    double sum = 0.0;
    for (std::size_t b = 0; b < batches; b++)
    {
      std::vector<TrainingInstance<T>> batch;
      for (std::size_t k = b * nb; k < std::min(train_idx.size(), (b + 1) * nb); k++)
      {
        batch.push_back(items[train_idx[k]]);
      }
      auto lg = loss_and_gradient<T>(batch, net, config.K, config.threads);
      sum += lg.loss;
      if (config.grad_clip > 0.0)
      {
        clip_global_norm(lg.gradient, config.grad_clip);
      }
      adam.Step(params, lg.gradient);
      net.SetParameters(params);
    }
    const double train_loss = sum / static_cast<double>(batches);
    hist.train_loss.push_back(train_loss);
    const double val = evaluate(net);
    hist.validation_loss.push_back(val);
    if (observer)
    {
      observer(epoch, train_loss, val);
    }

    above = train_loss > 1e3 ? above + 1 : 0;
    if (above >= 3)
    {
      throw TrainingDivergedError("training diverged: loss above 1e3 for 3 consecutive epochs",
                                  hist);
    }
    if (val < best)
    {
      best = val;
      hist.best_epoch = epoch;
      result.net = net;
      stale = 0;
    }
    else if (config.patience > 0 && ++stale >= config.patience)
    {
      hist.early_stopped = true;
      break;
    }
  }
  return result;
}

#define RICHLAB_INSTANTIATE(T)                                                                   \
  template std::vector<TrainingInstance<T>> prepare_instances(const Dataset<T> &,               \
                                                              PreconditionerSpec);              \
  template double loss_relative_residual(std::span<const TrainingInstance<T>>, const MetaNet &, \
                                         int);                                                  \
  template double loss_with_schedule(std::span<const TrainingInstance<T>>,                      \
                                     const WeightSchedule &, int);                              \
  template Var record_loss(Tape &, const NetVars &, std::span<const TrainingInstance<T>>,       \
                           const MetaNet &, int, int);                                          \
  template LossGradient loss_and_gradient(std::span<const TrainingInstance<T>>, const MetaNet &, \
                                          int, int);                                            \
  template TrainResult train_ns(const TrainConfig &, const Dataset<T> &, Variant,               \
                                PreconditionerSpec, const EpochObserver &);

RICHLAB_INSTANTIATE(double)
RICHLAB_INSTANTIATE(Complex)
#undef RICHLAB_INSTANTIATE

}  // namespace richlab
