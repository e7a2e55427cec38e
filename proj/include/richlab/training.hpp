// SPDX-License-Identifier: Apache-2.0

#ifndef RICHLAB_TRAINING_HPP
#define RICHLAB_TRAINING_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "richlab/dataset.hpp"
#include "richlab/meta_net.hpp"
#include "richlab/preconditioner.hpp"
#include "richlab/unroll.hpp"

namespace richlab
{

struct TrainConfig
{
  int K = 50;  // unrolled outer sweeps
  int epochs = 50;
  int batch_size = 10;
  double learning_rate = 1e-3;
  std::string optimizer = "adam";
  int m = 3;
  std::uint64_t seed = 0;
  int patience = 0;  // epochs without validation improvement before stopping; 0 disables
  double validation_fraction = 0.1;
  std::vector<int> hidden{64, 64};
  bool learn_log_omega = false;
  double initial_omega = 0.3;
  double initial_alpha = 0.5;
  // Plain variant only: the loss is symmetric in the omegas, so a flat start never separates them.
  // Momentum variants always start flat.
  double initial_omega_spread = 3.0;
  // Maximum global L2 norm of each batch gradient before the optimizer step; 0 disables clipping.
  double grad_clip = 0.1;
  int threads = 1;

  // Throws ConfigError.
  void Validate() const;
};

// An instance together with its preconditioner cache.
template <Field T>
struct TrainingInstance
{
  const Instance<T> *instance = nullptr;
  std::shared_ptr<const Preconditioner<T>> P;
};

template <Field T>
std::vector<TrainingInstance<T>> prepare_instances(const Dataset<T> &data, PreconditionerSpec P);

// Gradient of one instance's loss, in WeightSchedule::Packed() layout.
std::vector<double> packed_gradient(const UnrollGradient &g, Variant variant);

// Rescales g in place so that its L2 norm is at most limit.
void clip_global_norm(std::span<double> g, double limit);

// Mean relative residual over the batch after K sweeps of the network's schedules.
// Throws Error naming the instance when a loss is not finite.
template <Field T>
double loss_relative_residual(std::span<const TrainingInstance<T>> batch, const MetaNet &net,
                              int K);

// Same loss with one fixed schedule for every instance.
template <Field T>
double loss_with_schedule(std::span<const TrainingInstance<T>> batch,
                          const WeightSchedule &schedule, int K);

// Records the batch loss on `tape` as a function of `vars`. Each instance contributes one node
// whose partials with respect to the network outputs come from the unrolled adjoint.
template <Field T>
Var record_loss(Tape &tape, const NetVars &vars, std::span<const TrainingInstance<T>> batch,
                const MetaNet &net, int K, int threads = 1);

struct LossGradient
{
  double loss = 0.0;
  std::vector<double> gradient;
};

template <Field T>
LossGradient loss_and_gradient(std::span<const TrainingInstance<T>> batch, const MetaNet &net,
                               int K, int threads = 1);

struct TrainHistory
{
  std::vector<double> train_loss;       // mean batch loss per epoch
  std::vector<double> validation_loss;  // initial network first, then after each epoch
  int best_epoch = -1;
  bool early_stopped = false;
};

struct TrainResult
{
  MetaNet net;
  TrainHistory history;
};

class TrainingDivergedError : public Error
{
public:
  TrainingDivergedError(const std::string &what, TrainHistory h)
    : Error(what), history(std::move(h))
  {
  }
  TrainHistory history;
};

using EpochObserver = std::function<void(int epoch, double train_loss, double validation_loss)>;

// Input normalization bounds for a problem family at grid size n.
void input_bounds(ProblemKind kind, int n, std::vector<double> &lo, std::vector<double> &hi);

MetaNetConfig net_config(const TrainConfig &config, Variant variant, ProblemKind kind, int n);

// Deterministic train/validation split of [0, count).
void split_indices(std::size_t count, double validation_fraction, std::uint64_t seed,
                   std::vector<std::size_t> &train, std::vector<std::size_t> &validation);

// Mini-batch training with the adaptive-moment optimizer. Returns the parameters with the
// lowest validation loss seen (the initial network counts as epoch 0).
template <Field T>
TrainResult train_ns(const TrainConfig &config, const Dataset<T> &data, Variant variant,
                     PreconditionerSpec P, const EpochObserver &observer = {});

}  // namespace richlab

#endif  // RICHLAB_TRAINING_HPP
