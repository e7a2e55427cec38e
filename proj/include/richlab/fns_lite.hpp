// SPDX-License-Identifier: Apache-2.0

#ifndef RICHLAB_FNS_LITE_HPP
#define RICHLAB_FNS_LITE_HPP

#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "richlab/checkpoint.hpp"
#include "richlab/dataset.hpp"
#include "richlab/meta_net.hpp"
#include "richlab/richardson.hpp"
#include "richlab/sine_transform.hpp"
#include "richlab/training.hpp"

namespace richlab
{

// Diagonal correction in the 2D sine basis: e = S (lambda~ * S r).
struct SpectralCorrection
{
  std::vector<double> lambda_tilde;
  std::shared_ptr<const SineTransform2D> plan;

  SpectralCorrection() = default;
  SpectralCorrection(std::size_t n_cells, std::vector<double> lambda);

  void Validate() const;
  std::vector<double> Apply(std::span<const double> r) const;
};

// 1 / (s_k^T A s_k) for every sine mode s_k; exact inverse eigenvalues when A is diagonalized
// by the sine basis.
std::vector<double> sine_rayleigh_inverse(const SparseMatrix<double> &A, std::size_t n_cells);

// One hybrid step: `smoothing` Richardson updates from zero velocity, cycling the schedule's
// slots, then u += S (lambda~ * S (f - A u)). Throws DivergenceError on non-finite output.
std::vector<double> fns_lite_step(const SparseMatrix<double> &A, std::span<const double> f,
                                  std::span<const double> u, const WeightSchedule &schedule,
                                  int smoothing, const SpectralCorrection &corr,
                                  const Preconditioner<double> &P);

// Quantization of (lg eps, theta) into a bins x bins grid.
struct BucketGrid
{
  int bins = 16;
  double lg_lo = -6.0, lg_hi = 0.0;
  double theta_lo = 0.0, theta_hi = 3.141592653589793;

  int Index(std::span<const double> mu) const;
  std::vector<double> Center(int index) const;
};

//
// Learned hybrid solver: a meta network (or a fixed schedule before it is activated) for the
// smoother and one lambda~ array per trained bucket. A query in an untrained bucket uses the
// bucket's initial values (sine-basis Rayleigh quotients at the bucket center).
//
struct FnsLiteModel
{
  int n = 32;
  int smoothing = 10;
  MetaNet omega_net;
  bool net_active = false;
  WeightSchedule fixed_schedule;
  BucketGrid grid;
  std::map<int, std::vector<double>> lambda;

  WeightSchedule ScheduleFor(std::span<const double> mu) const;
  std::vector<double> LambdaFor(std::span<const double> mu) const;
  SpectralCorrection CorrectionFor(std::span<const double> mu) const;
};

SolveResult<std::vector<double>> solve_fns_lite(const SparseMatrix<double> &A,
                                                const std::vector<double> &f,
                                                const WeightSchedule &schedule, int smoothing,
                                                const SpectralCorrection &corr,
                                                const Preconditioner<double> &P,
                                                const StationaryOptions &opts = {});

struct FnsTrainConfig
{
  TrainConfig base;     // m, learning rate, batch size, seed, network shape, validation split
  int steps = 4;        // hybrid steps unrolled in the loss
  int smoothing = 10;   // smoother updates per hybrid step
  int cycles = 3;       // alternating cycles after phase 0
  int interval = 0;     // epochs per phase; 0 selects the plateau rule
  int max_interval = 20;
  int plateau_window = 5;
  double plateau_tol = 0.01;
  double omega0 = 0.5;
  double lambda_learning_rate = 1e-2;
  int bins = 16;

  void Validate() const;
};

struct FnsPhase
{
  std::string name;  // "lambda" or "omega"
  std::vector<double> train_loss;
  double validation_loss = 0.0;
};

struct FnsTrainResult
{
  FnsLiteModel model;
  std::vector<FnsPhase> phases;
  int best_phase = 0;
  bool early_stopped = false;
};

using PhaseObserver = std::function<void(const FnsPhase &phase, const FnsLiteModel &model)>;

// Mean relative residual after `steps` hybrid steps over the given instances.
double fns_lite_loss(const FnsLiteModel &model, std::span<const TrainingInstance<double>> batch,
                     int steps);

// Phase 0 trains lambda~ under the fixed schedule omega0, then each cycle trains the network
// with lambda~ frozen and lambda~ with the network frozen. Returns the artifacts of the phase
// with the lowest validation loss; stops early when a cycle brings no improvement.
FnsTrainResult train_fns_lite(const FnsTrainConfig &config, const Dataset<double> &data,
                              const PhaseObserver &observer = {});

void store_fns_lite(Checkpoint &ck, const FnsLiteModel &model);
FnsLiteModel restore_fns_lite(const Checkpoint &ck);

}  // namespace richlab

#endif  // RICHLAB_FNS_LITE_HPP
