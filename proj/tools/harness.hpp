// SPDX-License-Identifier: Apache-2.0

#ifndef RICHLAB_TOOLS_HARNESS_HPP
#define RICHLAB_TOOLS_HARNESS_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "richlab/checkpoint.hpp"
#include "richlab/dataset.hpp"
#include "richlab/fns_lite.hpp"
#include "richlab/krylov.hpp"
#include "richlab/multilevel.hpp"
#include "richlab/spectral.hpp"
#include "richlab/training.hpp"

namespace richlab::harness
{

// RFC 4180: fields containing a comma, quote, CR or LF are quoted, quotes doubled.
std::string csv_escape(std::string_view field);
void write_csv_row(std::ostream &os, const std::vector<std::string> &fields);
std::vector<std::string> parse_csv_row(std::string_view line);

enum class WeightSource
{
  Chebyshev,
  Semi,
  Checkpoint,
  Literal
};

std::string to_string(WeightSource s);
WeightSource parse_weight_source(std::string_view name);

enum class SpectrumSource
{
  Auto,  // dense eigensolver up to kAutoDenseDim unknowns, power iteration above
  Dense,
  Power
};

inline constexpr std::size_t kAutoDenseDim = 4096;

std::string to_string(SpectrumSource s);
SpectrumSource parse_spectrum_source(std::string_view name);

// lambda_min is filled only when need_min is set (or the dense oracle runs anyway).
SpectralBounds spectrum_for(const SparseMatrix<double> &A, SpectrumSource source, bool need_min);

// How a Richardson(m) schedule is obtained for one problem.
struct MethodSpec
{
  Variant variant = Variant::Plain;
  int m = 3;
  PreconditionerSpec precond{};
  WeightSource source = WeightSource::Chebyshev;
  double semi_alpha = 1.0 / 30.0;
  std::string checkpoint;        // WeightSource::Checkpoint
  std::vector<double> literal;   // WeightSource::Literal, packed layout
};

std::string method_label(const MethodSpec &method);
std::string precond_label(const PreconditionerSpec &spec);

// Throws ConfigError when the source cannot be resolved (missing checkpoint, wrong literal
// length, variant mismatch). `net` must be the loaded checkpoint for WeightSource::Checkpoint.
WeightSchedule resolve_schedule(const MethodSpec &method, const SpectralBounds *bounds,
                                const std::vector<double> &mu, const MetaNet *net);
bool needs_spectrum(const MethodSpec &method);
bool needs_lambda_min(const MethodSpec &method);

// Helmholtz multigrid preconditioner: Richardson(m) smoother with Chebyshev semi-iteration
// weights on each level's Gershgorin bound and a constant momentum coefficient, Galerkin
// coarse operators, dense solve once the grid resolves the wavelength.
struct HelmholtzSmoother
{
  Variant variant = Variant::Nag;
  int m = 5;
  double semi_alpha = 0.3;
  double momentum = 0.2;
  int pre = 1, post = 1;  // outer sweeps
};

// Smallest coarsest grid with at least `points` grid points per wavelength, capped so the
// dense coarse system stays within the hierarchy limit.
int helmholtz_coarsest_n(int n, double omega, double points = 3.2);
ScheduleForLevel<Complex> helmholtz_schedule(const HelmholtzSmoother &s);
// With a loaded network, level 0 uses the learned schedule and coarser levels rescale it.
ScheduleForLevel<Complex> learned_helmholtz_schedule(const MetaNet &net, const std::vector<double> &mu,
                                                     const SparseMatrix<Complex> &A);

// One CSV row of an experiment.
struct Row
{
  std::string table;
  double eps = 0.0, theta = 0.0, omega = 0.0;
  int n = 0;
  std::string method;
  int m = 0;
  std::string precond;
  std::uint64_t seed = 0;
  bool skipped = false;
  long inner = 0, outer = 0;
  bool converged = false;
  double rel_residual = 0.0;
  double wall_ms = 0.0;
  std::string note;
};

std::vector<std::string> csv_header();
std::vector<std::string> csv_fields(const Row &row);
std::string format_double(double x);

struct SolveSettings
{
  double tol = 1e-6;
  long max_outer = 100000;
  SpectrumSource spectrum = SpectrumSource::Auto;
  int restart = 20;
  int max_restarts = 100;
};

std::string stopping_rule(double tol);

// Stationary Richardson(m) solve of one anisotropic problem with rhs seed `seed`.
Row solve_anisotropic(const AnisotropicProblem &p, const MethodSpec &method, std::uint64_t seed,
                      const SolveSettings &settings, const SpectralBounds *bounds,
                      const MetaNet *net);

// FNS-lite solve with a trained model.
Row solve_fns_lite_row(const AnisotropicProblem &p, const FnsLiteModel &model, std::uint64_t seed,
                       const SolveSettings &settings);

enum class HelmholtzPrecond
{
  Identity,
  VCycle,
  LearnedVCycle
};

std::string to_string(HelmholtzPrecond p);

Row solve_helmholtz(const HelmholtzProblem &p, HelmholtzPrecond precond, const HelmholtzSmoother &smoother,
                    std::uint64_t seed, const SolveSettings &settings, const MetaNet *net = nullptr);

// Table reproduction.
struct ReproduceConfig
{
  std::string table;  // t2, t3, t4, helmholtz-sweep
  int seeds = 10;
  bool full = false;
  std::string checkpoint_dir = "checkpoints";
  int threads = 1;
  SolveSettings solve{};
};

// Learned-row checkpoint file name inside the checkpoint directory.
std::string ns_checkpoint_name(Variant v, int m, const PreconditionerSpec &p);

void reproduce(const ReproduceConfig &config, std::ostream &csv, std::ostream &log);

// Rows the grid would produce, in output order, with nothing solved. Budget-skipped cells are
// marked skipped; checkpoint availability is not checked.
std::vector<Row> plan_grid(const ReproduceConfig &config);

// Desk-scale limits; larger runs need the explicit full-scale flag.
inline constexpr int kDeskMaxN = 128;
inline constexpr int kDeskMaxSamples = 500;

// Rough single-core training time estimate in seconds.
double estimate_train_seconds(int n, int samples, int epochs, int K, int m);

struct TrainSettings
{
  std::string problem = "anisotropic";
  std::string solver = "ns";  // ns or fns-lite
  int n = 32;
  int samples = 200;
  std::uint64_t data_seed = 0;
  Variant variant = Variant::Plain;
  PreconditionerSpec precond{};
  TrainConfig train{};
  FnsTrainConfig fns{};
};

std::string config_echo(const TrainSettings &s);

// Trains and returns the checkpoint ready to be written.
Checkpoint train_to_checkpoint(const TrainSettings &s, std::ostream &log);

}  // namespace richlab::harness

#endif  // RICHLAB_TOOLS_HARNESS_HPP
