// SPDX-License-Identifier: Apache-2.0
//
// richlab command-line harness.
//
// Exit codes: 0 success, 1 solver or training divergence, 2 configuration or input error.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "harness.hpp"

using namespace richlab;
using namespace richlab::harness;

namespace
{

struct ProblemArgs
{
  std::string problem = "anisotropic";
  double eps = 1.0;
  double theta = 0.0;
  double omega_over_2pi = 2.0;
  int n = 32;
  int sponge = -1;

  void Add(CLI::App *app)
  {
    app->add_option("--problem", problem, "anisotropic or helmholtz")->capture_default_str();
    app->add_option("--eps", eps, "anisotropy ratio epsilon")->capture_default_str();
    app->add_option("--theta", theta, "anisotropy direction (radians)")->capture_default_str();
    app->add_option("--freq", omega_over_2pi, "Helmholtz frequency omega / 2 pi")->capture_default_str();
    app->add_option("--n", n, "cells per side")->capture_default_str();
    app->add_option("--sponge", sponge, "sponge width in cells (-1: one wavelength)")->capture_default_str();
  }

  ProblemSpec Spec() const
  {
    if (parse_problem_kind(problem) == ProblemKind::Anisotropic)
    {
      AnisotropicProblem p{eps, theta, n};
      p.Validate();
      return p;
    }
    HelmholtzProblem p;
    p.omega = 2.0 * std::numbers::pi * omega_over_2pi;
    p.n = n;
    p.sponge_width = sponge;
    p.Validate();
    return p;
  }
};

PreconditionerSpec make_precond(const std::string &kind, double relax)
{
  if (kind == "none" || kind == "identity")
  {
    return {};
  }
  return {parse_preconditioner_kind(kind), relax};
}

Variant parse_variant_name(const std::string &name)
{
  for (auto v : {Variant::Plain, Variant::Mom, Variant::Nag, Variant::NagEx})
  {
    if (name == to_string(v))
    {
      return v;
    }
  }
  throw ConfigError("unknown variant '" + name + "' (expected plain, mom, nag or nagex)");
}

void check_budget(int n, int samples, bool full)
{
  if (full)
  {
    return;
  }
  if (n > kDeskMaxN)
  {
    throw ConfigError("n = " + std::to_string(n) + " exceeds the desk-scale limit " + std::to_string(kDeskMaxN) +
                      "; pass --full to run it");
  }
  if (samples > kDeskMaxSamples)
  {
    throw ConfigError("samples = " + std::to_string(samples) + " exceeds the desk-scale limit " +
                      std::to_string(kDeskMaxSamples) + "; pass --full to run it");
  }
}

template <Field T>
int export_roundtrip(const SparseMatrix<T> &A, const std::string &path)
{
  {
    std::ofstream os(path);
    if (!os)
    {
      throw ConfigError("cannot write " + path);
    }
    write_matrix_market(os, A);
  }
  std::ifstream is(path);
  const auto B = read_matrix_market<T>(is);
  const auto va = A.Values(), vb = B.Values();
  const bool same = B.rows() == A.rows() && B.cols() == A.cols() &&
                    std::ranges::equal(A.RowStarts(), B.RowStarts()) &&
                    std::ranges::equal(A.ColIndices(), B.ColIndices()) && std::ranges::equal(va, vb);
  std::cout << "wrote " << path << " (" << A.rows() << " x " << A.cols() << ", " << A.nnz() << " entries); "
            << "re-import " << (same ? "bit-equal" : "MISMATCH") << "\n";
  if (!same)
  {
    throw Error("Matrix Market round trip changed the matrix");
  }
  return 0;
}

int run(int argc, char **argv)
{
  CLI::App app{"richlab: learned Richardson iterations, multigrid and FGMRES experiments"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "INI file with one section per subcommand");
  bool print_config = false;
  app.add_flag("--print-config", print_config, "print the resolved configuration and exit");

  // assemble
  auto *assemble = app.add_subcommand("assemble", "assemble a system and optionally export it");
  ProblemArgs asm_problem;
  asm_problem.Add(assemble);
  std::string export_path;
  assemble->add_option("--export", export_path, "Matrix Market output path");

  // dataset
  auto *dataset = app.add_subcommand("dataset", "generate a dataset manifest");
  std::string ds_problem = "anisotropic", ds_out;
  int ds_count = 200, ds_n = 32;
  std::uint64_t ds_seed = 0;
  dataset->add_option("--problem", ds_problem)->capture_default_str();
  dataset->add_option("--count", ds_count)->capture_default_str();
  dataset->add_option("--n", ds_n)->capture_default_str();
  dataset->add_option("--seed", ds_seed)->capture_default_str();
  dataset->add_option("--out", ds_out, "manifest path (stdout when empty)");

  // solve
  auto *solve = app.add_subcommand("solve", "solve one problem and print a CSV row");
  ProblemArgs sv_problem;
  sv_problem.Add(solve);
  std::string sv_solver = "richardson", sv_variant = "plain", sv_precond = "none", sv_weights = "chebyshev";
  std::string sv_checkpoint, sv_literal, sv_spectrum = "auto", sv_hprecond = "vcycle", sv_smoother_variant = "nag";
  double sv_relax = 1.0, sv_semi_alpha = 1.0 / 30.0;
  int sv_m = 3, sv_restart = 20, sv_max_restarts = 100;
  double sv_tol = 1e-6;
  long sv_max_outer = 100000;
  std::uint64_t sv_seed = 0;
  solve->add_option("--solver", sv_solver, "richardson, fgmres or fns-lite")->capture_default_str();
  solve->add_option("--variant", sv_variant, "plain, mom, nag or nagex")->capture_default_str();
  solve->add_option("--m", sv_m)->capture_default_str();
  solve->add_option("--precond", sv_precond, "none, jacobi, gs, sor or ssor")->capture_default_str();
  solve->add_option("--relax", sv_relax)->capture_default_str();
  solve->add_option("--weights", sv_weights, "chebyshev, semi, checkpoint or literal")->capture_default_str();
  solve->add_option("--semi-alpha", sv_semi_alpha)->capture_default_str();
  solve->add_option("--checkpoint", sv_checkpoint, "trained model");
  solve->add_option("--literal", sv_literal, "comma-separated packed schedule");
  solve->add_option("--spectrum", sv_spectrum, "auto, dense or power")->capture_default_str();
  solve->add_option("--helmholtz-precond", sv_hprecond, "none, vcycle or vcycle-ns")->capture_default_str();
  solve->add_option("--smoother-variant", sv_smoother_variant, "V-cycle smoother variant")->capture_default_str();
  solve->add_option("--restart", sv_restart)->capture_default_str();
  solve->add_option("--max-restarts", sv_max_restarts)->capture_default_str();
  solve->add_option("--tol", sv_tol)->capture_default_str();
  solve->add_option("--max-outer", sv_max_outer)->capture_default_str();
  solve->add_option("--seed", sv_seed, "right-hand side seed")->capture_default_str();

  // train
  auto *train = app.add_subcommand("train", "train a meta network and write a checkpoint");
  TrainSettings ts;
  std::string tr_variant = "plain", tr_precond = "none", tr_out;
  double tr_relax = 1.0;
  bool tr_full = false, tr_learn_log_omega = false;
  train->add_option("--problem", ts.problem)->capture_default_str();
  train->add_option("--solver", ts.solver, "ns or fns-lite")->capture_default_str();
  train->add_option("--n", ts.n)->capture_default_str();
  train->add_option("--samples", ts.samples)->capture_default_str();
  train->add_option("--data-seed", ts.data_seed)->capture_default_str();
  train->add_option("--variant", tr_variant)->capture_default_str();
  train->add_option("--precond", tr_precond)->capture_default_str();
  train->add_option("--relax", tr_relax)->capture_default_str();
  train->add_option("--K", ts.train.K, "unrolled outer sweeps")->capture_default_str();
  train->add_option("--epochs", ts.train.epochs)->capture_default_str();
  train->add_option("--batch-size", ts.train.batch_size)->capture_default_str();
  train->add_option("--lr", ts.train.learning_rate)->capture_default_str();
  train->add_option("--m", ts.train.m)->capture_default_str();
  train->add_option("--seed", ts.train.seed)->capture_default_str();
  train->add_option("--patience", ts.train.patience)->capture_default_str();
  train->add_option("--validation-fraction", ts.train.validation_fraction)->capture_default_str();
  train->add_option("--hidden", ts.train.hidden)->delimiter(',')->capture_default_str();
  auto *llo = train->add_option("--learn-log-omega", tr_learn_log_omega,
                                "learn log omega (default on for helmholtz)");
  auto *init_omega = train->add_option("--initial-omega", ts.train.initial_omega,
                                       "initial weight (default 0.3, or 1 / (6 n^2) for helmholtz)");
  train->add_option("--initial-alpha", ts.train.initial_alpha)->capture_default_str();
  train->add_option("--grad-clip", ts.train.grad_clip, "max gradient L2 norm per batch (0 disables)")
      ->capture_default_str();
  train->add_option("--initial-omega-spread", ts.train.initial_omega_spread,
                    "plain variant: ratio between the last and first initial omega (geometric ladder)")
      ->capture_default_str();
  train->add_option("--threads", ts.train.threads)->capture_default_str();
  train->add_option("--steps", ts.fns.steps, "hybrid steps in the loss")->capture_default_str();
  train->add_option("--smoothing", ts.fns.smoothing)->capture_default_str();
  train->add_option("--cycles", ts.fns.cycles)->capture_default_str();
  train->add_option("--interval", ts.fns.interval, "epochs per phase; 0 uses the plateau rule")
      ->capture_default_str();
  train->add_option("--omega0", ts.fns.omega0)->capture_default_str();
  train->add_option("--lambda-lr", ts.fns.lambda_learning_rate)->capture_default_str();
  train->add_flag("--full", tr_full, "allow sizes beyond the desk-scale budget");
  train->add_option("--out", tr_out, "checkpoint path")->required();

  // reproduce
  auto *reproduce_cmd = app.add_subcommand("reproduce", "run a table grid and write CSV");
  ReproduceConfig rc;
  std::string rp_out, rp_spectrum = "auto";
  reproduce_cmd->add_option("--table", rc.table, "t2, t3, t4 or helmholtz-sweep")->required();
  reproduce_cmd->add_option("--seeds", rc.seeds)->capture_default_str();
  reproduce_cmd->add_flag("--full", rc.full, "include grid sizes beyond the desk-scale budget");
  reproduce_cmd->add_option("--checkpoints", rc.checkpoint_dir)->capture_default_str();
  reproduce_cmd->add_option("--threads", rc.threads)->capture_default_str();
  reproduce_cmd->add_option("--tol", rc.solve.tol)->capture_default_str();
  reproduce_cmd->add_option("--max-outer", rc.solve.max_outer)->capture_default_str();
  reproduce_cmd->add_option("--spectrum", rp_spectrum)->capture_default_str();
  reproduce_cmd->add_option("--out", rp_out, "CSV path (stdout when empty)");

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError &e)
  {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (print_config)
  {
    std::cout << app.config_to_str(true, true);
    return 0;
  }

  if (*assemble)
  {
    const auto spec = asm_problem.Spec();
    if (const auto *p = std::get_if<AnisotropicProblem>(&spec))
    {
      const auto A = assemble_anisotropic(*p);
      std::cout << "anisotropic eps " << p->epsilon << " theta " << p->theta << " n " << p->n << ": " << A.rows()
                << " unknowns, " << A.nnz() << " entries\n";
      return export_path.empty() ? 0 : export_roundtrip(A, export_path);
    }
    const auto &h = std::get<HelmholtzProblem>(spec);
    const auto A = assemble_helmholtz(h);
    std::cout << "helmholtz omega " << h.omega << " n " << h.n << ": " << A.rows() << " unknowns, " << A.nnz()
              << " entries, " << h.PointsPerWavelength() << " points per wavelength\n";
    return export_path.empty() ? 0 : export_roundtrip(A, export_path);
  }

  if (*dataset)
  {
    const auto manifest = sample_manifest(ds_problem, ds_count, ds_seed, ds_n);
    if (ds_out.empty())
    {
      write_manifest(std::cout, manifest);
    }
    else
    {
      std::ofstream os(ds_out, std::ios::binary);
      if (!os)
      {
        throw ConfigError("cannot write " + ds_out);
      }
      write_manifest(os, manifest);
    }
    return 0;
  }

  if (*solve)
  {
    SolveSettings settings;
    settings.tol = sv_tol;
    settings.max_outer = sv_max_outer;
    settings.spectrum = parse_spectrum_source(sv_spectrum);
    settings.restart = sv_restart;
    settings.max_restarts = sv_max_restarts;
    const auto spec = sv_problem.Spec();
    Row row;
    if (sv_solver == "richardson")
    {
      const auto *p = std::get_if<AnisotropicProblem>(&spec);
      if (p == nullptr)
      {
        throw ConfigError("the richardson solver runs on anisotropic problems; use --solver fgmres");
      }
      MethodSpec method;
      method.variant = parse_variant_name(sv_variant);
      method.m = sv_m;
      method.precond = make_precond(sv_precond, sv_relax);
      method.source = parse_weight_source(sv_weights);
      method.semi_alpha = sv_semi_alpha;
      method.checkpoint = sv_checkpoint;
      if (!sv_literal.empty())
      {
        std::stringstream ss(sv_literal);
        for (std::string tok; std::getline(ss, tok, ',');)
        {
          method.literal.push_back(std::stod(tok));
        }
      }
      std::optional<MetaNet> net;
      if (method.source == WeightSource::Checkpoint)
      {
        if (sv_checkpoint.empty())
        {
          throw ConfigError("--weights checkpoint needs --checkpoint");
        }
        net = restore_net(load_checkpoint(sv_checkpoint));
      }
      std::optional<SpectralBounds> bounds;
      if (needs_spectrum(method))
      {
        bounds = spectrum_for(assemble_anisotropic(*p), settings.spectrum, needs_lambda_min(method));
      }
      // Resolve before the header so a bad source fails without output.
      resolve_schedule(method, bounds ? &*bounds : nullptr, parameters(spec), net ? &*net : nullptr);
      std::cout << "# " << stopping_rule(sv_tol) << "\n";
      row = solve_anisotropic(*p, method, sv_seed, settings, bounds ? &*bounds : nullptr, net ? &*net : nullptr);
    }
    else if (sv_solver == "fns-lite")
    {
      const auto *p = std::get_if<AnisotropicProblem>(&spec);
      if (p == nullptr || sv_checkpoint.empty())
      {
        throw ConfigError("fns-lite needs an anisotropic problem and --checkpoint");
      }
      const auto model = restore_fns_lite(load_checkpoint(sv_checkpoint));
      std::cout << "# " << stopping_rule(sv_tol) << "\n";
      row = solve_fns_lite_row(*p, model, sv_seed, settings);
    }
    else if (sv_solver == "fgmres")
    {
      const auto *p = std::get_if<HelmholtzProblem>(&spec);
      if (p == nullptr)
      {
        throw ConfigError("the fgmres solver runs on helmholtz problems");
      }
      HelmholtzPrecond hp = HelmholtzPrecond::Identity;
      if (sv_hprecond == "vcycle")
      {
        hp = HelmholtzPrecond::VCycle;
      }
      else if (sv_hprecond == "vcycle-ns")
      {
        hp = HelmholtzPrecond::LearnedVCycle;
      }
      else if (sv_hprecond != "none")
      {
        throw ConfigError("unknown --helmholtz-precond '" + sv_hprecond + "'");
      }
      HelmholtzSmoother smoother;
      smoother.variant = parse_variant_name(sv_smoother_variant);
      smoother.m = sv_m == 3 ? smoother.m : sv_m;
      std::optional<MetaNet> net;
      if (hp == HelmholtzPrecond::LearnedVCycle)
      {
        if (sv_checkpoint.empty())
        {
          throw ConfigError("vcycle-ns needs --checkpoint");
        }
        net = restore_net(load_checkpoint(sv_checkpoint));
      }
      std::cout << "# " << stopping_rule(sv_tol) << "\n";
      row = solve_helmholtz(*p, hp, smoother, sv_seed, settings, net ? &*net : nullptr);
    }
    else
    {
      throw ConfigError("unknown solver '" + sv_solver + "' (expected richardson, fgmres or fns-lite)");
    }
    row.table = "solve";
    write_csv_row(std::cout, csv_header());
    write_csv_row(std::cout, csv_fields(row));
    if (row.note == "diverged")
    {
      return 1;
    }
    return row.converged ? 0 : 1;
  }

  if (*train)
  {
    ts.variant = parse_variant_name(tr_variant);
    ts.precond = make_precond(tr_precond, tr_relax);
    if (llo->count() > 0)
    {
      ts.train.learn_log_omega = tr_learn_log_omega;
    }
    else
    {
      ts.train.learn_log_omega = parse_problem_kind(ts.problem) == ProblemKind::Helmholtz;
    }
    // The Helmholtz operator scales like 8 n^2, so an absolute 0.3 diverges at once.
    if (init_omega->count() == 0 && parse_problem_kind(ts.problem) == ProblemKind::Helmholtz)
    {
      ts.train.initial_omega = 1.0 / (6.0 * double(ts.n) * double(ts.n));
    }
    ts.fns.base = ts.train;
    ts.train.Validate();
    if (ts.solver == "fns-lite")
    {
      ts.fns.Validate();
    }
    check_budget(ts.n, ts.samples, tr_full);
    if (tr_full)
    {
      const int m = ts.solver == "fns-lite" ? ts.fns.smoothing : ts.train.m;
      const int K = ts.solver == "fns-lite" ? ts.fns.steps : ts.train.K;
      std::cerr << "warning: full-scale run, estimated " << estimate_train_seconds(ts.n, ts.samples, ts.train.epochs, K, m)
                << " s of single-core training\n";
    }
    const auto ck = train_to_checkpoint(ts, std::cerr);
    save_checkpoint(tr_out, ck);
    std::cout << "wrote " << tr_out << "\n";
    return 0;
  }

  if (*reproduce_cmd)
  {
    rc.solve.spectrum = parse_spectrum_source(rp_spectrum);
    if (rp_out.empty())
    {
      reproduce(rc, std::cout, std::cerr);
    }
    else
    {
      std::ofstream os(rp_out, std::ios::binary);
      if (!os)
      {
        throw ConfigError("cannot write " + rp_out);
      }
      reproduce(rc, os, std::cerr);
      std::cerr << "wrote " << rp_out << "\n";
    }
    return 0;
  }
  return 2;
}

}  // namespace

int main(int argc, char **argv)
{
  try
  {
    return run(argc, argv);
  }
  catch (const DivergenceError &e)
  {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  catch (const TrainingDivergedError &e)
  {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  catch (const ConvergenceError &e)
  {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  catch (const std::exception &e)
  {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
