// SPDX-License-Identifier: Apache-2.0

#include "harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <mutex>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

#include "richlab/parallel.hpp"
#include "richlab/richardson.hpp"

namespace richlab::harness
{

std::string csv_escape(std::string_view field)
{
  if (field.find_first_of(",\"\r\n") == std::string_view::npos)
  {
    return std::string(field);
  }
  std::string out = "\"";
  for (char c : field)
  {
    if (c == '"')
    {
      out += '"';
    }
    out += c;
  }
  out += '"';
  return out;
}

void write_csv_row(std::ostream &os, const std::vector<std::string> &fields)
{
  for (std::size_t i = 0; i < fields.size(); i++)
  {
    if (i > 0)
    {
      os << ',';
    }
    os << csv_escape(fields[i]);
  }
  os << "\r\n";
}

std::vector<std::string> parse_csv_row(std::string_view line)
{
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r'))
  {
    line.remove_suffix(1);
  }
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); i++)
  {
    const char c = line[i];
    if (quoted)
    {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"')
      {
        out.back() += '"';
        i++;
      }
      else if (c == '"')
      {
        quoted = false;
      }
      else
      {
        out.back() += c;
      }
    }
    else if (c == '"')
    {
      quoted = true;
    }
    else if (c == ',')
    {
      out.emplace_back();
    }
    else
    {
      out.back() += c;
    }
  }
  if (quoted)
  {
    throw Error("csv: unterminated quoted field");
  }
  return out;
}

std::string to_string(WeightSource s)
{
  switch (s)
  {
    case WeightSource::Chebyshev:
      return "chebyshev";
    case WeightSource::Semi:
      return "semi";
    case WeightSource::Checkpoint:
      return "checkpoint";
    case WeightSource::Literal:
      return "literal";
  }
  return "?";
}

WeightSource parse_weight_source(std::string_view name)
{
  for (auto s : {WeightSource::Chebyshev, WeightSource::Semi, WeightSource::Checkpoint, WeightSource::Literal})
  {
    if (name == to_string(s))
    {
      return s;
    }
  }
  throw ConfigError("unknown weight source '" + std::string(name) +
                    "' (expected chebyshev, semi, checkpoint or literal)");
}

std::string to_string(SpectrumSource s)
{
  switch (s)
  {
    case SpectrumSource::Auto:
      return "auto";
    case SpectrumSource::Dense:
      return "dense";
    case SpectrumSource::Power:
      return "power";
  }
  return "?";
}

SpectrumSource parse_spectrum_source(std::string_view name)
{
  for (auto s : {SpectrumSource::Auto, SpectrumSource::Dense, SpectrumSource::Power})
  {
    if (name == to_string(s))
    {
      return s;
    }
  }
  throw ConfigError("unknown spectrum source '" + std::string(name) + "' (expected auto, dense or power)");
}

SpectralBounds spectrum_for(const SparseMatrix<double> &A, SpectrumSource source, bool need_min)
{
  if (source == SpectrumSource::Dense || (source == SpectrumSource::Auto && A.rows() <= kAutoDenseDim))
  {
    return dense_spectral_bounds(A);
  }
  auto hi = estimate_lambda_max(A, 1e-10, 1000000, 1);
  if (!need_min)
  {
    return hi;
  }
  return estimate_lambda_min(A, hi.lambda_max, 1e-12, 50000000, 1);
}

std::string precond_label(const PreconditionerSpec &spec)
{
  if (spec.kind == PreconditionerKind::Identity)
  {
    return "none";
  }
  if (spec.kind == PreconditionerKind::GaussSeidel)
  {
    return to_string(spec.kind);
  }
  return to_string(spec.kind) + "(" + format_double(spec.relax) + ")";
}

std::string method_label(const MethodSpec &method)
{
  switch (method.source)
  {
    case WeightSource::Chebyshev:
      return "chebyshev";
    case WeightSource::Semi:
      return "semi(" + format_double(method.semi_alpha) + ")";
    case WeightSource::Checkpoint:
      return "ns-" + to_string(method.variant);
    case WeightSource::Literal:
      return "literal-" + to_string(method.variant);
  }
  return "?";
}

bool needs_spectrum(const MethodSpec &method)
{
  return method.source == WeightSource::Chebyshev || method.source == WeightSource::Semi;
}

bool needs_lambda_min(const MethodSpec &method) { return method.source == WeightSource::Chebyshev; }

WeightSchedule resolve_schedule(const MethodSpec &method, const SpectralBounds *bounds,
                                const std::vector<double> &mu, const MetaNet *net)
{
  if (method.m < 1)
  {
    throw ConfigError("m must be >= 1");
  }
  if (needs_spectrum(method))
  {
    if (method.variant != Variant::Plain)
    {
      throw ConfigError(to_string(method.source) + " weights define a plain Richardson schedule");
    }
    if (method.precond.kind != PreconditionerKind::Identity)
    {
      throw ConfigError(to_string(method.source) +
                        " weights are computed from the spectrum of A and need the identity preconditioner");
    }
    if (bounds == nullptr)
    {
      throw ConfigError("spectral bounds missing");
    }
    if (method.source == WeightSource::Chebyshev)
    {
      return WeightSchedule::Plain(chebyshev_weights(bounds->lambda_max, bounds->lambda_min, method.m));
    }
    return WeightSchedule::Plain(chebyshev_semi_weights(bounds->lambda_max, method.semi_alpha, method.m));
  }
  if (method.source == WeightSource::Literal)
  {
    return WeightSchedule::Unpack(method.variant, method.m, method.literal);
  }
  if (net == nullptr)
  {
    throw ConfigError("checkpoint '" + method.checkpoint + "' is not loaded");
  }
  if (net->GetVariant() != method.variant || net->M() != method.m)
  {
    throw ConfigError("checkpoint '" + method.checkpoint + "' holds " + to_string(net->GetVariant()) +
                      " with m = " + std::to_string(net->M()) + ", requested " + to_string(method.variant) +
                      " with m = " + std::to_string(method.m));
  }
  return net->Forward(mu);
}

int helmholtz_coarsest_n(int n, double omega, double points)
{
  const double wavelengths = omega / (2.0 * std::numbers::pi);
  int c = 8;
  while (c < n / 2 && c < points * wavelengths)
  {
    c *= 2;
  }
  // Dense coarse solve limit: (c - 1)^2 <= 1024.
  while ((c - 1) * (c - 1) > 1024)
  {
    c /= 2;
  }
  return std::min(c, n / 2);
}

namespace
{

WeightSchedule make_schedule(Variant v, std::vector<double> omega, double momentum)
{
  const std::vector<double> a(omega.size(), momentum);
  switch (v)
  {
    case Variant::Plain:
      return WeightSchedule::Plain(std::move(omega));
    case Variant::Mom:
      return WeightSchedule::Mom(std::move(omega), a);
    case Variant::Nag:
      return WeightSchedule::Nag(std::move(omega), a);
    case Variant::NagEx:
      return WeightSchedule::NagEx(std::move(omega), a, a);
  }
  return WeightSchedule::Plain(std::move(omega));
}

}  // namespace

ScheduleForLevel<Complex> helmholtz_schedule(const HelmholtzSmoother &s)
{
  return [s](int, const SparseMatrix<Complex> &A) {
    return make_schedule(s.variant, chebyshev_semi_weights(A.MaxAbsRowSum(), s.semi_alpha, s.m),
                         s.variant == Variant::Plain ? 0.0 : s.momentum);
  };
}

ScheduleForLevel<Complex> learned_helmholtz_schedule(const MetaNet &net, const std::vector<double> &mu,
                                                     const SparseMatrix<Complex> &A)
{
  return rescaled_schedule<Complex>(net.Forward(mu), A);
}

std::string format_double(double x)
{
  if (std::isnan(x))
  {
    return "";
  }
  return exact_decimal(x);
}

std::vector<std::string> csv_header()
{
  return {"table",     "eps",       "theta",     "n",           "method",       "m",       "precond",
          "seed",      "inner_iters", "outer_iters", "converged", "rel_residual", "wall_ms", "omega",
          "note"};
}

std::vector<std::string> csv_fields(const Row &row)
{
  std::vector<std::string> f{row.table,
                             format_double(row.eps),
                             format_double(row.theta),
                             std::to_string(row.n),
                             row.method,
                             std::to_string(row.m),
                             row.precond,
                             std::to_string(row.seed)};
  if (row.skipped)
  {
    f.insert(f.end(), {"", "", "skipped", "", "", format_double(row.omega), row.note});
    return f;
  }
  f.insert(f.end(), {std::to_string(row.inner), std::to_string(row.outer), row.converged ? "true" : "false",
                     format_double(row.rel_residual), format_double(std::round(row.wall_ms * 1000.0) / 1000.0),
                     format_double(row.omega), row.note});
  return f;
}

std::string stopping_rule(double tol)
{
  return "stopping rule: ||f - A u||_2 / ||f||_2 <= " + format_double(tol) + " from a zero initial guess";
}

Row solve_anisotropic(const AnisotropicProblem &p, const MethodSpec &method, std::uint64_t seed,
                      const SolveSettings &settings, const SpectralBounds *bounds, const MetaNet *net)
{
  Row row;
  row.eps = p.epsilon;
  row.theta = p.theta;
  row.omega = std::nan("");
  row.n = p.n;
  row.method = method_label(method);
  row.m = method.m;
  row.precond = precond_label(method.precond);
  row.seed = seed;
  const auto A = assemble_anisotropic(p);
  const auto f = sample_rhs<double>(seed, 0, A.rows());
  const Preconditioner<double> P(A, method.precond);
  const auto schedule = resolve_schedule(method, bounds, parameters(ProblemSpec{p}), net);
  StationaryOptions opts;
  opts.tol = settings.tol;
  opts.max_outer = settings.max_outer;
  const auto start = std::chrono::steady_clock::now();
  try
  {
    const auto res = solve_stationary(A, f, schedule, P, opts);
    row.inner = res.report.inner_iterations;
    row.outer = res.report.iterations;
    row.converged = res.report.converged;
    row.rel_residual = res.report.final_relative_residual;
    row.wall_ms = res.report.wall_ms;
    if (!row.converged)
    {
      row.note = res.report.stop_reason;
    }
  }
  catch (const DivergenceError &e)
  {
    row.outer = e.iteration;
    row.inner = e.iteration * method.m;
    row.converged = false;
    row.rel_residual = e.residual;
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    row.note = "diverged";
  }
  return row;
}

Row solve_fns_lite_row(const AnisotropicProblem &p, const FnsLiteModel &model, std::uint64_t seed,
                       const SolveSettings &settings)
{
  Row row;
  row.eps = p.epsilon;
  row.theta = p.theta;
  row.omega = std::nan("");
  row.n = p.n;
  row.method = "fns-lite";
  row.m = model.net_active ? model.omega_net.M() : model.fixed_schedule.m();
  row.precond = "none";
  row.seed = seed;
  if (p.n != model.n)
  {
    throw ConfigError("hybrid model was trained at n = " + std::to_string(model.n) + ", problem has n = " +
                      std::to_string(p.n));
  }
  const auto A = assemble_anisotropic(p);
  const auto f = sample_rhs<double>(seed, 0, A.rows());
  const auto mu = parameters(ProblemSpec{p});
  StationaryOptions opts;
  opts.tol = settings.tol;
  opts.max_outer = settings.max_outer;
  const auto start = std::chrono::steady_clock::now();
  try
  {
    const auto res = solve_fns_lite(A, f, model.ScheduleFor(mu), model.smoothing, model.CorrectionFor(mu),
                                    Preconditioner<double>(), opts);
    row.inner = res.report.inner_iterations;
    row.outer = res.report.iterations;
    row.converged = res.report.converged;
    row.rel_residual = res.report.final_relative_residual;
    row.wall_ms = res.report.wall_ms;
  }
  catch (const DivergenceError &e)
  {
    row.outer = e.iteration;
    row.inner = e.iteration * model.smoothing;
    row.rel_residual = e.residual;
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    row.note = "diverged";
  }
  return row;
}

std::string to_string(HelmholtzPrecond p)
{
  switch (p)
  {
    case HelmholtzPrecond::Identity:
      return "none";
    case HelmholtzPrecond::VCycle:
      return "vcycle";
    case HelmholtzPrecond::LearnedVCycle:
      return "vcycle-ns";
  }
  return "?";
}

Row solve_helmholtz(const HelmholtzProblem &p, HelmholtzPrecond precond, const HelmholtzSmoother &smoother,
                    std::uint64_t seed, const SolveSettings &settings, const MetaNet *net)
{
  Row row;
  row.eps = std::nan("");
  row.theta = std::nan("");
  row.omega = p.omega;
  row.n = p.n;
  row.seed = seed;
  row.precond = to_string(precond);
  const auto A = assemble_helmholtz(p);
  const auto f = sample_rhs<Complex>(seed, 0, A.rows());
  FgmresConfig cfg;
  cfg.restart = settings.restart;
  cfg.tol = settings.tol;
  cfg.max_outer = settings.max_restarts;

  std::optional<Hierarchy<Complex>> h;
  PrecondApply<Complex> apply = identity_precond<Complex>();
  if (precond == HelmholtzPrecond::Identity)
  {
    row.method = "fgmres";
    row.m = 0;
  }
  else
  {
    HierarchyOptions opts;
    opts.coarsest_n = helmholtz_coarsest_n(p.n, p.omega);
    if (precond == HelmholtzPrecond::VCycle)
    {
      row.method = "fgmres+" + to_string(smoother.variant) + "-richardson";
      row.m = smoother.m;
      h.emplace(A, p.n, helmholtz_schedule(smoother), opts);
    }
    else
    {
      if (net == nullptr)
      {
        throw ConfigError("learned V-cycle needs a checkpoint");
      }
      row.method = "fgmres+ns-" + to_string(net->GetVariant());
      row.m = net->M();
      h.emplace(A, p.n, learned_helmholtz_schedule(*net, parameters(ProblemSpec{p}), A), opts);
    }
    const int pre = smoother.pre, post = smoother.post;
    apply = [&h, pre, post](const std::vector<Complex> &v) {
      return v_cycle<Complex>(*h, v, std::vector<Complex>(v.size()), pre, post);
    };
    row.note = "coarsest n = " + std::to_string(opts.coarsest_n);
  }
  const auto start = std::chrono::steady_clock::now();
  try
  {
    const auto res = fgmres<Complex>(A, f, apply, cfg);
    row.inner = res.report.iterations;
    row.outer = static_cast<long>(res.restart_residuals.size());
    row.converged = res.report.converged;
    row.rel_residual = res.report.final_relative_residual;
    row.wall_ms = res.report.wall_ms;
    if (res.report.stagnated)
    {
      row.note += row.note.empty() ? "stagnated" : "; stagnated";
    }
  }
  catch (const DivergenceError &e)
  {
    row.inner = e.iteration;
    row.rel_residual = e.residual;
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    row.note = "diverged";
  }
  return row;
}

std::string ns_checkpoint_name(Variant v, int m, const PreconditionerSpec &p)
{
  return "ns-" + to_string(v) + "-m" + std::to_string(m) + "-" +
         (p.kind == PreconditionerKind::Identity ? std::string("none") : to_string(p.kind)) + ".ckpt";
}

namespace
{

enum class CellKind
{
  Stationary,
  Helmholtz
};

struct Cell
{
  CellKind kind = CellKind::Stationary;
  AnisotropicProblem aniso{};
  HelmholtzProblem helm{};
  MethodSpec method{};
  HelmholtzPrecond hprecond = HelmholtzPrecond::Identity;
  HelmholtzSmoother smoother{};
  std::uint64_t seed = 0;
  std::string skip;  // non-empty marks the row skipped
  Row Skeleton(const std::string &table) const
  {
    Row r;
    r.table = table;
    r.seed = seed;
    r.skipped = true;
    r.note = skip;
    if (kind == CellKind::Stationary)
    {
      r.eps = aniso.epsilon;
      r.theta = aniso.theta;
      r.omega = std::nan("");
      r.n = aniso.n;
      r.method = method_label(method);
      r.m = method.m;
      r.precond = precond_label(method.precond);
    }
    else
    {
      r.eps = std::nan("");
      r.theta = std::nan("");
      r.omega = helm.omega;
      r.n = helm.n;
      r.precond = to_string(hprecond);
      if (hprecond == HelmholtzPrecond::Identity)
      {
        r.method = "fgmres";
      }
      else if (hprecond == HelmholtzPrecond::VCycle)
      {
        r.method = "fgmres+" + to_string(smoother.variant) + "-richardson";
        r.m = smoother.m;
      }
      else
      {
        r.method = "fgmres+ns-" + to_string(method.variant);
        r.m = method.m;
      }
    }
    return r;
  }
};

MethodSpec learned(Variant v, int m, PreconditionerSpec p, const std::string &dir)
{
  MethodSpec s;
  s.variant = v;
  s.m = m;
  s.precond = p;
  s.source = WeightSource::Checkpoint;
  s.checkpoint = (std::filesystem::path(dir) / ns_checkpoint_name(v, m, p)).string();
  return s;
}

MethodSpec spectral(WeightSource src, int m)
{
  MethodSpec s;
  s.m = m;
  s.source = src;
  return s;
}

std::vector<Cell> build_grid(const ReproduceConfig &c)
{
  const PreconditionerSpec none{}, ssor{PreconditionerKind::Ssor, 1.0};
  const auto &dir = c.checkpoint_dir;
  std::vector<Cell> cells;
  auto add_stationary = [&](AnisotropicProblem p, const std::vector<MethodSpec> &methods, const std::string &skip) {
    for (const auto &m : methods)
    {
      for (int s = 0; s < c.seeds; s++)
      {
        Cell cell;
        cell.aniso = p;
        cell.method = m;
        cell.seed = static_cast<std::uint64_t>(s);
        cell.skip = skip;
        cells.push_back(cell);
      }
    }
  };
  auto budget = [&](int n) -> std::string {
    if (n > kDeskMaxN && !c.full)
    {
      return "exceeds desk-scale budget (n > " + std::to_string(kDeskMaxN) + "); rerun with --full";
    }
    return "";
  };

  if (c.table == "t2")
  {
    const std::vector<MethodSpec> methods{
        learned(Variant::Plain, 1, none, dir),   spectral(WeightSource::Chebyshev, 3),
        spectral(WeightSource::Semi, 3),         learned(Variant::Plain, 3, none, dir),
        learned(Variant::Plain, 7, none, dir),   learned(Variant::Plain, 15, none, dir),
        learned(Variant::Mom, 3, none, dir),     learned(Variant::Nag, 3, none, dir),
        learned(Variant::NagEx, 3, none, dir),   learned(Variant::NagEx, 3, ssor, dir)};
    for (double eps : {1.0, 1e-2, 1e-4, 1e-6, 1e-8})
    {
      add_stationary({eps, 0.0, 64}, methods, "");
    }
  }
  else if (c.table == "t3")
  {
    const std::vector<MethodSpec> methods{spectral(WeightSource::Semi, 3), learned(Variant::NagEx, 3, ssor, dir)};
    const double pi = std::numbers::pi;
    for (double theta : {0.0, pi / 6, pi / 3, pi / 2, 2 * pi / 3, 5 * pi / 6, pi})
    {
      add_stationary({1e-6, theta, 64}, methods, "");
    }
  }
  else if (c.table == "t4")
  {
    const std::vector<MethodSpec> methods{spectral(WeightSource::Semi, 3), learned(Variant::NagEx, 3, ssor, dir)};
    for (int n : {32, 64, 128, 256, 512})
    {
      add_stationary({1e-6, std::numbers::pi / 10, n}, methods, budget(n));
    }
  }
  else if (c.table == "helmholtz-sweep")
  {
    HelmholtzSmoother plain;
    plain.variant = Variant::Plain;
    HelmholtzSmoother nag;
    for (int n : {64, 128, 256, 512, 1024, 2048, 4096})
    {
      HelmholtzProblem hp;
      hp.n = n;
      hp.omega = 2 * std::numbers::pi * (n / 12.8);
      std::string skip = budget(n);
      if (skip.empty() && n > 512)
      {
        skip = "beyond the dense coarse-grid limit of this harness";
      }
      for (int s = 0; s < c.seeds; s++)
      {
        for (int variant = 0; variant < 6; variant++)
        {
          Cell cell;
          cell.kind = CellKind::Helmholtz;
          cell.helm = hp;
          cell.seed = static_cast<std::uint64_t>(s);
          cell.skip = skip;
          switch (variant)
          {
            case 0:
              cell.hprecond = HelmholtzPrecond::Identity;
              break;
            case 1:
              cell.hprecond = HelmholtzPrecond::VCycle;
              cell.smoother = plain;
              break;
            case 2:
              cell.hprecond = HelmholtzPrecond::VCycle;
              cell.smoother = nag;
              break;
            default:
            {
              const Variant v = variant == 3 ? Variant::Plain : variant == 4 ? Variant::Mom : Variant::Nag;
              cell.hprecond = HelmholtzPrecond::LearnedVCycle;
              cell.method.variant = v;
              cell.method.m = 5;
              cell.method.source = WeightSource::Checkpoint;
              cell.method.checkpoint =
                  (std::filesystem::path(dir) / ("wans-" + to_string(v) + "-m5.ckpt")).string();
            }
          }
          cells.push_back(cell);
        }
      }
    }
  }
  else
  {
    throw ConfigError("unknown table '" + c.table + "' (expected t2, t3, t4 or helmholtz-sweep)");
  }
  return cells;
}

std::string problem_key(const AnisotropicProblem &p)
{
  return exact_decimal(p.epsilon) + "/" + exact_decimal(p.theta) + "/" + std::to_string(p.n);
}

}  // namespace

void reproduce(const ReproduceConfig &config, std::ostream &csv, std::ostream &log)
{
  if (config.seeds < 1)
  {
    throw ConfigError("seeds must be >= 1");
  }
  auto cells = build_grid(config);

  // Load every referenced checkpoint once; a missing file marks its rows skipped.
  std::map<std::string, MetaNet> nets;
  for (auto &cell : cells)
  {
    if (cell.method.source != WeightSource::Checkpoint || !cell.skip.empty())
    {
      continue;
    }
    const auto &path = cell.method.checkpoint;
    if (!nets.count(path))
    {
      if (!std::filesystem::exists(path))
      {
        cell.skip = "missing checkpoint " + path;
        continue;
      }
      nets.emplace(path, restore_net(load_checkpoint(path)));
    }
  }

  // Spectra once per anisotropic problem.
  std::map<std::string, std::pair<AnisotropicProblem, bool>> wanted;
  for (const auto &cell : cells)
  {
    if (cell.kind == CellKind::Stationary && cell.skip.empty() && needs_spectrum(cell.method))
    {
      auto &w = wanted[problem_key(cell.aniso)];
      w.first = cell.aniso;
      w.second = w.second || needs_lambda_min(cell.method);
    }
  }
  std::vector<std::string> keys;
  for (const auto &kv : wanted)
  {
    keys.push_back(kv.first);
  }
  std::vector<SpectralBounds> bounds(keys.size());
  parallel_for(keys.size(), config.threads, [&](std::size_t i) {
    const auto &[p, need_min] = wanted.at(keys[i]);
    bounds[i] = spectrum_for(assemble_anisotropic(p), config.solve.spectrum, need_min);
  });
  std::map<std::string, const SpectralBounds *> bound_of;
  for (std::size_t i = 0; i < keys.size(); i++)
  {
    bound_of[keys[i]] = &bounds[i];
    log << "spectrum " << keys[i] << ": lambda_max " << bounds[i].lambda_max << ", lambda_min "
        << bounds[i].lambda_min << " (" << to_string(bounds[i].method) << ")\n";
  }

  std::vector<Row> rows(cells.size());
  std::mutex log_mutex;
  parallel_for(cells.size(), config.threads, [&](std::size_t i) {
    const auto &cell = cells[i];
    if (!cell.skip.empty())
    {
      rows[i] = cell.Skeleton(config.table);
      return;
    }
    const MetaNet *net = nullptr;
    if (cell.method.source == WeightSource::Checkpoint)
    {
      net = &nets.at(cell.method.checkpoint);
    }
    Row r;
    if (cell.kind == CellKind::Stationary)
    {
      const SpectralBounds *b = needs_spectrum(cell.method) ? bound_of.at(problem_key(cell.aniso)) : nullptr;
      r = solve_anisotropic(cell.aniso, cell.method, cell.seed, config.solve, b, net);
    }
    else
    {
      r = solve_helmholtz(cell.helm, cell.hprecond, cell.smoother, cell.seed, config.solve, net);
    }
    r.table = config.table;
    rows[i] = r;
    std::lock_guard<std::mutex> lock(log_mutex);
    log << config.table << " n=" << r.n << " " << r.method << " " << r.precond << " seed " << r.seed << ": "
        << r.inner << " inner, " << r.outer << " outer" << (r.converged ? "" : " (not converged)") << "\n";
  });

  csv << "# " << stopping_rule(config.solve.tol) << "\r\n";
  write_csv_row(csv, csv_header());
  for (const auto &r : rows)
  {
    write_csv_row(csv, csv_fields(r));
  }

  // Per-configuration means for the log.
  std::map<std::string, std::pair<double, int>> means;
  std::vector<std::string> order;
  for (const auto &r : rows)
  {
    if (r.skipped)
    {
      continue;
    }
    const std::string key = "n=" + std::to_string(r.n) + " eps=" + format_double(r.eps) +
                            " theta=" + format_double(r.theta) + " omega=" + format_double(r.omega) + " " +
                            r.method + " m=" + std::to_string(r.m) + " " + r.precond;
    if (!means.count(key))
    {
      order.push_back(key);
    }
    auto &acc = means[key];
    acc.first += config.table == "helmholtz-sweep" ? double(r.inner) : double(r.outer);
    acc.second++;
  }
  for (const auto &k : order)
  {
    log << "mean " << (config.table == "helmholtz-sweep" ? "fgmres iterations" : "outer sweeps") << " " << k
        << ": " << means[k].first / means[k].second << "\n";
  }
}

std::vector<Row> plan_grid(const ReproduceConfig &config)
{
  std::vector<Row> rows;
  for (const auto &cell : build_grid(config))
  {
    auto r = cell.Skeleton(config.table);
    r.skipped = !cell.skip.empty();
    rows.push_back(r);
  }
  return rows;
}

double estimate_train_seconds(int n, int samples, int epochs, int K, int m)
{
  // About 40 flops per stencil entry for a forward plus reverse inner step, at ~1 GFLOP/s.
  const double unknowns = double(n - 1) * double(n - 1);
  return 40.0 * 9.0 * unknowns * double(K) * double(m) * double(samples) * double(epochs) / 1e9;
}

std::string config_echo(const TrainSettings &s)
{
  std::ostringstream os;
  const auto &t = s.train;
  os << "problem=" << s.problem << " solver=" << s.solver << " n=" << s.n << " samples=" << s.samples
     << " data_seed=" << s.data_seed << " variant=" << to_string(s.variant) << " precond=" << precond_label(s.precond)
     << " K=" << t.K << " epochs=" << t.epochs << " batch_size=" << t.batch_size
     << " learning_rate=" << exact_decimal(t.learning_rate) << " optimizer=" << t.optimizer << " m=" << t.m
     << " seed=" << t.seed << " patience=" << t.patience
     << " validation_fraction=" << exact_decimal(t.validation_fraction) << " hidden=";
  for (std::size_t i = 0; i < t.hidden.size(); i++)
  {
    os << (i ? "," : "") << t.hidden[i];
  }
  os << " learn_log_omega=" << (t.learn_log_omega ? 1 : 0) << " initial_omega=" << exact_decimal(t.initial_omega)
     << " initial_alpha=" << exact_decimal(t.initial_alpha)
     << " initial_omega_spread=" << exact_decimal(t.initial_omega_spread)
     << " grad_clip=" << exact_decimal(t.grad_clip);
  if (s.solver == "fns-lite")
  {
    const auto &f = s.fns;
    os << " steps=" << f.steps << " smoothing=" << f.smoothing << " cycles=" << f.cycles
       << " interval=" << f.interval << " max_interval=" << f.max_interval << " plateau_window=" << f.plateau_window
       << " plateau_tol=" << exact_decimal(f.plateau_tol) << " omega0=" << exact_decimal(f.omega0)
       << " lambda_learning_rate=" << exact_decimal(f.lambda_learning_rate) << " bins=" << f.bins;
  }
  return os.str();
}

namespace
{

template <Field T>
Checkpoint train_ns_checkpoint(const TrainSettings &s, const Dataset<T> &data, std::ostream &log)
{
  const auto result = train_ns<T>(s.train, data, s.variant, s.precond, [&](int epoch, double tl, double vl) {
    log << "epoch " << epoch << " train_loss " << tl << " validation_loss " << vl << "\n";
  });
  Checkpoint ck;
  store_net(ck, result.net, config_echo(s));
  ck.Set("precond", precond_label(s.precond));
  ck.Set("best_epoch", std::to_string(result.history.best_epoch));
  ck.Set("early_stopped", result.history.early_stopped ? "1" : "0");
  ck.arrays.emplace_back("train_loss", result.history.train_loss);
  ck.arrays.emplace_back("validation_loss", result.history.validation_loss);
  log << "best epoch " << result.history.best_epoch << " validation loss "
      << result.history.validation_loss[result.history.best_epoch] << "\n";
  return ck;
}

}  // namespace

Checkpoint train_to_checkpoint(const TrainSettings &s, std::ostream &log)
{
  const auto manifest = sample_manifest(s.problem, s.samples, s.data_seed, s.n);
  if (s.solver == "ns")
  {
    if (manifest.kind == ProblemKind::Anisotropic)
    {
      return train_ns_checkpoint<double>(s, build_dataset<double>(manifest), log);
    }
    return train_ns_checkpoint<Complex>(s, build_dataset<Complex>(manifest), log);
  }
  if (s.solver == "fns-lite")
  {
    if (manifest.kind != ProblemKind::Anisotropic)
    {
      throw ConfigError("the hybrid solver is trained on anisotropic data only");
    }
    auto cfg = s.fns;
    cfg.base = s.train;
    const auto result = train_fns_lite(cfg, build_dataset<double>(manifest), [&](const FnsPhase &p, const FnsLiteModel &) {
      log << "phase " << p.name << " epochs " << p.train_loss.size() << " validation_loss " << p.validation_loss
          << "\n";
    });
    Checkpoint ck;
    store_fns_lite(ck, result.model);
    ck.Set("config", config_echo(s));
    ck.Set("best_phase", std::to_string(result.best_phase));
    ck.Set("early_stopped", result.early_stopped ? "1" : "0");
    log << "best phase " << result.best_phase << " (" << result.phases[result.best_phase].name << ")\n";
    return ck;
  }
  throw ConfigError("unknown solver '" + s.solver + "' (expected ns or fns-lite)");
}

}  // namespace richlab::harness
