// SPDX-License-Identifier: Apache-2.0

#include "richlab/dataset.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

namespace richlab
{

std::string to_string(ProblemKind kind)
{
  return kind == ProblemKind::Anisotropic ? "anisotropic" : "helmholtz";
}

ProblemKind parse_problem_kind(std::string_view name)
{
  if (name == "anisotropic")
  {
    return ProblemKind::Anisotropic;
  }
  if (name == "helmholtz")
  {
    return ProblemKind::Helmholtz;
  }
  throw ConfigError("unsupported problem kind '" + std::string(name) + "'");
}

DatasetManifest sample_manifest(std::string_view kind, int count, std::uint64_t seed, int n)
{
  if (count < 1)
  {
    throw ConfigError("dataset: count must be at least 1");
  }
  DatasetManifest out;
  out.kind = parse_problem_kind(kind);
  out.count = count;
  out.seed = seed;
  out.n = n;
  std::mt19937_64 rng(seed);
  if (out.kind == ProblemKind::Anisotropic)
  {
    std::uniform_real_distribution<double> eps(1e-6, 1.0), theta(0.0, std::numbers::pi);
    for (int i = 0; i < count; i++)
    {
      AnisotropicProblem p;
      p.epsilon = eps(rng);
      p.theta = theta(rng);
      p.n = n;
      p.Validate();
      out.specs.emplace_back(p);
    }
  }
  else
  {
    const double hi = std::max(1.0, n / 10.0);
    std::uniform_real_distribution<double> freq(1.0, hi);
    for (int i = 0; i < count; i++)
    {
      HelmholtzProblem p;
      p.omega = 2.0 * std::numbers::pi * freq(rng);
      p.n = n;
      p.Validate();
      out.specs.emplace_back(p);
    }
  }
  return out;
}

template <Field T>
std::vector<T> sample_rhs(std::uint64_t seed, std::size_t index, std::size_t size)
{
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    0x72686cu};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal;
  std::vector<T> f(size);
  for (auto &v : f)
  {
    if constexpr (is_complex<T>::value)
    {
      const double re = normal(rng);
      const double im = normal(rng);
      v = T(re, im);
    }
    else
    {
      v = normal(rng);
    }
  }
  return f;
}

namespace
{

std::string exact(double x)
{
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

}  // namespace

void write_manifest(std::ostream &os, const DatasetManifest &manifest)
{
  os << "# " << kDatasetGenerator << "\n";
  os << "kind " << to_string(manifest.kind) << "\n";
  os << "count " << manifest.count << "\n";
  os << "seed " << manifest.seed << "\n";
  os << "n " << manifest.n << "\n";
  os << "mu_names "
     << (manifest.kind == ProblemKind::Anisotropic ? "lg_epsilon theta" : "omega") << "\n";
  for (std::size_t i = 0; i < manifest.specs.size(); i++)
  {
    os << "mu " << i;
    for (double v : manifest.Mu(i))
    {
      os << ' ' << exact(v);
    }
    os << "\n";
  }
}

DatasetManifest read_manifest(std::istream &is)
{
  std::string line, kind;
  int count = -1, n = -1;
  std::uint64_t seed = 0;
  bool have_seed = false;
  std::vector<std::vector<double>> listed;
  while (std::getline(is, line))
  {
    if (line.empty() || line[0] == '#')
    {
      continue;
    }
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "kind")
    {
      ls >> kind;
    }
    else if (key == "count")
    {
      ls >> count;
    }
    else if (key == "seed")
    {
      ls >> seed;
      have_seed = true;
    }
    else if (key == "n")
    {
      ls >> n;
    }
    else if (key == "mu")
    {
      std::size_t idx = 0;
      ls >> idx;
      std::vector<double> mu;
      std::string tok;
      while (ls >> tok)
      {
        mu.push_back(std::stod(tok));
      }
      if (idx != listed.size())
      {
        throw ConfigError("dataset manifest: mu rows out of order at index " +
                          std::to_string(idx));
      }
      listed.push_back(std::move(mu));
    }
    else if (key != "mu_names")
    {
      throw ConfigError("dataset manifest: unknown key '" + key + "'");
    }
  }
  if (kind.empty() || count < 1 || n < 2 || !have_seed)
  {
    throw ConfigError("dataset manifest: missing kind, count, seed or n");
  }
  auto out = sample_manifest(kind, count, seed, n);
  if (!listed.empty())
  {
    if (listed.size() != out.specs.size())
    {
      throw ConfigError("dataset manifest: lists " + std::to_string(listed.size()) +
                        " samples, count says " + std::to_string(count));
    }
    for (std::size_t i = 0; i < listed.size(); i++)
    {
      if (listed[i] != out.Mu(i))
      {
        throw ConfigError("dataset manifest: sample " + std::to_string(i) +
                          " does not match the regenerated parameters");
      }
    }
  }
  return out;
}

template <Field T>
Instance<T> make_instance(const ProblemSpec &spec, std::uint64_t seed, std::size_t index)
{
  Instance<T> inst;
  inst.spec = spec;
  inst.mu = parameters(spec);
  if constexpr (is_complex<T>::value)
  {
    const auto *h = std::get_if<HelmholtzProblem>(&spec);
    if (!h)
    {
      throw ConfigError("complex instance requires a helmholtz problem");
    }
    inst.A = assemble_helmholtz(*h);
  }
  else
  {
    const auto *a = std::get_if<AnisotropicProblem>(&spec);
    if (!a)
    {
      throw ConfigError("real instance requires an anisotropic problem");
    }
    inst.A = assemble_anisotropic(*a);
  }
  inst.f = sample_rhs<T>(seed, index, inst.A.rows());
  return inst;
}

template <Field T>
Dataset<T> build_dataset(const DatasetManifest &manifest)
{
  const bool want_complex = manifest.kind == ProblemKind::Helmholtz;
  if (want_complex != is_complex<T>::value)
  {
    throw ConfigError("dataset kind " + to_string(manifest.kind) +
                      " does not match the requested scalar field");
  }
  Dataset<T> out;
  out.manifest = manifest;
  out.items.reserve(manifest.specs.size());
  for (std::size_t i = 0; i < manifest.specs.size(); i++)
  {
    out.items.push_back(make_instance<T>(manifest.specs[i], manifest.seed, i));
  }
  return out;
}

template std::vector<double> sample_rhs<double>(std::uint64_t, std::size_t, std::size_t);
template std::vector<Complex> sample_rhs<Complex>(std::uint64_t, std::size_t, std::size_t);
template Instance<double> make_instance<double>(const ProblemSpec &, std::uint64_t,
                                                std::size_t);
template Instance<Complex> make_instance<Complex>(const ProblemSpec &, std::uint64_t,
                                                  std::size_t);
template Dataset<double> build_dataset<double>(const DatasetManifest &);
template Dataset<Complex> build_dataset<Complex>(const DatasetManifest &);

}  // namespace richlab
