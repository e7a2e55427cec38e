// SPDX-License-Identifier: Apache-2.0

#include "richlab/meta_net.hpp"

#include <cmath>
#include <random>

#include "richlab/core.hpp"

namespace richlab
{

std::string to_string(OmegaMap map) { return map == OmegaMap::Exp ? "exp" : "softplus"; }

OmegaMap parse_omega_map(std::string_view name)
{
  if (name == "softplus")
  {
    return OmegaMap::Softplus;
  }
  if (name == "exp")
  {
    return OmegaMap::Exp;
  }
  throw ConfigError("unknown omega map '" + std::string(name) + "'");
}

MetaNet::MetaNet(const MetaNetConfig &cfg) : config(cfg)
{
  if (config.m < 1)
  {
    throw ConfigError("meta network: m must be >= 1");
  }
  if (config.input_lo.empty() || config.input_lo.size() != config.input_hi.size())
  {
    throw ConfigError("meta network: input bounds must be nonempty and paired");
  }
  for (std::size_t k = 0; k < config.input_lo.size(); k++)
  {
    if (!(config.input_hi[k] > config.input_lo[k]))
    {
      throw ConfigError("meta network: input bound hi must exceed lo");
    }
  }
  for (int h : config.hidden)
  {
    if (h < 1)
    {
      throw ConfigError("meta network: hidden widths must be positive");
    }
  }
  if (!(config.initial_omega_spread > 0.0))
  {
    throw ConfigError("meta network: initial omega spread must be > 0");
  }
  if (!(config.initial_omega > 0.0) || !(config.initial_alpha > 0.0 && config.initial_alpha < 1.0))
  {
    throw ConfigError("meta network: initial omega must be > 0 and initial alpha in (0, 1)");
  }

  const auto widths = Widths();
  const int layers = static_cast<int>(widths.size()) - 1;
  params.assign(BiasOffset(layers - 1) + static_cast<std::size_t>(widths.back()), 0.0);

  std::mt19937_64 rng(config.seed);
  for (int l = 0; l < layers; l++)
  {
    const int in = widths[l], out = widths[l + 1];
    double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    if (l == layers - 1)
    {
      bound *= config.output_weight_scale;
    }
    std::uniform_real_distribution<double> dist(-bound, bound);
    const auto w0 = WeightOffset(l);
    for (std::size_t k = 0; k < static_cast<std::size_t>(in * out); k++)
    {
      params[w0 + k] = dist(rng);
    }
  }

  const auto b = BiasOffset(layers - 1);
  for (int i = 0; i < OutputDim(); i++)
  {
    if (i >= config.m)
    {
      params[b + i] = logit(config.initial_alpha);
      continue;
    }
    const double t = config.m > 1 ? double(i) / double(config.m - 1) : 0.0;
    const double w0 = config.initial_omega * std::pow(config.initial_omega_spread, t);
    params[b + i] = config.omega_map == OmegaMap::Exp ? std::log(w0) : softplus_inverse(w0);
  }
}

std::vector<int> MetaNet::Widths() const
{
  std::vector<int> w{InputDim()};
  w.insert(w.end(), config.hidden.begin(), config.hidden.end());
  w.push_back(OutputDim());
  return w;
}

int MetaNet::OutputDim() const { return weights_per_step(config.variant) * config.m; }

std::size_t MetaNet::WeightOffset(int layer) const
{
  const auto w = Widths();
  std::size_t off = 0;
  for (int l = 0; l < layer; l++)
  {
    off += static_cast<std::size_t>(w[l] * w[l + 1] + w[l + 1]);
  }
  return off;
}

std::size_t MetaNet::BiasOffset(int layer) const
{
  const auto w = Widths();
  return WeightOffset(layer) + static_cast<std::size_t>(w[layer] * w[layer + 1]);
}

void MetaNet::SetParameters(std::vector<double> p)
{
  if (p.size() != params.size())
  {
    throw DimensionError("meta network parameters", params.size(), p.size());
  }
  if (!all_finite(std::span<const double>(p)))
  {
    throw Error("meta network: parameters must be finite");
  }
  params = std::move(p);
}

void MetaNet::ZeroOutputLayer()
{
  const int last = static_cast<int>(Widths().size()) - 2;
  for (auto k = WeightOffset(last); k < params.size(); k++)
  {
    params[k] = 0.0;
  }
}

std::vector<double> MetaNet::Normalize(std::span<const double> mu) const
{
  if (mu.size() != config.input_lo.size())
  {
    throw DimensionError("meta network input", config.input_lo.size(), mu.size());
  }
  std::vector<double> x(mu.size());
  for (std::size_t k = 0; k < mu.size(); k++)
  {
    if (!std::isfinite(mu[k]))
    {
      throw Error("meta network: non-finite input");
    }
    x[k] = 2.0 * (mu[k] - config.input_lo[k]) / (config.input_hi[k] - config.input_lo[k]) - 1.0;
  }
  return x;
}

template <typename Num>
std::vector<Num> MetaNet::Raw(std::span<const Num> p, std::vector<Num> x) const
{
  using std::tanh;
  const auto widths = Widths();
  const int layers = static_cast<int>(widths.size()) - 1;
  for (int l = 0; l < layers; l++)
  {
    const auto in = static_cast<std::size_t>(widths[l]);
    const auto out = static_cast<std::size_t>(widths[l + 1]);
    const auto w0 = WeightOffset(l), b0 = BiasOffset(l);
    std::vector<Num> y;
    y.reserve(out);
    for (std::size_t o = 0; o < out; o++)
    {
      Num s = affine(p.subspan(w0 + o * in, in), std::span<const Num>(x), p[b0 + o]);
      y.push_back(l + 1 < layers ? tanh(s) : s);
    }
    x = std::move(y);
  }
  return x;
}

std::vector<double> MetaNet::Outputs(std::span<const double> mu) const
{
  auto raw = Raw<double>(params, Normalize(mu));
  for (int i = 0; i < OutputDim(); i++)
  {
    if (i < config.m)
    {
      raw[i] = config.omega_map == OmegaMap::Exp ? std::exp(raw[i]) : softplus(raw[i]);
    }
    else
    {
      raw[i] = sigmoid(raw[i]);
    }
  }
  return raw;
}

WeightSchedule MetaNet::Forward(std::span<const double> mu) const
{
  return WeightSchedule::Unpack(config.variant, config.m, Outputs(mu));
}

NetVars MetaNet::Bind(Tape &tape) const
{
  NetVars vars;
  vars.params.reserve(params.size());
  for (double p : params)
  {
    vars.params.push_back(tape.Variable(p));
  }
  return vars;
}

std::vector<Var> MetaNet::Outputs(Tape &tape, const NetVars &vars,
                                  std::span<const double> mu) const
{
  if (vars.params.size() != params.size())
  {
    throw DimensionError("bound meta network parameters", params.size(), vars.params.size());
  }
  std::vector<Var> x;
  for (double xi : Normalize(mu))
  {
    x.push_back(tape.Variable(xi));
  }
  auto raw = Raw<Var>(vars.params, std::move(x));
  for (int i = 0; i < OutputDim(); i++)
  {
    if (i < config.m)
    {
      raw[i] = config.omega_map == OmegaMap::Exp ? exp(raw[i]) : softplus(raw[i]);
    }
    else
    {
      raw[i] = sigmoid(raw[i]);
    }
  }
  return raw;
}

WeightSchedule meta_forward(const MetaNet &net, std::span<const double> mu)
{
  return net.Forward(mu);
}

std::vector<double> gradient(const Var &loss, Tape &tape, const NetVars &vars)
{
  const auto adj = tape.Gradient(loss);
  std::vector<double> g;
  g.reserve(vars.params.size());
  for (const auto &v : vars.params)
  {
    if (v.tape != &tape)
    {
      throw Error("gradient: parameters bound to a different tape");
    }
    g.push_back(adj[v.index]);
  }
  return g;
}

Adam::Adam(std::size_t size, double learning_rate, double beta1, double beta2, double epsilon)
    : lr(learning_rate), b1(beta1), b2(beta2), eps(epsilon), m1(size, 0.0), m2(size, 0.0)
{
  if (!(learning_rate > 0.0))
  {
    throw ConfigError("adam: learning rate must be positive");
  }
}

void Adam::Step(std::span<double> params, std::span<const double> grad)
{
  if (params.size() != m1.size() || grad.size() != m1.size())
  {
    throw DimensionError("adam step", m1.size(), params.size() != m1.size() ? params.size()
                                                                            : grad.size());
  }
  t++;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
  for (std::size_t k = 0; k < params.size(); k++)
  {
    m1[k] = b1 * m1[k] + (1.0 - b1) * grad[k];
    m2[k] = b2 * m2[k] + (1.0 - b2) * grad[k] * grad[k];
    params[k] -= lr * (m1[k] / c1) / (std::sqrt(m2[k] / c2) + eps);
  }
}

template std::vector<double> MetaNet::Raw(std::span<const double>, std::vector<double>) const;
template std::vector<Var> MetaNet::Raw(std::span<const Var>, std::vector<Var>) const;

}  // namespace richlab
