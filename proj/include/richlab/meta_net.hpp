// SPDX-License-Identifier: Apache-2.0

#ifndef RICHLAB_META_NET_HPP
#define RICHLAB_META_NET_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "richlab/schedule.hpp"
#include "richlab/tape.hpp"

namespace richlab
{

enum class OmegaMap
{
  Softplus,  // omega = softplus(raw)
  Exp        // omega = exp(raw), i.e. the network learns log omega
};

std::string to_string(OmegaMap map);
OmegaMap parse_omega_map(std::string_view name);

struct MetaNetConfig
{
  Variant variant = Variant::Plain;
  int m = 3;
  std::vector<int> hidden{64, 64};
  OmegaMap omega_map = OmegaMap::Softplus;
  // Feature bounds mapped affinely to [-1, 1].
  std::vector<double> input_lo{-6.0, 0.0};
  std::vector<double> input_hi{0.0, 3.141592653589793};
  // Output bias placement so that a fresh network emits roughly these values.
  double initial_omega = 0.3;
  double initial_alpha = 0.5;
  // Initial omegas form a geometric ladder from initial_omega to initial_omega * spread.
  double initial_omega_spread = 1.0;
  // Scale of the final layer's random weights relative to Glorot.
  double output_weight_scale = 0.1;
  std::uint64_t seed = 0;
};

// Tape leaves bound to a network's flat parameter vector.
struct NetVars
{
  std::vector<Var> params;
};

//
// Fully connected tanh network mapping problem parameters to a WeightSchedule. Raw outputs are
// laid out like WeightSchedule::Packed(): omega first (through the positive map), then alpha and
// alpha_tilde (through a sigmoid). Parameters are stored flat as W_0, b_0, W_1, b_1, ... with
// each W_l row-major (out x in).
//
class MetaNet
{
public:
  MetaNet() = default;
  explicit MetaNet(const MetaNetConfig &config);

  const MetaNetConfig &Config() const { return config; }
  Variant GetVariant() const { return config.variant; }
  int M() const { return config.m; }
  std::vector<int> Widths() const;
  int InputDim() const { return static_cast<int>(config.input_lo.size()); }
  int OutputDim() const;

  std::size_t ParameterCount() const { return params.size(); }
  const std::vector<double> &Parameters() const { return params; }
  void SetParameters(std::vector<double> p);

  // Final-layer weights and biases set to zero, so every raw output is 0.
  void ZeroOutputLayer();

  std::vector<double> Normalize(std::span<const double> mu) const;

  // Mapped outputs in packed layout.
  std::vector<double> Outputs(std::span<const double> mu) const;
  WeightSchedule Forward(std::span<const double> mu) const;

  NetVars Bind(Tape &tape) const;
  std::vector<Var> Outputs(Tape &tape, const NetVars &vars, std::span<const double> mu) const;

  // Offsets of layer l's weight block and bias block in the flat vector.
  std::size_t WeightOffset(int layer) const;
  std::size_t BiasOffset(int layer) const;

private:
  template <typename Num>
  std::vector<Num> Raw(std::span<const Num> p, std::vector<Num> x) const;

  MetaNetConfig config;
  std::vector<double> params;
};

WeightSchedule meta_forward(const MetaNet &net, std::span<const double> mu);

// Adjoints of `vars.params` after a reverse sweep from `loss`. Consumes the tape.
std::vector<double> gradient(const Var &loss, Tape &tape, const NetVars &vars);

//
// First-order adaptive-moment optimizer with bias correction.
//
class Adam
{
public:
  Adam() = default;
  Adam(std::size_t size, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);
  void Step(std::span<double> params, std::span<const double> grad);
  long Steps() const { return t; }

private:
  double lr = 1e-3, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  long t = 0;
  std::vector<double> m1, m2;
};

}  // namespace richlab

#endif  // RICHLAB_META_NET_HPP
