// SPDX-License-Identifier: Apache-2.0

#ifndef RICHLAB_SCHEDULE_HPP
#define RICHLAB_SCHEDULE_HPP

#include <string>
#include <string_view>
#include <vector>

namespace richlab
{

// Richardson(m) variants: plain, heavy-ball momentum, Nesterov look-ahead, and look-ahead with
// a coefficient decoupled from the momentum coefficient.
enum class Variant
{
  Plain,
  Mom,
  Nag,
  NagEx
};

std::string to_string(Variant v);
Variant parse_variant(std::string_view name);

// Number of learnable weights per inner step for a variant: 1, 2, 2, 3.
int weights_per_step(Variant v);

//
// Parameters of one outer sweep: m inner steps with weights omega_i and momentum
// coefficients alpha_i, alpha_tilde_i. Every variant runs the same recurrence
//   u~ = u + alpha_tilde v,  v = alpha v + omega B^-1 (f - A u~),  u = u + v
// and the variant fixes which coefficients are free.
//
struct WeightSchedule
{
  Variant variant = Variant::Plain;
  std::vector<double> omega;
  std::vector<double> alpha;
  std::vector<double> alpha_tilde;

  int m() const { return static_cast<int>(omega.size()); }

  // Throws ConfigError unless m >= 1, arrays agree in length, Plain has zero momentum, Mom
  // has zero look-ahead and Nag has alpha_tilde == alpha.
  void Validate() const;

  static WeightSchedule Plain(std::vector<double> omega);
  static WeightSchedule Mom(std::vector<double> omega, std::vector<double> alpha);
  static WeightSchedule Nag(std::vector<double> omega, std::vector<double> alpha);
  static WeightSchedule NagEx(std::vector<double> omega, std::vector<double> alpha,
                              std::vector<double> alpha_tilde);

  // Flat (omega..., alpha..., alpha_tilde...) layout truncated to the variant's free weights.
  std::vector<double> Packed() const;
  static WeightSchedule Unpack(Variant v, int m, const std::vector<double> &packed);

  // Same schedule with every omega multiplied by `factor` (rescaling for A -> A / factor).
  WeightSchedule ScaledOmega(double factor) const;
};

// omega_i = 2 / (lmax + lmin + (lmax - lmin) cos((2i - 1) pi / 2m)), i = 1..m.
std::vector<double> chebyshev_weights(double lambda_max, double lambda_min, int m);

// Chebyshev weights with lambda_min replaced by alpha * lambda_max.
std::vector<double> chebyshev_semi_weights(double lambda_max, double alpha, int m);

}  // namespace richlab

#endif  // RICHLAB_SCHEDULE_HPP
