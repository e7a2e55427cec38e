// SPDX-License-Identifier: Apache-2.0

#include "richlab/schedule.hpp"

#include <cmath>
#include <numbers>

#include "richlab/core.hpp"

namespace richlab
{

std::string to_string(Variant v)
{
  switch (v)
  {
    case Variant::Plain:
      return "plain";
    case Variant::Mom:
      return "mom";
    case Variant::Nag:
      return "nag";
    case Variant::NagEx:
      return "nagex";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name)
{
  if (name == "plain")
  {
    return Variant::Plain;
  }
  if (name == "mom")
  {
    return Variant::Mom;
  }
  if (name == "nag")
  {
    return Variant::Nag;
  }
  if (name == "nagex")
  {
    return Variant::NagEx;
  }
  throw ConfigError("unknown iteration variant '" + std::string(name) +
                    "' (expected plain, mom, nag, nagex)");
}

int weights_per_step(Variant v)
{
  switch (v)
  {
    case Variant::Plain:
      return 1;
    case Variant::Mom:
    case Variant::Nag:
      return 2;
    case Variant::NagEx:
      return 3;
  }
  return 1;
}

void WeightSchedule::Validate() const
{
  if (omega.empty())
  {
    throw ConfigError("weight schedule: m must be at least 1");
  }
  if (alpha.size() != omega.size() || alpha_tilde.size() != omega.size())
  {
    throw ConfigError("weight schedule: omega, alpha and alpha_tilde must have length m");
  }
  for (std::size_t i = 0; i < omega.size(); i++)
  {
    if (!std::isfinite(omega[i]) || !std::isfinite(alpha[i]) || !std::isfinite(alpha_tilde[i]))
    {
      throw ConfigError("weight schedule: non-finite weight at step " + std::to_string(i + 1));
    }
    switch (variant)
    {
      case Variant::Plain:
        if (alpha[i] != 0.0 || alpha_tilde[i] != 0.0)
        {
          throw ConfigError("weight schedule: plain variant requires zero momentum");
        }
        break;
      case Variant::Mom:
        if (alpha_tilde[i] != 0.0)
        {
          throw ConfigError("weight schedule: mom variant requires zero look-ahead");
        }
        break;
      case Variant::Nag:
        if (alpha_tilde[i] != alpha[i])
        {
          throw ConfigError("weight schedule: nag variant requires alpha_tilde == alpha");
        }
        break;
      case Variant::NagEx:
        break;
    }
  }
}

WeightSchedule WeightSchedule::Plain(std::vector<double> omega)
{
  WeightSchedule s;
  s.variant = Variant::Plain;
  s.alpha.assign(omega.size(), 0.0);
  s.alpha_tilde.assign(omega.size(), 0.0);
  s.omega = std::move(omega);
  return s;
}

WeightSchedule WeightSchedule::Mom(std::vector<double> omega, std::vector<double> alpha)
{
  WeightSchedule s;
  s.variant = Variant::Mom;
  s.alpha_tilde.assign(omega.size(), 0.0);
  s.omega = std::move(omega);
  s.alpha = std::move(alpha);
  return s;
}

WeightSchedule WeightSchedule::Nag(std::vector<double> omega, std::vector<double> alpha)
{
  WeightSchedule s;
  s.variant = Variant::Nag;
  s.alpha_tilde = alpha;
  s.omega = std::move(omega);
  s.alpha = std::move(alpha);
  return s;
}

WeightSchedule WeightSchedule::NagEx(std::vector<double> omega, std::vector<double> alpha,
                                     std::vector<double> alpha_tilde)
{
  WeightSchedule s;
  s.variant = Variant::NagEx;
  s.omega = std::move(omega);
  s.alpha = std::move(alpha);
  s.alpha_tilde = std::move(alpha_tilde);
  return s;
}

std::vector<double> WeightSchedule::Packed() const
{
  std::vector<double> out(omega);
  if (weights_per_step(variant) >= 2)
  {
    out.insert(out.end(), alpha.begin(), alpha.end());
  }
  if (weights_per_step(variant) == 3)
  {
    out.insert(out.end(), alpha_tilde.begin(), alpha_tilde.end());
  }
  return out;
}

WeightSchedule WeightSchedule::Unpack(Variant v, int m, const std::vector<double> &packed)
{
  const auto per = weights_per_step(v);
  if (m < 1 || packed.size() != static_cast<std::size_t>(per * m))
  {
    throw ConfigError("weight schedule: packed weights have length " +
                      std::to_string(packed.size()) + ", expected " + std::to_string(per * m));
  }
  std::vector<double> omega(packed.begin(), packed.begin() + m);
  std::vector<double> alpha(m, 0.0), alpha_tilde(m, 0.0);
  if (per >= 2)
  {
    alpha.assign(packed.begin() + m, packed.begin() + 2 * m);
  }
  if (per == 3)
  {
    alpha_tilde.assign(packed.begin() + 2 * m, packed.end());
  }
  switch (v)
  {
    case Variant::Plain:
      return Plain(std::move(omega));
    case Variant::Mom:
      return Mom(std::move(omega), std::move(alpha));
    case Variant::Nag:
      return Nag(std::move(omega), std::move(alpha));
    case Variant::NagEx:
      return NagEx(std::move(omega), std::move(alpha), std::move(alpha_tilde));
  }
  return Plain(std::move(omega));
}

WeightSchedule WeightSchedule::ScaledOmega(double factor) const
{
  auto out = *this;
  for (auto &w : out.omega)
  {
    w *= factor;
  }
  return out;
}

std::vector<double> chebyshev_weights(double lambda_max, double lambda_min, int m)
{
  if (m < 1)
  {
    throw ConfigError("chebyshev_weights: m must be at least 1");
  }
  if (!(lambda_min >= 0.0) || !(lambda_max > lambda_min))
  {
    throw ConfigError("chebyshev_weights: need lambda_max > lambda_min >= 0");
  }
  std::vector<double> w(m);
  for (int i = 1; i <= m; i++)
  {
    const double x = std::cos((2.0 * i - 1.0) * std::numbers::pi / (2.0 * m));
    w[i - 1] = 2.0 / (lambda_max + lambda_min + (lambda_max - lambda_min) * x);
  }
  return w;
}

std::vector<double> chebyshev_semi_weights(double lambda_max, double alpha, int m)
{
  if (!(alpha > 0.0 && alpha < 1.0))
  {
    throw ConfigError("chebyshev_semi_weights: alpha must lie in (0, 1)");
  }
  return chebyshev_weights(lambda_max, alpha * lambda_max, m);
}

}  // namespace richlab
