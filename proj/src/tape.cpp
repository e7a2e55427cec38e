// SPDX-License-Identifier: Apache-2.0

#include "richlab/tape.hpp"

#include <cmath>

#include "richlab/core.hpp"

namespace richlab
{

Var Tape::Variable(double value)
{
  return Record(value, std::span<const std::size_t>{}, std::span<const double>{});
}

Var Tape::Record(double value, std::span<const std::size_t> parents,
                 std::span<const double> partials)
{
  if (consumed)
  {
    throw Error("tape: cannot record after the reverse sweep");
  }
  if (parents.size() != partials.size())
  {
    throw DimensionError("tape node partials", parents.size(), partials.size());
  }
  const auto idx = values.size();
  for (auto p : parents)
  {
    if (p >= idx)
    {
      throw Error("tape: parent recorded after child");
    }
  }
  parent_index.insert(parent_index.end(), parents.begin(), parents.end());
  partial.insert(partial.end(), partials.begin(), partials.end());
  offsets.push_back(parent_index.size());
  values.push_back(value);
  return Var{this, idx, value};
}

Var Tape::Record(double value, std::initializer_list<std::size_t> parents,
                 std::initializer_list<double> partials)
{
  return Record(value, std::span<const std::size_t>(parents.begin(), parents.size()),
                std::span<const double>(partials.begin(), partials.size()));
}

std::vector<double> Tape::Gradient(const Var &output)
{
  if (consumed)
  {
    throw Error("tape: reverse sweep already performed (tape reuse)");
  }
  if (output.tape != this || output.index >= values.size())
  {
    throw Error("tape: output node does not belong to this tape");
  }
  consumed = true;
  std::vector<double> adj(values.size(), 0.0);
  adj[output.index] = 1.0;
  for (std::size_t i = output.index + 1; i-- > 0;)
  {
    const double a = adj[i];
    if (a == 0.0)
    {
      continue;
    }
    for (std::size_t k = offsets[i]; k < offsets[i + 1]; k++)
    {
      adj[parent_index[k]] += a * partial[k];
    }
  }
  return adj;
}

namespace
{

Tape &common_tape(const Var &a, const Var &b)
{
  if (a.tape == nullptr || a.tape != b.tape)
  {
    throw Error("tape: operands recorded on different tapes");
  }
  return *a.tape;
}

}  // namespace

Var operator+(const Var &a, const Var &b)
{
  return common_tape(a, b).Record(a.value + b.value, {a.index, b.index}, {1.0, 1.0});
}
Var operator-(const Var &a, const Var &b)
{
  return common_tape(a, b).Record(a.value - b.value, {a.index, b.index}, {1.0, -1.0});
}
Var operator*(const Var &a, const Var &b)
{
  return common_tape(a, b).Record(a.value * b.value, {a.index, b.index}, {b.value, a.value});
}
Var operator/(const Var &a, const Var &b)
{
  const double q = a.value / b.value;
  return common_tape(a, b).Record(q, {a.index, b.index}, {1.0 / b.value, -q / b.value});
}
Var operator+(const Var &a, double b) { return a.tape->Record(a.value + b, {a.index}, {1.0}); }
Var operator+(double a, const Var &b) { return b + a; }
Var operator-(const Var &a, double b) { return a.tape->Record(a.value - b, {a.index}, {1.0}); }
Var operator*(const Var &a, double b) { return a.tape->Record(a.value * b, {a.index}, {b}); }
Var operator*(double a, const Var &b) { return b * a; }
Var operator-(const Var &a) { return a.tape->Record(-a.value, {a.index}, {-1.0}); }

Var tanh(const Var &x)
{
  const double t = std::tanh(x.value);
  return x.tape->Record(t, {x.index}, {1.0 - t * t});
}

Var exp(const Var &x)
{
  const double e = std::exp(x.value);
  return x.tape->Record(e, {x.index}, {e});
}

Var log(const Var &x)
{
  return x.tape->Record(std::log(x.value), {x.index}, {1.0 / x.value});
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x)
{
  if (x >= 0.0)
  {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus_inverse(double y) { return y > 30.0 ? y : std::log(std::expm1(y)); }

double logit(double y) { return std::log(y / (1.0 - y)); }

Var softplus(const Var &x) { return x.tape->Record(softplus(x.value), {x.index}, {sigmoid(x.value)}); }

Var sigmoid(const Var &x)
{
  const double s = sigmoid(x.value);
  return x.tape->Record(s, {x.index}, {s * (1.0 - s)});
}

Var affine(std::span<const Var> w, std::span<const Var> x, const Var &b)
{
  if (w.size() != x.size())
  {
    throw DimensionError("affine node", w.size(), x.size());
  }
  std::vector<std::size_t> parents;
  std::vector<double> partials;
  parents.reserve(2 * w.size() + 1);
  partials.reserve(2 * w.size() + 1);
  double s = b.value;
  for (std::size_t k = 0; k < w.size(); k++)
  {
    s += w[k].value * x[k].value;
    parents.push_back(w[k].index);
    partials.push_back(x[k].value);
    parents.push_back(x[k].index);
    partials.push_back(w[k].value);
  }
  parents.push_back(b.index);
  partials.push_back(1.0);
  return b.tape->Record(s, parents, partials);
}

double affine(std::span<const double> w, std::span<const double> x, double b)
{
  double s = b;
  for (std::size_t k = 0; k < w.size(); k++)
  {
    s += w[k] * x[k];
  }
  return s;
}

Var mean(std::span<const Var> xs)
{
  if (xs.empty())
  {
    throw Error("tape: mean of an empty set");
  }
  std::vector<std::size_t> parents;
  std::vector<double> partials(xs.size(), 1.0 / static_cast<double>(xs.size()));
  double s = 0.0;
  for (const auto &x : xs)
  {
    parents.push_back(x.index);
    s += x.value;
  }
  return xs.front().tape->Record(s / static_cast<double>(xs.size()), parents, partials);
}

}  // namespace richlab
