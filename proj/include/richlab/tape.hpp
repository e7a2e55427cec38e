// SPDX-License-Identifier: Apache-2.0

#ifndef RICHLAB_TAPE_HPP
#define RICHLAB_TAPE_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace richlab
{

class Tape;

// Handle to a recorded scalar. Cheap to copy; only valid while its tape is alive.
struct Var
{
  Tape *tape = nullptr;
  std::size_t index = 0;
  double value = 0.0;
};

//
// Reverse-mode tape of scalar operations. Each node stores its parents and the local partial
// derivative with respect to each; parents are always recorded before their children, so
// the reverse sweep is a single pass over node indices in descending order.
//
class Tape
{
public:
  Var Variable(double value);
  Var Record(double value, std::span<const std::size_t> parents,
             std::span<const double> partials);
  Var Record(double value, std::initializer_list<std::size_t> parents,
             std::initializer_list<double> partials);

  // Adjoint of every node with respect to `output`. A tape supports exactly one reverse
  // sweep; a second call throws Error.
  std::vector<double> Gradient(const Var &output);

  std::size_t Size() const { return values.size(); }
  bool Consumed() const { return consumed; }

private:
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> parent_index;
  std::vector<double> partial;
  std::vector<double> values;
  bool consumed = false;
};

Var operator+(const Var &a, const Var &b);
Var operator-(const Var &a, const Var &b);
Var operator*(const Var &a, const Var &b);
Var operator/(const Var &a, const Var &b);
Var operator+(const Var &a, double b);
Var operator+(double a, const Var &b);
Var operator-(const Var &a, double b);
Var operator*(const Var &a, double b);
Var operator*(double a, const Var &b);
Var operator-(const Var &a);

Var tanh(const Var &x);
Var exp(const Var &x);
Var log(const Var &x);
Var softplus(const Var &x);
Var sigmoid(const Var &x);

double softplus(double x);
double sigmoid(double x);
// Inverse maps, used to place initial network outputs.
double softplus_inverse(double y);
double logit(double y);

// sum_k w_k x_k + b as a single node.
Var affine(std::span<const Var> w, std::span<const Var> x, const Var &b);
double affine(std::span<const double> w, std::span<const double> x, double b);

// Mean of the given nodes as a single node.
Var mean(std::span<const Var> xs);

}  // namespace richlab

#endif  // RICHLAB_TAPE_HPP
