// SPDX-License-Identifier: Apache-2.0

#ifndef RICHLAB_CORE_HPP
#define RICHLAB_CORE_HPP

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace richlab
{

using Complex = std::complex<double>;

template <typename T>
struct is_complex : std::false_type
{
};
template <typename T>
struct is_complex<std::complex<T>> : std::true_type
{
};
template <typename T>
inline constexpr bool is_complex_v = is_complex<T>::value;

// Scalar fields supported by every kernel: real for diffusion, complex for Helmholtz.
template <typename T>
concept Field = std::is_same_v<T, double> || std::is_same_v<T, Complex>;

//
// Error hierarchy. Every failure surfaced by the library derives from Error.
//
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error
{
public:
  DimensionError(const std::string &what, std::size_t expected, std::size_t actual)
    : Error(what + ": expected size " + std::to_string(expected) + ", got " +
            std::to_string(actual)),
      expected(expected), actual(actual)
  {
  }
  std::size_t expected, actual;
};

// Iterative estimate that did not meet its tolerance; carries the last value reached.
class ConvergenceError : public Error
{
public:
  ConvergenceError(const std::string &what, double last_estimate, int iterations)
    : Error(what), last_estimate(last_estimate), iterations(iterations)
  {
  }
  double last_estimate;
  int iterations;
};

// NaN/Inf or runaway growth inside an iteration.
class DivergenceError : public Error
{
public:
  DivergenceError(const std::string &what, long iteration, double residual)
    : Error(what + " (iteration " + std::to_string(iteration) + ")"), iteration(iteration),
      residual(residual)
  {
  }
  long iteration;
  double residual;
};

class ConfigError : public Error
{
public:
  using Error::Error;
};

//
// Dense vector kernels. Inner products conjugate the first argument.
//
inline double conj_if(double x) { return x; }
inline Complex conj_if(const Complex &x) { return std::conj(x); }
inline double real_part(double x) { return x; }
inline double real_part(const Complex &x) { return x.real(); }
inline bool is_finite(double x) { return std::isfinite(x); }
inline bool is_finite(const Complex &x)
{
  return std::isfinite(x.real()) && std::isfinite(x.imag());
}

template <Field T>
T dot(std::span<const T> x, std::span<const T> y)
{
  if (x.size() != y.size())
  {
    throw DimensionError("dot", x.size(), y.size());
  }
  T s{};
  for (std::size_t i = 0; i < x.size(); i++)
  {
    s += conj_if(x[i]) * y[i];
  }
  return s;
}

template <Field T>
double norm2(std::span<const T> x)
{
  double s = 0.0;
  for (const auto &v : x)
  {
    s += std::norm(v);
  }
  return std::sqrt(s);
}

// Real part of the conjugated inner product: the Euclidean pairing of C^n viewed as R^2n.
template <Field T>
double real_dot(std::span<const T> x, std::span<const T> y)
{
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); i++)
  {
    s += real_part(conj_if(x[i]) * y[i]);
  }
  return s;
}

template <Field T>
bool all_finite(std::span<const T> x)
{
  for (const auto &v : x)
  {
    if (!is_finite(v))
    {
      return false;
    }
  }
  return true;
}

template <Field T>
T dot(const std::vector<T> &x, const std::vector<T> &y)
{
  return dot(std::span<const T>(x), std::span<const T>(y));
}
template <Field T>
double norm2(const std::vector<T> &x)
{
  return norm2(std::span<const T>(x));
}
template <Field T>
double real_dot(const std::vector<T> &x, const std::vector<T> &y)
{
  return real_dot(std::span<const T>(x), std::span<const T>(y));
}
template <Field T>
bool all_finite(const std::vector<T> &x)
{
  return all_finite(std::span<const T>(x));
}

}  // namespace richlab

#endif  // RICHLAB_CORE_HPP
