// SPDX-License-Identifier: Apache-2.0

#ifndef RICHLAB_DATASET_HPP
#define RICHLAB_DATASET_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "richlab/assembly.hpp"

namespace richlab
{

enum class ProblemKind
{
  Anisotropic,
  Helmholtz
};

std::string to_string(ProblemKind kind);
// Throws ConfigError for anything other than "anisotropic" / "helmholtz".
ProblemKind parse_problem_kind(std::string_view name);

//
// Everything needed to regenerate a dataset: problem parameters are drawn from one seeded
// stream, and each right-hand side from its own stream keyed by (seed, sample index).
// Matrices are never stored; they are reassembled from the specs.
//
struct DatasetManifest
{
  ProblemKind kind = ProblemKind::Anisotropic;
  int count = 0;
  std::uint64_t seed = 0;
  int n = 32;
  std::vector<ProblemSpec> specs;

  std::vector<double> Mu(std::size_t i) const { return parameters(specs[i]); }
};

inline constexpr const char *kDatasetGenerator = "richlab-dataset/1 mt19937_64";

// epsilon ~ U(1e-6, 1), theta ~ U(0, pi) for anisotropic; omega / 2 pi ~ U(1, n / 10) for
// Helmholtz (at least 10 points per wavelength).
DatasetManifest sample_manifest(std::string_view kind, int count, std::uint64_t seed, int n);

template <Field T>
std::vector<T> sample_rhs(std::uint64_t seed, std::size_t index, std::size_t size);

void write_manifest(std::ostream &os, const DatasetManifest &manifest);
// Regenerates from (kind, count, seed, n) and checks the listed parameters bit-for-bit.
DatasetManifest read_manifest(std::istream &is);

template <Field T>
struct Instance
{
  ProblemSpec spec;
  std::vector<double> mu;
  SparseMatrix<T> A;
  std::vector<T> f;
};

template <Field T>
struct Dataset
{
  DatasetManifest manifest;
  std::vector<Instance<T>> items;

  std::size_t size() const { return items.size(); }
};

template <Field T>
Instance<T> make_instance(const ProblemSpec &spec, std::uint64_t seed, std::size_t index);

// Throws ConfigError when the manifest kind does not match the scalar field.
template <Field T>
Dataset<T> build_dataset(const DatasetManifest &manifest);

}  // namespace richlab

#endif  // RICHLAB_DATASET_HPP
