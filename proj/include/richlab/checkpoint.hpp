// SPDX-License-Identifier: Apache-2.0

#ifndef RICHLAB_CHECKPOINT_HPP
#define RICHLAB_CHECKPOINT_HPP

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "richlab/meta_net.hpp"

namespace richlab
{

//
// On-disk layout:
//   RICHLAB-CHECKPOINT 1
//   <key> <value>            one line per header entry
//   arrays <count>
//   array <name> <length>    followed by length little-endian float64 values, then '\n'
//   ...
//
struct Checkpoint
{
  std::vector<std::pair<std::string, std::string>> header;
  std::vector<std::pair<std::string, std::vector<double>>> arrays;

  void Set(const std::string &key, const std::string &value);
  // Throws Error when missing.
  const std::string &Get(const std::string &key) const;
  bool Has(const std::string &key) const;
  const std::vector<double> &Array(const std::string &name) const;
  bool HasArray(const std::string &name) const;
};

inline constexpr int kCheckpointVersion = 1;

void write_checkpoint(std::ostream &os, const Checkpoint &ck);
Checkpoint read_checkpoint(std::istream &is);
void save_checkpoint(const std::string &path, const Checkpoint &ck);
Checkpoint load_checkpoint(const std::string &path);

// Network <-> checkpoint. `config_echo` is stored verbatim in the header.
void store_net(Checkpoint &ck, const MetaNet &net, const std::string &config_echo = "");
MetaNet restore_net(const Checkpoint &ck);

// Shortest decimal that parses back to the same double.
std::string exact_decimal(double x);
std::string join_doubles(const std::vector<double> &xs);
std::vector<double> split_doubles(const std::string &s);

}  // namespace richlab

#endif  // RICHLAB_CHECKPOINT_HPP
