// SPDX-License-Identifier: Apache-2.0

#include "richlab/checkpoint.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "richlab/core.hpp"

namespace richlab
{

namespace
{

constexpr const char *kMagic = "RICHLAB-CHECKPOINT";

std::string join_ints(const std::vector<int> &xs)
{
  std::string s;
  for (std::size_t i = 0; i < xs.size(); i++)
  {
    s += (i ? "," : "") + std::to_string(xs[i]);
  }
  return s;
}

std::vector<int> split_ints(const std::string &s)
{
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ','))
  {
    out.push_back(std::stoi(tok));
  }
  return out;
}

}  // namespace

std::string exact_decimal(double x)
{
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string join_doubles(const std::vector<double> &xs)
{
  std::string s;
  for (std::size_t i = 0; i < xs.size(); i++)
  {
    s += (i ? "," : "") + exact_decimal(xs[i]);
  }
  return s;
}

std::vector<double> split_doubles(const std::string &s)
{
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ','))
  {
    double x = 0.0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), x);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
    {
      throw Error("checkpoint: malformed number '" + tok + "'");
    }
    out.push_back(x);
  }
  return out;
}

void Checkpoint::Set(const std::string &key, const std::string &value)
{
  if (key.empty() || key.find_first_of(" \n") != std::string::npos ||
      value.find('\n') != std::string::npos)
  {
    throw Error("checkpoint: header keys must be single words and values single lines");
  }
  for (auto &kv : header)
  {
    if (kv.first == key)
    {
      kv.second = value;
      return;
    }
  }
  header.emplace_back(key, value);
}

bool Checkpoint::Has(const std::string &key) const
{
  for (const auto &kv : header)
  {
    if (kv.first == key)
    {
      return true;
    }
  }
  return false;
}

const std::string &Checkpoint::Get(const std::string &key) const
{
  for (const auto &kv : header)
  {
    if (kv.first == key)
    {
      return kv.second;
    }
  }
  throw Error("checkpoint: missing header entry '" + key + "'");
}

bool Checkpoint::HasArray(const std::string &name) const
{
  for (const auto &a : arrays)
  {
    if (a.first == name)
    {
      return true;
    }
  }
  return false;
}

const std::vector<double> &Checkpoint::Array(const std::string &name) const
{
  for (const auto &a : arrays)
  {
    if (a.first == name)
    {
      return a.second;
    }
  }
  throw Error("checkpoint: missing array '" + name + "'");
}

void write_checkpoint(std::ostream &os, const Checkpoint &ck)
{
  os << kMagic << ' ' << kCheckpointVersion << '\n';
  for (const auto &[k, v] : ck.header)
  {
    os << k << ' ' << v << '\n';
  }
  os << "arrays " << ck.arrays.size() << '\n';
  for (const auto &[name, data] : ck.arrays)
  {
    os << "array " << name << ' ' << data.size() << '\n';
    for (double x : data)
    {
      auto bits = std::bit_cast<std::uint64_t>(x);
      char bytes[8];
      for (int b = 0; b < 8; b++)
      {
        bytes[b] = static_cast<char>((bits >> (8 * b)) & 0xff);
      }
      os.write(bytes, 8);
    }
    os << '\n';
  }
  if (!os)
  {
    throw Error("checkpoint: write failed");
  }
}

Checkpoint read_checkpoint(std::istream &is)
{
  Checkpoint ck;
  std::string line;
  if (!std::getline(is, line))
  {
    throw Error("checkpoint: empty input");
  }
  {
    std::istringstream first(line);
    std::string magic;
    int version = 0;
    first >> magic >> version;
    if (magic != kMagic)
    {
      throw Error("checkpoint: not a checkpoint file");
    }
    if (version != kCheckpointVersion)
    {
      throw Error("checkpoint: unsupported version " + std::to_string(version));
    }
  }
  std::size_t count = 0;
  while (std::getline(is, line))
  {
    const auto sp = line.find(' ');
    const auto key = line.substr(0, sp);
    const auto value = sp == std::string::npos ? std::string() : line.substr(sp + 1);
    if (key == "arrays")
    {
      count = std::stoul(value);
      break;
    }
    ck.header.emplace_back(key, value);
  }
  for (std::size_t a = 0; a < count; a++)
  {
    if (!std::getline(is, line))
    {
      throw Error("checkpoint: truncated array table");
    }
    std::istringstream hdr(line);
    std::string tag, name;
    std::size_t len = 0;
    hdr >> tag >> name >> len;
    if (tag != "array" || !hdr)
    {
      throw Error("checkpoint: malformed array header '" + line + "'");
    }
    std::vector<double> data(len);
    for (auto &x : data)
    {
      unsigned char bytes[8];
      if (!is.read(reinterpret_cast<char *>(bytes), 8))
      {
        throw Error("checkpoint: truncated array '" + name + "'");
      }
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; b++)
      {
        bits |= static_cast<std::uint64_t>(bytes[b]) << (8 * b);
      }
      x = std::bit_cast<double>(bits);
    }
    if (is.get() != '\n')
    {
      throw Error("checkpoint: missing array terminator after '" + name + "'");
    }
    ck.arrays.emplace_back(name, std::move(data));
  }
  return ck;
}

void save_checkpoint(const std::string &path, const Checkpoint &ck)
{
  std::ofstream os(path, std::ios::binary);
  if (!os)
  {
    throw Error("checkpoint: cannot open '" + path + "' for writing");
  }
  write_checkpoint(os, ck);
}

Checkpoint load_checkpoint(const std::string &path)
{
  std::ifstream is(path, std::ios::binary);
  if (!is)
  {
    throw Error("checkpoint: cannot open '" + path + "'");
  }
  return read_checkpoint(is);
}

void store_net(Checkpoint &ck, const MetaNet &net, const std::string &config_echo)
{
  const auto &cfg = net.Config();
  ck.Set("widths", join_ints(net.Widths()));
  ck.Set("activation", "tanh");
  ck.Set("omega_map", to_string(cfg.omega_map));
  ck.Set("alpha_map", "sigmoid");
  ck.Set("variant", to_string(cfg.variant));
  ck.Set("m", std::to_string(cfg.m));
  ck.Set("input_lo", join_doubles(cfg.input_lo));
  ck.Set("input_hi", join_doubles(cfg.input_hi));
  ck.Set("initial_omega", exact_decimal(cfg.initial_omega));
  ck.Set("initial_alpha", exact_decimal(cfg.initial_alpha));
  ck.Set("initial_omega_spread", exact_decimal(cfg.initial_omega_spread));
  ck.Set("seed", std::to_string(cfg.seed));
  ck.Set("config", config_echo);
  const auto widths = net.Widths();
  const auto &p = net.Parameters();
  for (std::size_t l = 0; l + 1 < widths.size(); l++)
  {
    const auto w0 = net.WeightOffset(static_cast<int>(l));
    const auto b0 = net.BiasOffset(static_cast<int>(l));
    const auto b1 = b0 + static_cast<std::size_t>(widths[l + 1]);
    ck.arrays.emplace_back("W" + std::to_string(l), std::vector<double>(p.begin() + w0, p.begin() + b0));
    ck.arrays.emplace_back("b" + std::to_string(l), std::vector<double>(p.begin() + b0, p.begin() + b1));
  }
}

MetaNet restore_net(const Checkpoint &ck)
{
  if (ck.Get("activation") != "tanh" || ck.Get("alpha_map") != "sigmoid")
  {
    throw Error("checkpoint: unsupported activation or reparameterization");
  }
  MetaNetConfig cfg;
  const auto widths = split_ints(ck.Get("widths"));
  if (widths.size() < 2)
  {
    throw Error("checkpoint: need at least input and output widths");
  }
  cfg.hidden.assign(widths.begin() + 1, widths.end() - 1);
  cfg.omega_map = parse_omega_map(ck.Get("omega_map"));
  cfg.variant = parse_variant(ck.Get("variant"));
  cfg.m = std::stoi(ck.Get("m"));
  cfg.input_lo = split_doubles(ck.Get("input_lo"));
  cfg.input_hi = split_doubles(ck.Get("input_hi"));
  cfg.initial_omega = split_doubles(ck.Get("initial_omega")).at(0);
  cfg.initial_alpha = split_doubles(ck.Get("initial_alpha")).at(0);
  cfg.initial_omega_spread = split_doubles(ck.Get("initial_omega_spread")).at(0);
  cfg.seed = std::stoull(ck.Get("seed"));
  MetaNet net(cfg);
  if (net.Widths() != widths)
  {
    throw Error("checkpoint: layer widths inconsistent with variant and m");
  }
  std::vector<double> p;
  for (std::size_t l = 0; l + 1 < widths.size(); l++)
  {
    const auto &w = ck.Array("W" + std::to_string(l));
    const auto &b = ck.Array("b" + std::to_string(l));
    if (w.size() != static_cast<std::size_t>(widths[l] * widths[l + 1]) ||
        b.size() != static_cast<std::size_t>(widths[l + 1]))
    {
      throw Error("checkpoint: layer " + std::to_string(l) + " array sizes do not match widths");
    }
    p.insert(p.end(), w.begin(), w.end());
    p.insert(p.end(), b.begin(), b.end());
  }
  net.SetParameters(std::move(p));
  return net;
}

}  // namespace richlab
