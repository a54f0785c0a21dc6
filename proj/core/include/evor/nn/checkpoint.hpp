#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "evor/nn/mlp.hpp"

namespace evor::nn {

// Named networks plus string metadata. Binary layout (little endian):
//   "EVORCKPT" | u32 version | u32 n_meta | {str key, str value}* |
//   u32 n_nets | {str name, u8 activation, u32 n_widths, u32 widths[],
//                 u8 ln_flags[n_widths-2], u64 n_params, f32 params[]}*
// where str = u32 length + bytes. Networks are stored in insertion order.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::vector<std::pair<std::string, Mlp<float>>> nets;
  std::map<std::string, std::string> meta;

  void add(std::string name, Mlp<float> net) { nets.emplace_back(std::move(name), std::move(net)); }
  const Mlp<float>& net(const std::string& name) const;
  bool has(const std::string& name) const;
  const std::string& get(const std::string& key) const;

  std::vector<std::uint8_t> serialize() const;
  static Checkpoint deserialize(const std::vector<std::uint8_t>& bytes);

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);
};

// FNV-1a over raw bytes; used to show inference sweeps never touch weights.
std::uint64_t fnv1a64(const std::vector<std::uint8_t>& bytes);
std::uint64_t file_digest(const std::filesystem::path& path);
std::string hex64(std::uint64_t v);

}  // namespace evor::nn
