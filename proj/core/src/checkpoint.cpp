#include "evor/nn/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>

#include "binary_io.hpp"

namespace evor::detail {

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ParseError("short write to '" + path + "'");
}

}  // namespace evor::detail

namespace evor::nn {

namespace {
constexpr char kMagic[8] = {'E', 'V', 'O', 'R', 'C', 'K', 'P', 'T'};
}

const Mlp<float>& Checkpoint::net(const std::string& name) const {
  for (const auto& [n, m] : nets)
    if (n == name) return m;
  throw ParseError("checkpoint has no network named '" + name + "'");
}

bool Checkpoint::has(const std::string& name) const {
  for (const auto& [n, m] : nets)
    if (n == name) return true;
  return false;
}

const std::string& Checkpoint::get(const std::string& key) const {
  auto it = meta.find(key);
  if (it == meta.end()) throw ParseError("checkpoint metadata lacks key '" + key + "'");
  return it->second;
}

std::vector<std::uint8_t> Checkpoint::serialize() const {
  detail::ByteWriter w;
  w.put_raw(kMagic, sizeof(kMagic));
  w.put<std::uint32_t>(kVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(meta.size()));
  for (const auto& [k, v] : meta) {
    w.put_str(k);
    w.put_str(v);
  }
  w.put<std::uint32_t>(static_cast<std::uint32_t>(nets.size()));
  for (const auto& [name, net] : nets) {
    const auto& spec = net.spec();
    w.put_str(name);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(spec.activation));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(spec.widths.size()));
    for (int x : spec.widths) w.put<std::uint32_t>(static_cast<std::uint32_t>(x));
    for (int l = 0; l + 1 < spec.num_layers(); ++l) w.put<std::uint8_t>(spec.has_ln(l) ? 1 : 0);
    w.put<std::uint64_t>(static_cast<std::uint64_t>(net.params().size()));
    w.put_raw(net.params().data(), sizeof(float) * static_cast<std::size_t>(net.params().size()));
  }
  return std::move(w.bytes());
}

Checkpoint Checkpoint::deserialize(const std::vector<std::uint8_t>& bytes) {
  detail::ByteReader r(bytes, "checkpoint");
  char magic[8];
  r.get_raw(magic, sizeof(magic));
  if (!std::equal(magic, magic + 8, kMagic)) throw ParseError("checkpoint: bad magic");
  const auto version = r.get<std::uint32_t>();
  if (version != kVersion)
    throw ParseError("checkpoint: unsupported version " + std::to_string(version));
  Checkpoint ck;
  const auto n_meta = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    auto k = r.get_str();
    ck.meta[k] = r.get_str();
  }
  const auto n_nets = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_nets; ++i) {
    auto name = r.get_str();
    MlpSpec spec;
    const auto act = r.get<std::uint8_t>();
    if (act > 1) throw ParseError("checkpoint: unknown activation tag");
    spec.activation = static_cast<Activation>(act);
    const auto n_widths = r.get<std::uint32_t>();
    if (n_widths < 2 || n_widths > 64) throw ParseError("checkpoint: implausible layer count");
    for (std::uint32_t j = 0; j < n_widths; ++j) spec.widths.push_back(static_cast<int>(r.get<std::uint32_t>()));
    for (std::uint32_t j = 0; j + 2 < n_widths; ++j) spec.layer_norm.push_back(r.get<std::uint8_t>() != 0);
    Mlp<float> net(spec);
    const auto n_params = r.get<std::uint64_t>();
    if (n_params != static_cast<std::uint64_t>(net.params().size()))
      throw ParseError("checkpoint: parameter count does not match layer shapes for '" + name + "'");
    r.get_raw(net.params().data(), sizeof(float) * n_params);
    ck.add(std::move(name), std::move(net));
  }
  if (!r.done()) throw ParseError("checkpoint: trailing bytes");
  return ck;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  detail::write_file_bytes(path.string(), serialize());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  return deserialize(detail::read_file_bytes(path.string()));
}

std::uint64_t fnv1a64(const std::vector<std::uint8_t>& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t file_digest(const std::filesystem::path& path) {
  return fnv1a64(detail::read_file_bytes(path.string()));
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace evor::nn
