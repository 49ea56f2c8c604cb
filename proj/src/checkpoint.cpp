#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "daccn/config.hpp"
#include "daccn/errors.hpp"
#include "daccn/model.hpp"

namespace daccn {

namespace {

constexpr char kMagic[8] = {'D', 'A', 'C', 'C', 'N', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::string& path) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw CheckpointError(path + ": truncated checkpoint");
  return value;
}

std::string get_string(std::ifstream& in, std::uint64_t len, const std::string& path) {
  if (len > (1u << 26)) throw CheckpointError(path + ": implausible string length");
  std::string s(len, '\0');
  in.read(s.data(), static_cast<std::streamsize>(len));
  if (!in) throw CheckpointError(path + ": truncated checkpoint");
  return s;
}

std::string read_header(std::ifstream& in, const std::string& path) {
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) throw CheckpointError(path + ": not a checkpoint file");
  const auto version = get<std::uint32_t>(in, path);
  if (version != kVersion)
    throw CheckpointError(path + ": checkpoint version " + std::to_string(version) + ", this build reads version " +
                          std::to_string(kVersion));
  return get_string(in, get<std::uint64_t>(in, path), path);
}

}  // namespace

void save_checkpoint(const DaCCNModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot open " + path + " for writing");
  out.write(kMagic, 8);
  put(out, kVersion);
  const std::string cfg = to_json(model.config()).dump();
  put<std::uint64_t>(out, cfg.size());
  out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
  const auto params = model.all_parameters();
  put<std::uint64_t>(out, params.size());
  for (const auto& p : params) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.tensor.rank()));
    for (auto d : p.tensor.shape()) put<std::int64_t>(out, d);
    put<std::uint32_t>(out, sizeof(Real));
    const auto v = p.tensor.values();
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(Real)));
  }
  if (!out) throw CheckpointError("failed writing " + path);
}

std::string checkpoint_config_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path);
  return read_header(in, path);
}

DaCCNModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path);
  const std::string cfg_text = read_header(in, path);
  const auto doc = nlohmann::json::parse(cfg_text, nullptr, false);
  if (doc.is_discarded()) throw CheckpointError(path + ": corrupt config block");
  ModelConfig cfg;
  try {
    cfg = model_config_from_json(doc);
  } catch (const ConfigError& e) {
    throw CheckpointError(path + ": config block rejected: " + e.what());
  }
  DaCCNModel model(cfg);
  auto params = model.all_parameters();
  const auto n = get<std::uint64_t>(in, path);
  if (n != params.size())
    throw CheckpointError(path + ": holds " + std::to_string(n) + " tensors, model expects " +
                          std::to_string(params.size()));
  for (auto& p : params) {
    const std::string name = get_string(in, get<std::uint32_t>(in, path), path);
    if (name != p.name) throw CheckpointError(path + ": expected tensor '" + p.name + "', found '" + name + "'");
    const auto rank = get<std::uint32_t>(in, path);
    Shape shape(rank);
    for (auto& d : shape) d = get<std::int64_t>(in, path);
    if (shape != p.tensor.shape())
      throw CheckpointError(path + ": tensor '" + name + "' has shape " + shape_to_string(shape) + ", expected " +
                            shape_to_string(p.tensor.shape()));
    const auto elem = get<std::uint32_t>(in, path);
    if (elem != sizeof(Real))
      throw CheckpointError(path + ": stored with " + std::to_string(elem * 8) + "-bit values, this build uses " +
                            std::to_string(sizeof(Real) * 8));
    auto v = p.tensor.mutable_values();
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(Real)));
    if (!in) throw CheckpointError(path + ": truncated data for '" + name + "'");
  }
  if (in.peek() != std::char_traits<char>::eof()) throw CheckpointError(path + ": trailing bytes after last tensor");
  return model;
}

}  // namespace daccn
