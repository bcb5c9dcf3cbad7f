#include "trgan/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace trgan::ckpt {

namespace {

constexpr char kMagic[8] = {'T', 'R', 'G', 'A', 'N', 'C', 'K', 'P'};

template <typename U>
void put(std::ostream& os, U v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(U));
}

template <typename U>
U get(std::istream& is, const std::filesystem::path& path) {
  U v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(U))) throw CheckpointError("truncated checkpoint: " + path.string());
  return v;
}

}  // namespace

const Tensor<float>* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return &t;
  return nullptr;
}

void write(const std::filesystem::path& path, const Checkpoint& c) {
  nlohmann::json index = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, t] : c.tensors) {
    index.push_back({{"name", name}, {"shape", t.shape()}, {"offset", offset}});
    offset += t.size() * sizeof(float);
  }
  const std::string header = nlohmann::json{{"meta", c.meta}, {"tensors", index}}.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw CheckpointError("cannot write checkpoint: " + path.string());
    os.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(os, kFormatVersion);
    put<std::uint64_t>(os, header.size());
    os.write(header.data(), static_cast<std::streamsize>(header.size()));
    for (const auto& [name, t] : c.tensors)
      os.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(float)));
    if (!os) throw CheckpointError("failed writing checkpoint: " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint read(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open checkpoint: " + path.string());
  char magic[8];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
    throw CheckpointError("not a checkpoint file: " + path.string());
  const auto version = get<std::uint32_t>(is, path);
  if (version != kFormatVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version) + ": " + path.string());
  const auto header_len = get<std::uint64_t>(is, path);
  std::string header(header_len, '\0');
  if (!is.read(header.data(), static_cast<std::streamsize>(header_len)))
    throw CheckpointError("truncated checkpoint header: " + path.string());

  Checkpoint c;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(header);
    c.meta = j.at("meta");
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("malformed checkpoint header in " + path.string() + ": " + e.what());
  }
  const auto payload_start = is.tellg();
  for (const auto& entry : j.at("tensors")) {
    const auto shape = entry.at("shape").get<std::array<std::size_t, 4>>();
    Tensor<float> t(shape);
    is.seekg(payload_start + static_cast<std::streamoff>(entry.at("offset").get<std::uint64_t>()));
    if (!is.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(float))))
      throw CheckpointError("truncated tensor " + entry.at("name").get<std::string>() + " in " + path.string());
    c.add(entry.at("name").get<std::string>(), std::move(t));
  }
  return c;
}

}  // namespace trgan::ckpt
