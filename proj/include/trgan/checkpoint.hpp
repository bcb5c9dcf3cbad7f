#pragma once

// Checkpoint file layout (little-endian):
//   8 bytes   magic "TRGANCKP"
//   u32       format version
//   u64       header length in bytes
//   header    UTF-8 JSON: {"meta": {...}, "tensors": [{"name", "shape", "offset"}...]}
//   payload   float32 tensor data, offsets relative to the payload start

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "trgan/nn.hpp"

namespace trgan::ckpt {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kFormatVersion = 1;

struct Checkpoint {
  nlohmann::json meta = nlohmann::json::object();
  std::vector<std::pair<std::string, Tensor<float>>> tensors;

  const Tensor<float>* find(const std::string& name) const;
  void add(std::string name, Tensor<float> t) { tensors.emplace_back(std::move(name), std::move(t)); }
};

void write(const std::filesystem::path& path, const Checkpoint& c);
Checkpoint read(const std::filesystem::path& path);

/// Adds `prefix/<name>` for every parameter and `prefix/buffer/<name>` for every buffer.
template <typename T>
void store(Checkpoint& c, const std::string& prefix, const nn::ParamSet<T>& ps) {
  for (const auto& [name, v] : ps.params) c.add(prefix + "/" + name, v->value.template cast<float>());
  for (const auto& [name, b] : ps.buffers) c.add(prefix + "/buffer/" + name, b->template cast<float>());
}

/// Copies stored tensors back into `ps`. Every parameter and buffer must be present.
template <typename T>
void restore(const Checkpoint& c, const std::string& prefix, nn::ParamSet<T>& ps) {
  auto fetch = [&](const std::string& key, const Tensor<T>& like) -> Tensor<T> {
    const Tensor<float>* t = c.find(key);
    if (t == nullptr) throw CheckpointError("checkpoint is missing tensor " + key);
    if (t->shape() != like.shape())
      throw CheckpointError("checkpoint tensor " + key + " has shape " + t->shape_string() + ", expected " +
                            like.shape_string());
    return t->template cast<T>();
  };
  for (auto& [name, v] : ps.params) v->value = fetch(prefix + "/" + name, v->value);
  for (auto& [name, b] : ps.buffers) *b = fetch(prefix + "/buffer/" + name, *b);
}

}  // namespace trgan::ckpt
