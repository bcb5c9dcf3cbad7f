#pragma once
// Flat key/value run configuration.
//
//   # comment
//   key = value
//
// Keys are listed by `known_keys()`; unknown or repeated keys are rejected.
// `render` writes every key in a fixed order, so a rendered config parsed
// back yields the same RunConfig.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "trgan/train.hpp"

namespace trgan::config {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RunConfig {
  train::TrainConfig train;
  std::string data_root;          // AV-DRIVE layout; empty means synthetic data
  std::size_t synth_count = 64;   // synthetic training samples when data_root is empty
  std::size_t synth_size = 128;
  std::size_t infer_stride = 50;  // stitching stride at prediction time
};

std::vector<std::string> known_keys();

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Splits the text into key/value pairs. Throws ConfigError naming the line.
KeyValues parse_key_values(const std::string& text);

/// Applies pairs on top of `cfg`. Throws ConfigError on unknown keys or bad values.
void apply(RunConfig& cfg, const KeyValues& kv);

RunConfig parse(const std::string& text);
RunConfig load(const std::filesystem::path& path);
std::string render(const RunConfig& cfg);

}  // namespace trgan::config
