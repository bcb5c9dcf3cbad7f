#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "trgan/tensor.hpp"

namespace trgan::io {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Rgb8 {
  std::size_t h = 0;
  std::size_t w = 0;
  std::vector<std::uint8_t> rgb;  // interleaved R, G, B
};

/// Reads any 8/16-bit gray or color image as a (1, 3, H, W) tensor in [0, 1].
Tensor<float> read_image(const std::filesystem::path& path);
Rgb8 read_rgb8(const std::filesystem::path& path);
/// Reads a single-channel image as bytes (nonzero = set).
std::vector<std::uint8_t> read_gray8(const std::filesystem::path& path, std::size_t& h, std::size_t& w);

void write_rgb8(const std::filesystem::path& path, const Rgb8& img);
/// Writes a (1, 3, H, W) tensor in [0, 1] as an 8-bit RGB PNG.
void write_image(const std::filesystem::path& path, const Tensor<float>& img);
/// Writes one plane of values in [0, 1] as a 16-bit grayscale PNG.
void write_gray16(const std::filesystem::path& path, std::size_t h, std::size_t w, const float* values);
std::vector<float> read_gray16(const std::filesystem::path& path, std::size_t& h, std::size_t& w);

}  // namespace trgan::io
