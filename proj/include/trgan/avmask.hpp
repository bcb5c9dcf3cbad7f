#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "trgan/tensor.hpp"

namespace trgan {

enum class MaskKind { binary, probability };

/// Three-channel artery/vein/vessel map stored as a (1, 3, H, W) tensor.
///
/// A vessel pixel with neither artery nor vein set is "uncertain": it counts
/// as vessel but carries no A/V label. Crossings set artery and vein together.
struct AVMask {
  static constexpr std::size_t kArtery = 0;
  static constexpr std::size_t kVein = 1;
  static constexpr std::size_t kVessel = 2;

  Tensor<float> data;
  MaskKind kind = MaskKind::binary;

  AVMask() = default;
  AVMask(std::size_t h, std::size_t w, MaskKind k = MaskKind::binary) : data(1, 3, h, w), kind(k) {}

  std::size_t h() const { return data.h(); }
  std::size_t w() const { return data.w(); }
  std::size_t pixels() const { return h() * w(); }

  float& at(std::size_t ch, std::size_t y, std::size_t x) { return data(0, ch, y, x); }
  float at(std::size_t ch, std::size_t y, std::size_t x) const { return data(0, ch, y, x); }
  float* channel(std::size_t ch) { return data.plane(0, ch); }
  const float* channel(std::size_t ch) const { return data.plane(0, ch); }

  float& artery(std::size_t y, std::size_t x) { return at(kArtery, y, x); }
  float& vein(std::size_t y, std::size_t x) { return at(kVein, y, x); }
  float& vessel(std::size_t y, std::size_t x) { return at(kVessel, y, x); }
  float artery(std::size_t y, std::size_t x) const { return at(kArtery, y, x); }
  float vein(std::size_t y, std::size_t x) const { return at(kVein, y, x); }
  float vessel(std::size_t y, std::size_t x) const { return at(kVessel, y, x); }

  std::size_t vessel_count() const;

  friend bool operator==(const AVMask& a, const AVMask& b) {
    return a.kind == b.kind && a.data.shape() == b.data.shape() && a.data.vec() == b.data.vec();
  }
};

/// Returns a description of the first violated invariant, or nothing.
std::optional<std::string> check_invariants(const AVMask& m);

/// RGB fundus image paired with its mask.
struct FundusSample {
  Tensor<float> image;        // (1, 3, H, W), values in [0, 1]
  AVMask mask;
  std::vector<std::uint8_t> fov;  // H*W, 1 inside the field of view
  std::string id;

  std::size_t h() const { return image.h(); }
  std::size_t w() const { return image.w(); }
};

// Color-coded ground truth: red artery, blue vein, green crossing,
// white uncertain, black background. `rgb` is H*W*3 interleaved bytes.
std::vector<std::uint8_t> encode_color(const AVMask& m);
AVMask decode_color(const std::vector<std::uint8_t>& rgb, std::size_t h, std::size_t w);

}  // namespace trgan
