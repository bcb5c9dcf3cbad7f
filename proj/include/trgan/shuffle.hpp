#pragma once

// Topology perturbation: manufactures a low-connectivity mask from a ground
// truth by repeatedly removing, shifting, or A/V-swapping square windows
// until a bounded fraction of the vessel pixels has changed.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "trgan/avmask.hpp"

namespace trgan::shuffle {

class ShuffleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ShuffleConfig {
  double budget_low = 0.05;
  double budget_high = 0.25;
  int window_min = 32;  // side range in px at a 256-px frame; scaled by min(H, W) / 256
  int window_max = 96;
  int shift = 24;       // offsets are drawn from [-shift, shift] on each axis
  int max_ops = 100;    // attempts, including reverted ones
  std::uint64_t seed = 0;

  void validate() const;
};

constexpr std::size_t kMinVesselPixels = 50;

enum class OpKind { remove, shift, swap };
std::string to_string(OpKind k);
OpKind parse_op_kind(const std::string& s);

/// Axis-aligned rectangle already clipped to the frame.
struct Window {
  std::size_t row = 0, col = 0, h = 0, w = 0;
  friend bool operator==(const Window&, const Window&) = default;
};

/// Square window of side `side` centred on (cy, cx), clipped to an h x w frame.
Window centered_window(long cy, long cx, long side, std::size_t h, std::size_t w);

struct ShuffleOp {
  OpKind kind = OpKind::remove;
  Window window;
  int dy = 0, dx = 0;  // shift only
  friend bool operator==(const ShuffleOp&, const ShuffleOp&) = default;
};

struct ShuffleReport {
  std::vector<ShuffleOp> ops;  // accepted ops, in application order
  double final_fraction = 0.0;
  int attempts = 0;
};

AVMask op_remove(const AVMask& m, const Window& win);
AVMask op_shift(const AVMask& m, const Window& win, int dy, int dx);
AVMask op_swap(const AVMask& m, const Window& win);
AVMask apply_op(const AVMask& m, const ShuffleOp& op);
/// Re-applies the recorded ops to `original`.
AVMask replay(const AVMask& original, const ShuffleReport& report);

/// Fraction of ground-truth vessel pixels whose (artery, vein, vessel) triple changed.
double shuffle_fraction(const AVMask& original, const AVMask& perturbed);

std::pair<AVMask, ShuffleReport> shuffle_mask(const AVMask& mask, const ShuffleConfig& cfg);

nlohmann::json to_json(const ShuffleReport& r);
ShuffleReport report_from_json(const nlohmann::json& j);

}  // namespace trgan::shuffle
