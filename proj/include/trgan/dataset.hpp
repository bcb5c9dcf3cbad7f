#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "trgan/avmask.hpp"
#include "trgan/rng.hpp"

namespace trgan::data {

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Split { train, test };
std::string to_string(Split s);
Split parse_split(const std::string& s);

/// Loads `<root>/<split>/images/*` paired with `<root>/<split>/av/*.png` by
/// shared leading numeric prefix, ordered by that prefix. An optional
/// `<root>/<split>/mask/` directory supplies field-of-view masks.
std::vector<FundusSample> load_avdrive(const std::filesystem::path& root, Split split);

/// Writes samples in the same layout (`images/<id>.png`, `av/<id>.png`).
void export_avdrive(const std::filesystem::path& root, Split split,
                    const std::vector<FundusSample>& samples);

/// Leading decimal digits of a file stem, or empty if there are none.
std::string numeric_prefix(const std::string& stem);

constexpr std::size_t kMinSynthSide = 64;

/// Deterministic synthetic fundus-like sample: one artery tree and one vein
/// tree grown by branching random walks with stroke widths 1-3 px.
FundusSample synth_sample(std::uint64_t seed, std::size_t h, std::size_t w);

struct SamplePatch {
  Tensor<float> image;  // (1, 3, P, P)
  AVMask mask;
  std::size_t row = 0;  // origin in reflect-padded sample coordinates
  std::size_t col = 0;
};

/// Pads by reflection so both sides are at least `min_h` x `min_w`. The
/// original content sits at offset (pad_top, pad_left).
struct PadInfo {
  std::size_t top = 0, left = 0, h = 0, w = 0;
};
Tensor<float> reflect_pad(const Tensor<float>& t, std::size_t min_h, std::size_t min_w, PadInfo* info = nullptr);
FundusSample reflect_pad(const FundusSample& s, std::size_t min_side);

/// Uniformly random square crop of side `patch` from the reflect-padded sample.
SamplePatch sample_patch(const FundusSample& sample, Rng& rng, std::size_t patch = 256);

}  // namespace trgan::data
