#pragma once
// Full-image prediction: reflect-pad, cut an ordered patch grid, run the
// model per patch, average overlapping predictions and crop the padding.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <utility>
#include <vector>

#include "trgan/avmask.hpp"
#include "trgan/dataset.hpp"
#include "trgan/generator.hpp"

namespace trgan::infer {

struct PatchGrid {
  std::vector<std::pair<std::size_t, std::size_t>> origins;  // row-major
  std::size_t patch = 256;
  std::size_t stride = 50;
  std::size_t padded_h = 0, padded_w = 0;
  data::PadInfo pad;  // placement of the original image inside the padded frame
};

/// {0, stride, 2 * stride, ...} up to dim - patch, plus dim - patch itself when
/// it is not on the lattice. `dim` is the padded length (>= patch).
std::vector<std::size_t> axis_origins(std::size_t dim, std::size_t patch, std::size_t stride);

/// Grid for an H x W image reflect-padded to at least patch x patch.
PatchGrid make_grid(std::size_t h, std::size_t w, std::size_t patch = 256, std::size_t stride = 50);

/// predictions[i] is the (1, 3, P, P) output at grid.origins[i]. Returns the
/// per-pixel mean over covering patches, cropped to the original frame.
AVMask stitch(const std::vector<Tensor<float>>& predictions, const PatchGrid& grid);

/// vessel = p_vessel >= 0.5; on vessel pixels artery if p_artery >= p_vein,
/// otherwise vein.
AVMask binarize(const AVMask& prob);

/// Maps a batch of image patches (N, 3, P, P) to probabilities of the same shape.
using PatchModel = std::function<Tensor<float>(const Tensor<float>&)>;

/// Pads `image` (1, C, H, W), cuts patches, runs `model` in batches of
/// `batch` patches and stitches the result.
AVMask predict_full(const Tensor<float>& image, const PatchModel& model, std::size_t patch = 256,
                    std::size_t stride = 50, std::size_t batch = 4);

/// Generator in evaluation mode as a PatchModel.
PatchModel generator_model(Generator<float>& g);

struct PredictionFiles {
  std::filesystem::path artery, vein, vessel, color, overlay;
};

/// Writes `<stem>_artery.png`, `<stem>_vein.png`, `<stem>_vessel.png` (16-bit
/// probabilities), `<stem>_av.png` (color-coded binary mask) and
/// `<stem>_overlay.png` into `out_dir`.
PredictionFiles write_prediction(const std::filesystem::path& out_dir, const std::string& stem,
                                 const Tensor<float>& image, const AVMask& prob);

}  // namespace trgan::infer
