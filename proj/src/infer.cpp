#include "trgan/infer.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

#include "trgan/image_io.hpp"

namespace trgan::infer {

std::vector<std::size_t> axis_origins(std::size_t dim, std::size_t patch, std::size_t stride) {
  if (patch == 0 || stride == 0) throw std::invalid_argument("grid: patch and stride must be positive");
  if (dim < patch) throw std::invalid_argument("grid: dimension smaller than the patch");
  std::vector<std::size_t> out;
  const std::size_t last = dim - patch;
  for (std::size_t o = 0; o <= last; o += stride) out.push_back(o);
  if (out.back() != last) out.push_back(last);
  return out;
}

PatchGrid make_grid(std::size_t h, std::size_t w, std::size_t patch, std::size_t stride) {
  if (h == 0 || w == 0) throw std::invalid_argument("grid: image must be non-empty");
  PatchGrid g;
  g.patch = patch;
  g.stride = stride;
  g.padded_h = std::max(h, patch);
  g.padded_w = std::max(w, patch);
  g.pad = data::PadInfo{(g.padded_h - h) / 2, (g.padded_w - w) / 2, h, w};
  for (std::size_t r : axis_origins(g.padded_h, patch, stride))
    for (std::size_t c : axis_origins(g.padded_w, patch, stride)) g.origins.emplace_back(r, c);
  return g;
}

AVMask stitch(const std::vector<Tensor<float>>& predictions, const PatchGrid& grid) {
  if (predictions.size() != grid.origins.size())
    throw std::invalid_argument("stitch: " + std::to_string(predictions.size()) + " predictions for " +
                                std::to_string(grid.origins.size()) + " origins");
  const std::size_t ph = grid.padded_h, pw = grid.padded_w, p = grid.patch;
  std::vector<double> sum(3 * ph * pw, 0.0);
  std::vector<std::uint32_t> count(ph * pw, 0);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& t = predictions[i];
    if (t.n() != 1 || t.c() != 3 || t.h() != p || t.w() != p)
      throw ShapeError("stitch: prediction " + std::to_string(i) + " has shape " + t.shape_string());
    const auto [r0, c0] = grid.origins[i];
    for (std::size_t y = 0; y < p; ++y)
      for (std::size_t x = 0; x < p; ++x) {
        const std::size_t idx = (r0 + y) * pw + c0 + x;
        ++count[idx];
        for (std::size_t c = 0; c < 3; ++c) sum[c * ph * pw + idx] += t(0, c, y, x);
      }
  }
  AVMask out(grid.pad.h, grid.pad.w, MaskKind::probability);
  for (std::size_t y = 0; y < grid.pad.h; ++y)
    for (std::size_t x = 0; x < grid.pad.w; ++x) {
      const std::size_t idx = (grid.pad.top + y) * pw + grid.pad.left + x;
      assert(count[idx] > 0);
      for (std::size_t c = 0; c < 3; ++c)
        out.at(c, y, x) = static_cast<float>(sum[c * ph * pw + idx] / count[idx]);
    }
  return out;
}

AVMask binarize(const AVMask& prob) {
  AVMask out(prob.h(), prob.w(), MaskKind::binary);
  for (std::size_t y = 0; y < prob.h(); ++y)
    for (std::size_t x = 0; x < prob.w(); ++x) {
      if (!(prob.vessel(y, x) >= 0.5f)) continue;
      out.vessel(y, x) = 1.0f;
      if (prob.artery(y, x) >= prob.vein(y, x))
        out.artery(y, x) = 1.0f;
      else
        out.vein(y, x) = 1.0f;
    }
  return out;
}

AVMask predict_full(const Tensor<float>& image, const PatchModel& model, std::size_t patch, std::size_t stride,
                    std::size_t batch) {
  if (image.n() != 1) throw ShapeError("predict_full: expects a single image");
  if (batch == 0) throw std::invalid_argument("predict_full: batch must be positive");
  const PatchGrid grid = make_grid(image.h(), image.w(), patch, stride);
  const Tensor<float> padded = data::reflect_pad(image, patch, patch);
  const std::size_t ch = image.c();
  std::vector<Tensor<float>> preds;
  preds.reserve(grid.origins.size());
  for (std::size_t start = 0; start < grid.origins.size(); start += batch) {
    const std::size_t n = std::min(batch, grid.origins.size() - start);
    Tensor<float> in(n, ch, patch, patch);
    for (std::size_t k = 0; k < n; ++k) {
      const auto [r0, c0] = grid.origins[start + k];
      for (std::size_t c = 0; c < ch; ++c)
        for (std::size_t y = 0; y < patch; ++y)
          std::copy_n(padded.data() + padded.index(0, c, r0 + y, c0), patch, &in(k, c, y, 0));
    }
    const Tensor<float> out = model(in);
    if (out.n() != n || out.c() != 3 || out.h() != patch || out.w() != patch)
      throw ShapeError("predict_full: model returned " + out.shape_string());
    for (std::size_t k = 0; k < n; ++k) {
      Tensor<float> one(1, 3, patch, patch);
      std::copy_n(out.plane(k, 0), one.size(), one.data());
      preds.push_back(std::move(one));
    }
  }
  return stitch(preds, grid);
}

PatchModel generator_model(Generator<float>& g) {
  return [&g](const Tensor<float>& x) { return g.forward(nullptr, ag::constant(x), false)->value; };
}

PredictionFiles write_prediction(const std::filesystem::path& out_dir, const std::string& stem,
                                 const Tensor<float>& image, const AVMask& prob) {
  std::filesystem::create_directories(out_dir);
  PredictionFiles f{out_dir / (stem + "_artery.png"), out_dir / (stem + "_vein.png"),
                    out_dir / (stem + "_vessel.png"), out_dir / (stem + "_av.png"),
                    out_dir / (stem + "_overlay.png")};
  io::write_gray16(f.artery, prob.h(), prob.w(), prob.channel(AVMask::kArtery));
  io::write_gray16(f.vein, prob.h(), prob.w(), prob.channel(AVMask::kVein));
  io::write_gray16(f.vessel, prob.h(), prob.w(), prob.channel(AVMask::kVessel));
  const AVMask bin = binarize(prob);
  io::Rgb8 color{bin.h(), bin.w(), encode_color(bin)};
  io::write_rgb8(f.color, color);

  // Overlay: labelled pixels blended 50/50 with their class color.
  io::Rgb8 overlay{bin.h(), bin.w(), std::vector<std::uint8_t>(bin.pixels() * 3)};
  for (std::size_t i = 0; i < bin.pixels(); ++i) {
    const bool labelled = bin.channel(AVMask::kVessel)[i] > 0.5f;
    for (std::size_t c = 0; c < 3; ++c) {
      const float base = std::clamp(image.data()[c * bin.pixels() + i], 0.0f, 1.0f) * 255.0f;
      const float v = labelled ? 0.5f * base + 0.5f * color.rgb[i * 3 + c] : base;
      overlay.rgb[i * 3 + c] = static_cast<std::uint8_t>(std::lround(v));
    }
  }
  io::write_rgb8(f.overlay, overlay);
  return f;
}

}  // namespace trgan::infer
