#include <algorithm>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "trgan/dataset.hpp"
#include "trgan/image_io.hpp"
#include "trgan/infer.hpp"

using namespace trgan;
using namespace trgan::infer;

namespace {

using Origins = std::vector<std::size_t>;

// Model that returns the ground-truth patch at each origin, located by the
// unique integer code written into the first image channel.
struct OracleModel {
  const Tensor<float>* padded_mask;  // (1, 3, PH, PW)
  std::size_t patch;

  Tensor<float> operator()(const Tensor<float>& x) const {
    Tensor<float> out(x.n(), 3, patch, patch);
    for (std::size_t n = 0; n < x.n(); ++n) {
      const auto code = static_cast<std::size_t>(std::lround(x(n, 0, 0, 0) * 1e6));
      const std::size_t row = code / padded_mask->w(), col = code % padded_mask->w();
      for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t y = 0; y < patch; ++y)
          for (std::size_t q = 0; q < patch; ++q) out(n, c, y, q) = (*padded_mask)(0, c, row + y, col + q);
    }
    return out;
  }
};

}  // namespace

TEST_CASE("axis origins") {
  CHECK(axis_origins(256, 256, 50) == Origins{0});
  CHECK(axis_origins(584, 256, 50) == Origins{0, 50, 100, 150, 200, 250, 300, 328});
  CHECK(axis_origins(306, 256, 50) == Origins{0, 50});
  CHECK(axis_origins(565, 256, 50) == Origins{0, 50, 100, 150, 200, 250, 300, 309});
}

TEST_CASE("grid covers the padded frame in row-major order") {
  auto g = make_grid(584, 565);
  CHECK(g.origins.size() == 8 * 8);
  CHECK(std::is_sorted(g.origins.begin(), g.origins.end()));
  std::vector<int> cover(g.padded_h * g.padded_w, 0);
  for (auto [r, c] : g.origins) {
    REQUIRE(r + g.patch <= g.padded_h);
    REQUIRE(c + g.patch <= g.padded_w);
    for (std::size_t y = r; y < r + g.patch; ++y)
      for (std::size_t x = c; x < c + g.patch; ++x) cover[y * g.padded_w + x] = 1;
  }
  CHECK(std::count(cover.begin(), cover.end(), 0) == 0);

  auto small = make_grid(100, 120, 256, 50);
  CHECK(small.padded_h == 256);
  CHECK(small.padded_w == 256);
  CHECK(small.origins.size() == 1);
  CHECK(small.pad.top == 78);
  CHECK(small.pad.left == 68);
}

TEST_CASE("stitch averages overlapping predictions") {
  SUBCASE("two overlapping patches 0.2 and 0.8 give 0.5 in the overlap") {
    auto g = make_grid(4, 6, 4, 2);
    REQUIRE(g.origins.size() == 2);
    std::vector<Tensor<float>> preds{Tensor<float>(1, 3, 4, 4, 0.2f), Tensor<float>(1, 3, 4, 4, 0.8f)};
    auto m = stitch(preds, g);
    CHECK(m.at(0, 0, 0) == doctest::Approx(0.2));
    CHECK(m.at(1, 1, 2) == doctest::Approx(0.5));
    CHECK(m.at(2, 3, 3) == doctest::Approx(0.5));
    CHECK(m.at(0, 3, 5) == doctest::Approx(0.8));
  }
  SUBCASE("constant patches stitch to the constant") {
    auto g = make_grid(584, 565);
    std::vector<Tensor<float>> preds(g.origins.size(), Tensor<float>(1, 3, 256, 256, 0.7f));
    auto m = stitch(preds, g);
    CHECK(m.h() == 584);
    CHECK(m.w() == 565);
    CHECK(m.kind == MaskKind::probability);
    for (float v : m.data.vec()) REQUIRE(v == doctest::Approx(0.7f));
  }
  SUBCASE("a single-patch grid is the identity") {
    auto g = make_grid(256, 256);
    Tensor<float> p(1, 3, 256, 256);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = float(i % 97) / 97.0f;
    CHECK(stitch({p}, g).data.vec() == p.vec());
  }
  SUBCASE("a wrong prediction count is rejected") {
    CHECK_THROWS(stitch({}, make_grid(300, 300)));
  }
}

TEST_CASE("oracle generator reproduces the 584x565 ground truth") {
  auto s = data::synth_sample(13, 584, 565);
  auto g = make_grid(584, 565);
  const auto padded_mask = data::reflect_pad(s.mask.data, g.padded_h, g.padded_w);
  // Encode each pixel's padded coordinates so the oracle can find its patch.
  Tensor<float> coded(1, 3, 584, 565);
  for (std::size_t y = 0; y < 584; ++y)
    for (std::size_t x = 0; x < 565; ++x)
      coded(0, 0, y, x) = float((y + g.pad.top) * g.padded_w + (x + g.pad.left)) * 1e-6f;
  OracleModel oracle{&padded_mask, 256};
  auto prob = predict_full(coded, oracle, 256, 50, 4);
  double worst = 0.0;
  for (std::size_t i = 0; i < prob.data.size(); ++i)
    worst = std::max(worst, double(std::abs(prob.data[i] - s.mask.data[i])));
  CHECK(worst <= 1e-6);
}

TEST_CASE("stitching does not depend on the batch size") {
  std::mt19937_64 rng(3);
  Tensor<float> img(1, 3, 300, 280);
  for (auto& v : img.vec()) v = float(rng() % 1000) / 1000.0f;
  auto model = [](const Tensor<float>& x) {
    Tensor<float> out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = 0.25f + 0.5f * x[i];
    return out;
  };
  auto a = predict_full(img, model, 256, 50, 1);
  auto b = predict_full(img, model, 256, 50, 3);
  auto c = predict_full(img, model, 256, 50, 16);
  CHECK(a.data.vec() == b.data.vec());
  CHECK(a.data.vec() == c.data.vec());
}

TEST_CASE("binarize rule") {
  AVMask p(1, 4, MaskKind::probability);
  auto set = [&](std::size_t x, float vessel, float artery, float vein) {
    p.vessel(0, x) = vessel, p.artery(0, x) = artery, p.vein(0, x) = vein;
  };
  set(0, 0.9f, 0.8f, 0.1f);
  set(1, 0.4f, 0.9f, 0.1f);
  set(2, 0.9f, 0.5f, 0.5f);
  set(3, 0.6f, 0.2f, 0.7f);
  auto b = binarize(p);
  CHECK(b.kind == MaskKind::binary);
  CHECK((b.vessel(0, 0) == 1 && b.artery(0, 0) == 1 && b.vein(0, 0) == 0));
  CHECK((b.vessel(0, 1) == 0 && b.artery(0, 1) == 0 && b.vein(0, 1) == 0));
  CHECK((b.vessel(0, 2) == 1 && b.artery(0, 2) == 1 && b.vein(0, 2) == 0));
  CHECK((b.vessel(0, 3) == 1 && b.artery(0, 3) == 0 && b.vein(0, 3) == 1));
}

TEST_CASE("binarize output satisfies the mask invariants") {
  std::mt19937_64 rng(8);
  AVMask p(32, 32, MaskKind::probability);
  for (auto& v : p.data.vec()) v = float(rng() % 1001) / 1000.0f;
  CHECK_FALSE(check_invariants(binarize(p)).has_value());
}

TEST_CASE("write_prediction produces the five files") {
  const auto dir = std::filesystem::temp_directory_path() / "trgan_test_infer_out";
  std::filesystem::remove_all(dir);
  auto s = data::synth_sample(1, 64, 64);
  AVMask prob = s.mask;
  prob.kind = MaskKind::probability;
  auto files = write_prediction(dir, "01_test", s.image, prob);
  for (const auto& f : {files.artery, files.vein, files.vessel, files.color, files.overlay})
    CHECK(std::filesystem::exists(f));
  CHECK(files.color.filename() == "01_test_av.png");
  auto rgb = io::read_rgb8(files.color);
  CHECK(decode_color(rgb.rgb, rgb.h, rgb.w) == binarize(prob));
  std::size_t h = 0, w = 0;
  auto vessel = io::read_gray16(files.vessel, h, w);
  CHECK(h == 64);
  CHECK(vessel[0] == doctest::Approx(prob.vessel(0, 0)).epsilon(1e-4));
}
