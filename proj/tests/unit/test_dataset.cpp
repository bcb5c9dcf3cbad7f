#include <filesystem>
#include <set>

#include "doctest.h"
#include "trgan/dataset.hpp"

using namespace trgan;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("trgan_test_dataset_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("synth_sample is deterministic and seed sensitive") {
  auto a = data::synth_sample(0, 128, 128);
  auto b = data::synth_sample(0, 128, 128);
  auto c = data::synth_sample(1, 128, 128);
  CHECK(a.image.vec() == b.image.vec());
  CHECK(a.mask == b.mask);
  CHECK_FALSE(a.mask == c.mask);
}

TEST_CASE("synthetic samples satisfy the mask invariants and the vessel band") {
  double lo = 1.0, hi = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto s = data::synth_sample(seed, 128, 128);
    REQUIRE(s.image.shape() == Tensor<float>::Shape{1, 3, 128, 128});
    CHECK_FALSE(check_invariants(s.mask).has_value());
    const double frac = double(s.mask.vessel_count()) / double(s.mask.pixels());
    lo = std::min(lo, frac);
    hi = std::max(hi, frac);
    for (float v : s.image.vec()) REQUIRE((v >= 0.0f && v <= 1.0f));
    REQUIRE(s.fov.size() == s.mask.pixels());
    for (std::size_t i = 0; i < s.mask.pixels(); ++i)
      if (s.mask.channel(AVMask::kVessel)[i] > 0.5f) REQUIRE(s.fov[i] == 1);
  }
  CHECK(lo >= 0.02);
  CHECK(hi <= 0.20);
}

TEST_CASE("synthetic samples contain both classes") {
  auto s = data::synth_sample(7, 128, 128);
  std::size_t art = 0, vein = 0;
  for (std::size_t i = 0; i < s.mask.pixels(); ++i) {
    art += s.mask.channel(AVMask::kArtery)[i] > 0.5f;
    vein += s.mask.channel(AVMask::kVein)[i] > 0.5f;
  }
  CHECK(art > 0);
  CHECK(vein > 0);
}

TEST_CASE("synth_sample rejects sizes below the minimum") {
  CHECK_THROWS(data::synth_sample(0, data::kMinSynthSide - 1, 128));
  CHECK_THROWS(data::synth_sample(0, 128, 10));
}

TEST_CASE("color code round trip") {
  AVMask m(2, 3);
  m.artery(0, 0) = 1, m.vessel(0, 0) = 1;                   // red
  m.vein(0, 1) = 1, m.vessel(0, 1) = 1;                     // blue
  m.artery(0, 2) = 1, m.vein(0, 2) = 1, m.vessel(0, 2) = 1; // green crossing
  m.vessel(1, 0) = 1;                                       // white uncertain
  auto rgb = encode_color(m);
  REQUIRE(rgb.size() == 18);
  CHECK(rgb[0] == 255); CHECK(rgb[1] == 0); CHECK(rgb[2] == 0);
  CHECK(rgb[3] == 0); CHECK(rgb[4] == 0); CHECK(rgb[5] == 255);
  CHECK(rgb[6] == 0); CHECK(rgb[7] == 255); CHECK(rgb[8] == 0);
  CHECK(rgb[9] == 255); CHECK(rgb[10] == 255); CHECK(rgb[11] == 255);
  CHECK(decode_color(rgb, 2, 3) == m);
}

TEST_CASE("sample_patch origins and determinism") {
  SUBCASE("256x256 has the single origin (0,0)") {
    FundusSample s;
    s.image = Tensor<float>(1, 3, 256, 256);
    s.mask = AVMask(256, 256);
    s.fov.assign(256 * 256, 1);
    Rng rng(5);
    for (int i = 0; i < 5; ++i) {
      auto p = data::sample_patch(s, rng, 256);
      CHECK(p.row == 0);
      CHECK(p.col == 0);
    }
  }
  SUBCASE("584x565 origins stay in [0,328]x[0,309] and cover the range ends") {
    FundusSample s;
    s.image = Tensor<float>(1, 3, 584, 565);
    s.mask = AVMask(584, 565);
    s.fov.assign(584 * 565, 1);
    Rng rng(6);
    std::size_t max_r = 0, max_c = 0, min_r = 1000, min_c = 1000;
    for (int i = 0; i < 3000; ++i) {
      auto p = data::sample_patch(s, rng, 256);
      REQUIRE(p.row <= 328);
      REQUIRE(p.col <= 309);
      max_r = std::max(max_r, p.row), max_c = std::max(max_c, p.col);
      min_r = std::min(min_r, p.row), min_c = std::min(min_c, p.col);
    }
    CHECK(max_r >= 320);
    CHECK(max_c >= 300);
    CHECK(min_r <= 8);
    CHECK(min_c <= 8);
  }
  SUBCASE("fixed rng state gives an identical patch") {
    auto s = data::synth_sample(3, 128, 128);
    Rng r1(9), r2(9);
    auto a = data::sample_patch(s, r1, 64);
    auto b = data::sample_patch(s, r2, 64);
    CHECK(a.row == b.row);
    CHECK(a.col == b.col);
    CHECK(a.image.vec() == b.image.vec());
    CHECK(a.mask == b.mask);
  }
}

TEST_CASE("patches are aligned crops of image and mask") {
  auto s = data::synth_sample(11, 128, 128);
  Rng rng(4);
  auto p = data::sample_patch(s, rng, 64);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < 64; y += 7)
      for (std::size_t x = 0; x < 64; x += 5) {
        CHECK(p.image(0, c, y, x) == s.image(0, c, p.row + y, p.col + x));
        CHECK(p.mask.at(c, y, x) == s.mask.at(c, p.row + y, p.col + x));
      }
}

TEST_CASE("patches larger than the sample are cut from a reflect-padded frame") {
  auto s = data::synth_sample(2, 96, 80);
  Rng rng(1);
  auto p = data::sample_patch(s, rng, 128);
  CHECK(p.image.shape() == Tensor<float>::Shape{1, 3, 128, 128});
  CHECK_FALSE(check_invariants(p.mask).has_value());
  data::PadInfo info;
  auto padded = data::reflect_pad(s.image, 128, 128, &info);
  CHECK(padded.h() == 128);
  CHECK(padded.w() == 128);
  CHECK(padded(0, 1, info.top + 5, info.left + 7) == s.image(0, 1, 5, 7));
}

TEST_CASE("load_avdrive on an empty directory is an error") {
  auto root = temp_dir("empty");
  CHECK_THROWS_AS(data::load_avdrive(root, data::Split::train), data::DatasetError);
}

TEST_CASE("export then load round trips masks and orders by numeric prefix") {
  auto root = temp_dir("roundtrip");
  std::vector<FundusSample> samples;
  for (int i : {10, 2, 1}) {
    auto s = data::synth_sample(i, 64, 72);
    s.id = (i < 10 ? "0" : "") + std::to_string(i) + "_synth";
    samples.push_back(std::move(s));
  }
  data::export_avdrive(root, data::Split::test, samples);
  auto loaded = data::load_avdrive(root, data::Split::test);
  REQUIRE(loaded.size() == 3);
  CHECK(loaded[0].mask == samples[2].mask);
  CHECK(loaded[1].mask == samples[1].mask);
  CHECK(loaded[2].mask == samples[0].mask);
  for (std::size_t i = 0; i < loaded[0].image.size(); ++i)
    REQUIRE(std::abs(loaded[0].image[i] - samples[2].image[i]) <= 0.5f / 255.0f + 1e-6f);
}

TEST_CASE("a missing mask file is reported by name") {
  auto root = temp_dir("missing");
  auto s = data::synth_sample(1, 64, 64);
  s.id = "03_synth";
  data::export_avdrive(root, data::Split::train, {s});
  fs::remove(root / "train" / "av" / "03_synth.png");
  try {
    data::load_avdrive(root, data::Split::train);
    FAIL("expected an error");
  } catch (const data::DatasetError& e) {
    CHECK(std::string(e.what()).find("03_synth") != std::string::npos);
  }
}

TEST_CASE("numeric_prefix") {
  CHECK(data::numeric_prefix("21_training") == "21");
  CHECK(data::numeric_prefix("01_test") == "01");
  CHECK(data::numeric_prefix("abc") == "");
}
