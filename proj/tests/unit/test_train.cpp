#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

#include "doctest.h"
#include "gradcheck.hpp"
#include "trgan/dataset.hpp"
#include "trgan/train.hpp"

using namespace trgan;
using namespace trgan::train;
using trgan::testing::max_grad_error;
using trgan::testing::random_tensor;

namespace {

TrainConfig tiny(Ablation a = Ablation::ranking_d_triplet, std::uint64_t seed = 1) {
  TrainConfig c;
  c.ablation = a;
  c.seed = seed;
  c.batch = 2;
  c.patch = 32;
  c.max_iters = 100;
  c.lr0 = 1e-3;
  c.generator.encoder_stages = 3;
  c.generator.base_width = 4;
  c.generator.max_width = 8;
  c.discriminator.base_width = 4;
  c.discriminator.max_width = 8;
  c.triplet.num_levels = 2;
  c.triplet.extractor_width = 4;
  return c;
}

std::vector<FundusSample> tiny_data() {
  std::vector<FundusSample> d;
  for (int i = 0; i < 4; ++i) d.push_back(data::synth_sample(50 + i, 64, 64));
  return d;
}

std::vector<Tensor<float>> snapshot(nn::ParamSet<float>& ps) {
  std::vector<Tensor<float>> out;
  for (auto& [name, v] : ps.params) out.push_back(v->value);
  return out;
}

bool same(nn::ParamSet<float>& ps, const std::vector<Tensor<float>>& snap) {
  for (std::size_t i = 0; i < snap.size(); ++i)
    if (ps.params[i].second->value.vec() != snap[i].vec()) return false;
  return true;
}

Tensor<double> pixel(double artery, double vein, double vessel) {
  Tensor<double> t(1, 3, 1, 1);
  t[AVMask::kArtery] = artery;
  t[AVMask::kVein] = vein;
  t[AVMask::kVessel] = vessel;
  return t;
}

}  // namespace

TEST_CASE("segmentation BCE hand values") {
  SUBCASE("0.5 everywhere gives (0.4 + 0.3 + 0.3) ln 2") {
    Tensor<double> target(2, 3, 4, 4);
    for (std::size_t i = 0; i < target.size(); i += 3) target[i] = 1.0;
    auto pred = ag::constant(Tensor<double>(2, 3, 4, 4, 0.5));
    CHECK(bce_seg_loss<double>(nullptr, pred, target, 0.4, 0.3, 0.3)->value[0] == doctest::Approx(std::log(2.0)));
  }
  SUBCASE("single pixel: vessel 1, artery 1, vein 0 against (0.9, 0.9, 0.1)") {
    auto pred = ag::constant(pixel(0.9, 0.1, 0.9));
    const double v = bce_seg_loss<double>(nullptr, pred, pixel(1, 0, 1), 0.4, 0.3, 0.3)->value[0];
    CHECK(v == doctest::Approx(-std::log(0.9)));
    CHECK(v == doctest::Approx(0.1054).epsilon(1e-3));
  }
  SUBCASE("pred equal to the target is about zero") {
    auto pred = ag::constant(pixel(1, 0, 1));
    CHECK(bce_seg_loss<double>(nullptr, pred, pixel(1, 0, 1), 0.4, 0.3, 0.3)->value[0] < 1e-6);
  }
  SUBCASE("channel weights apply per channel") {
    auto pred = ag::constant(pixel(0.5, 0.9, 0.9));  // only vein and vessel confident
    const double v = bce_seg_loss<double>(nullptr, pred, pixel(1, 1, 1), 0.4, 0.3, 0.3)->value[0];
    CHECK(v == doctest::Approx(-(0.3 * std::log(0.5) + 0.3 * std::log(0.9) + 0.4 * std::log(0.9))));
  }
}

TEST_CASE("bce_seg_loss gradient") {
  std::mt19937_64 rng(7);
  auto pred = ag::parameter(random_tensor(rng, {2, 3, 3, 3}, 0.05, 0.95));
  Tensor<double> target(2, 3, 3, 3);
  for (auto& v : target.vec()) v = (rng() % 2) ? 1.0 : 0.0;
  auto f = [&](ag::Tape<double>* t) { return bce_seg_loss<double>(t, pred, target, 0.4, 0.3, 0.3); };
  CHECK(max_grad_error(f, {pred}) < 1e-6);
}

TEST_CASE("generator_loss composition") {
  TrainConfig c;
  CHECK(generator_loss(c, 0.5, 0.6931, 1.0) == doctest::Approx(0.7386).epsilon(1e-4));
  CHECK(generator_loss(c, 0.0, 0.0, 0.0) == 0.0);
  c.lambda1 = c.lambda2 = 0.0;
  CHECK(generator_loss(c, 0.5, 0.6931, 1.0) == doctest::Approx(0.5));
  c = TrainConfig{};
  c.ablation = Ablation::baseline;
  CHECK(generator_loss(c, 0.5, 0.6931, 1.0) == doctest::Approx(0.5));
  c.ablation = Ablation::triplet;
  CHECK(generator_loss(c, 0.5, 0.6931, 1.0) == doctest::Approx(0.6));
}

TEST_CASE("learning-rate schedule") {
  TrainConfig c;
  CHECK(lr_at(c, 0) == 2e-4);
  CHECK(lr_at(c, 6999) == 2e-4);
  CHECK(lr_at(c, 7000) == 1e-4);
  CHECK(lr_at(c, 21000) == 2.5e-5);
  CHECK(lr_at(c, 27999) == 2.5e-5);
  CHECK(lr_at(c, 28000) == 1.25e-5);
  CHECK_THROWS_AS(lr_at(c, 30000), std::out_of_range);
}

TEST_CASE("ablation names") {
  for (auto a : {Ablation::baseline, Ablation::general_d, Ablation::ranking_d, Ablation::triplet,
                 Ablation::ranking_d_triplet})
    CHECK(parse_ablation(to_string(a)) == a);
  CHECK(parse_ablation("TR-D+TL") == Ablation::ranking_d_triplet);
  CHECK(parse_ablation("+GD") == Ablation::general_d);
  CHECK_THROWS(parse_ablation("+XX"));
  CHECK_FALSE(uses_discriminator(Ablation::baseline));
  CHECK(uses_discriminator(Ablation::general_d));
  CHECK_FALSE(uses_triplet(Ablation::ranking_d));
  CHECK(uses_triplet(Ablation::ranking_d_triplet));
}

TEST_CASE("config validation") {
  auto c = tiny();
  CHECK_NOTHROW(c.validate());
  c.mu_artery = 0.0;
  CHECK_THROWS(c.validate());
  c = tiny();
  c.lambda1 = -0.1;
  CHECK_THROWS(c.validate());
  c = tiny();
  c.lr0 = 0.0;
  CHECK_THROWS(c.validate());
  c = tiny();
  c.patch = 30;
  CHECK_THROWS(c.validate());
  c = tiny();
  c.adam_beta2 = 1.0;
  CHECK_THROWS(c.validate());
  c = tiny();
  c.adam_d_beta1 = -0.1;
  CHECK_THROWS(c.validate());
}

TEST_CASE("history CSV") {
  std::vector<LossRecord> h{{0, 0.5, 0.6, 0.7, 0.8, 2e-4}};
  const auto csv = history_csv(h);
  CHECK(csv.rfind("iteration,L_BCE,L_adv_D,L_adv_G,L_triplet,lr\n", 0) == 0);
  CHECK(csv.find("0,0.5,0.6") != std::string::npos);
}

TEST_CASE("two trainers with the same seed take identical steps") {
  auto data = tiny_data();
  Trainer a(tiny()), b(tiny());
  for (int i = 0; i < 3; ++i) {
    const auto ba = a.sample_batch(data), bb = b.sample_batch(data);
    CHECK(ba.image.vec() == bb.image.vec());
    CHECK(a.step(ba) == b.step(bb));
  }
  CHECK(same(b.generator().params(), snapshot(a.generator().params())));
  CHECK(same(b.discriminator().params(), snapshot(a.discriminator().params())));
}

TEST_CASE("every ablation trains its own terms") {
  auto data = tiny_data();
  for (auto abl : {Ablation::general_d, Ablation::ranking_d, Ablation::triplet, Ablation::ranking_d_triplet}) {
    Trainer t(tiny(abl));
    const auto d0 = snapshot(t.discriminator().params());
    const auto rec = t.step(t.sample_batch(data));
    CHECK(std::isfinite(rec.bce));
    CHECK((rec.adv_g > 0.0) == uses_discriminator(abl));
    CHECK((rec.triplet > 0.0 || !uses_triplet(abl)));
    CHECK(same(t.discriminator().params(), d0) == !uses_discriminator(abl));
  }
}

TEST_CASE("general discriminator has a single-bit head") {
  CHECK(discriminator_config(tiny(Ablation::general_d)).head_bits == 1);
  CHECK(discriminator_config(tiny(Ablation::ranking_d)).head_bits == 2);
}

TEST_CASE("baseline leaves the discriminator and extractor untouched") {
  auto data = tiny_data();
  Trainer t(tiny(Ablation::baseline));
  const auto d0 = snapshot(t.discriminator().params());
  const auto g0 = snapshot(t.generator().params());
  t.run(data, 3);
  CHECK(t.iteration() == 3);
  CHECK(t.discriminator().access_count() == 0);
  CHECK(t.extractor().access_count() == 0);
  CHECK(same(t.discriminator().params(), d0));
  CHECK_FALSE(same(t.generator().params(), g0));
  for (const auto& r : t.history()) {
    CHECK(r.adv_d == 0.0);
    CHECK(r.adv_g == 0.0);
    CHECK(r.triplet == 0.0);
  }
}

TEST_CASE("zero weights switch the terms off") {
  auto c = tiny();
  c.lambda1 = 0.0;
  c.lambda2 = 0.0;
  CHECK_FALSE(c.adversarial_on());
  CHECK_FALSE(c.triplet_on());
  Trainer t(c);
  t.run(tiny_data(), 1);
  CHECK(t.discriminator().access_count() == 0);
}

TEST_CASE("checkpoint resume reproduces the uninterrupted run") {
  auto data = tiny_data();
  const auto path = std::filesystem::temp_directory_path() / "trgan_test_train_resume.ckpt";
  Trainer full(tiny());
  full.run(data, 4);
  full.save(path);
  full.run(data, 14);

  Trainer resumed(tiny());
  resumed.load(path);
  CHECK(resumed.iteration() == 4);
  resumed.run(data, 14);
  CHECK(resumed.history() == full.history());
  CHECK(same(resumed.generator().params(), snapshot(full.generator().params())));
  CHECK(same(resumed.discriminator().params(), snapshot(full.discriminator().params())));
  CHECK(resumed.shuffle_fallbacks() == full.shuffle_fallbacks());
}

TEST_CASE("run writes periodic checkpoints") {
  auto c = tiny();
  c.checkpoint_every = 2;
  const auto dir = std::filesystem::temp_directory_path() / "trgan_test_train_ckpts";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  Trainer t(c);
  t.run(tiny_data(), 4, dir);
  CHECK(std::filesystem::exists(dir / "ckpt_000002.ckpt"));
  CHECK(std::filesystem::exists(dir / "ckpt_000004.ckpt"));
  CHECK_FALSE(std::filesystem::exists(dir / "ckpt_000003.ckpt"));
}

TEST_CASE("run stops at max_iters") {
  auto c = tiny();
  c.max_iters = 2;
  Trainer t(c);
  t.run(tiny_data(), 10);
  CHECK(t.iteration() == 2);
}

TEST_CASE("a non-finite loss aborts with a diagnostic") {
  Trainer t(tiny(Ablation::baseline));
  auto b = t.sample_batch(tiny_data());
  b.image[0] = std::numeric_limits<float>::quiet_NaN();
  try {
    t.step(b);
    FAIL("expected NonFiniteLoss");
  } catch (const NonFiniteLoss& e) {
    const std::string msg = e.what();
    CHECK(msg.find("iteration 0") != std::string::npos);
    CHECK(msg.find("lr=") != std::string::npos);
  }
  CHECK(t.iteration() == 0);
}

TEST_CASE("shuffled negatives are valid and differ from the input") {
  Trainer t(tiny());
  auto b = t.sample_batch(tiny_data());
  auto neg = t.shuffled_masks(b.mask);
  REQUIRE(neg.shape() == b.mask.shape());
  for (std::size_t i = 0; i < b.mask.n(); ++i) CHECK_FALSE(check_invariants(mask_of(neg, i)).has_value());
  CHECK(neg.vec() != b.mask.vec());
}

TEST_CASE("a batch of the wrong size is rejected") {
  Trainer t(tiny());
  Batch b{Tensor<float>(3, 3, 32, 32), Tensor<float>(3, 3, 32, 32)};
  CHECK_THROWS(t.step(b));
}

TEST_CASE("a 200-iteration run reproduces its loss history bit-exactly") {
  auto c = tiny();
  c.max_iters = 200;
  auto data = tiny_data();
  Trainer a(c), b(c);
  a.run(data, 200);
  b.run(data, 200);
  REQUIRE(a.history().size() == 200);
  CHECK(a.history() == b.history());
  CHECK(same(b.generator().params(), snapshot(a.generator().params())));
}
