#include <cmath>
#include <random>

#include "doctest.h"
#include "gradcheck.hpp"
#include "trgan/topofeat.hpp"

using namespace trgan;
using trgan::testing::max_grad_error;
using trgan::testing::random_tensor;

namespace {

// Brute-force triplet loss over explicit per-sample pyramids:
// (1/N) sum_i max(sum|a-p|^2 / (C H W) - sum|a-n|^2 / (C H W) + margin, 0).
double brute_force(const std::vector<Tensor<double>>& a, const std::vector<Tensor<double>>& p,
                   const std::vector<Tensor<double>>& n, double margin) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d1 = 0.0, d2 = 0.0;
    const double count = double(a[i].c() * a[i].h() * a[i].w());
    for (std::size_t c = 0; c < a[i].c(); ++c)
      for (std::size_t y = 0; y < a[i].h(); ++y)
        for (std::size_t x = 0; x < a[i].w(); ++x) {
          const double ea = a[i](0, c, y, x), ep = p[i](0, c, y, x), en = n[i](0, c, y, x);
          d1 += (ea - ep) * (ea - ep);
          d2 += (ea - en) * (ea - en);
        }
    total += std::max(d1 / count - d2 / count + margin, 0.0);
  }
  return total / double(a.size());
}

Tensor<double> sample_of(const Tensor<double>& t, std::size_t b) {
  Tensor<double> out(1, t.c(), t.h(), t.w());
  std::copy(t.plane(b, 0), t.plane(b, 0) + out.size(), out.data());
  return out;
}

TripletConfig small_config(std::size_t levels = 4) {
  TripletConfig c;
  c.num_levels = levels;
  c.extractor_width = 3;
  c.extractor_seed = 7;
  return c;
}

}  // namespace

TEST_CASE("level_distance") {
  Tensor<double> a(1, 2, 2, 2, 0.3);
  CHECK(level_distance(a, a) == 0.0);
  Tensor<double> b(1, 2, 2, 2, 1.3);
  CHECK(level_distance(a, b) == doctest::Approx(1.0));
  CHECK_THROWS(level_distance(a, Tensor<double>(1, 2, 2, 3)));
}

TEST_CASE("triplet_from_distances") {
  CHECK(triplet_from_distances({{0.3, 0.3}, {0.7, 0.7}}, 1.0) == doctest::Approx(1.0));
  CHECK(triplet_from_distances({{0.0, 1.0}, {0.2, 1.5}}, 1.0) == 0.0);
  CHECK(triplet_from_distances({{0.2, 0.5}, {0.1, 0.3}, {0.4, 0.4}, {0.0, 2.0}}, 1.0) == doctest::Approx(0.625));
}

TEST_CASE("oracle equivalence on random 4-level pyramids") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> dim(1, 4);
  std::uniform_real_distribution<double> margin(0.1, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Tensor<double>> a, p, n;
    std::vector<std::pair<double, double>> d;
    for (int i = 0; i < 4; ++i) {
      const std::size_t c = dim(rng), h = dim(rng), w = dim(rng);
      a.push_back(random_tensor(rng, {1, c, h, w}, -1, 1));
      p.push_back(random_tensor(rng, {1, c, h, w}, -1, 1));
      n.push_back(random_tensor(rng, {1, c, h, w}, -1, 1));
      d.emplace_back(level_distance(a[i], p[i]), level_distance(a[i], n[i]));
    }
    const double m = margin(rng);
    REQUIRE(triplet_from_distances(d, m) == doctest::Approx(brute_force(a, p, n, m)).epsilon(1e-6));
  }
}

TEST_CASE("triplet_loss matches the brute force on extracted pyramids, averaged over the batch") {
  auto cfg = small_config();
  FeatureExtractor<double> fx(cfg);
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 5; ++trial) {
    auto anchor = random_tensor(rng, {2, 3, 8, 8}, 0, 1);
    auto pos = random_tensor(rng, {2, 3, 8, 8}, 0, 1);
    auto neg = random_tensor(rng, {2, 3, 8, 8}, 0, 1);
    const auto fa = fx.extract(nullptr, ag::constant(anchor));
    const auto fp = fx.extract(nullptr, ag::constant(pos));
    const auto fn = fx.extract(nullptr, ag::constant(neg));
    double expected = 0.0;
    for (std::size_t b = 0; b < 2; ++b) {
      std::vector<Tensor<double>> a, p, n;
      for (std::size_t i = 0; i < 4; ++i) {
        a.push_back(sample_of(fa[i]->value, b));
        p.push_back(sample_of(fp[i]->value, b));
        n.push_back(sample_of(fn[i]->value, b));
      }
      expected += brute_force(a, p, n, cfg.margin) / 2.0;
    }
    const double got = triplet_loss<double>(nullptr, anchor, ag::constant(pos), neg, cfg, fx)->value[0];
    CHECK(got == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("pyramid shapes follow the pooling schedule") {
  auto cfg = small_config();
  FeatureExtractor<float> fx(cfg);
  auto pyr = fx.extract(nullptr, ag::constant(Tensor<float>(1, 3, 256, 256)));
  REQUIRE(pyr.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(pyr[i]->value.c() == fx.level_channels(i));
    CHECK(pyr[i]->value.h() == (256u >> i));
    CHECK(pyr[i]->value.w() == (256u >> i));
  }
  for (std::size_t i = 1; i < 4; ++i) CHECK(fx.level_channels(i) >= fx.level_channels(i - 1));
}

TEST_CASE("all-zero mask gives an all-zero pyramid; extraction is deterministic") {
  FeatureExtractor<float> fx(small_config());
  auto zero = fx.extract(nullptr, ag::constant(Tensor<float>(1, 3, 16, 16)));
  for (const auto& level : zero)
    for (float v : level->value.vec()) REQUIRE(v == 0.0f);
  std::mt19937_64 rng(3);
  auto m = ag::constant(random_tensor(rng, {1, 3, 16, 16}, 0, 1).cast<float>());
  auto p1 = fx.extract(nullptr, m), p2 = fx.extract(nullptr, m);
  for (std::size_t i = 0; i < p1.size(); ++i) CHECK(p1[i]->value.vec() == p2[i]->value.vec());
}

TEST_CASE("equal positive and negative distances give the margin") {
  auto cfg = small_config();
  FeatureExtractor<double> fx(cfg);
  std::mt19937_64 rng(4);
  auto anchor = random_tensor(rng, {1, 3, 8, 8}, 0, 1);
  auto other = random_tensor(rng, {1, 3, 8, 8}, 0, 1);
  CHECK(triplet_loss<double>(nullptr, anchor, ag::constant(other), other, cfg, fx)->value[0] ==
        doctest::Approx(cfg.margin));
}

TEST_CASE("triplet_loss gradient flows only into the positive and matches finite differences") {
  auto cfg = small_config(2);
  cfg.extractor_width = 2;
  FeatureExtractor<double> fx(cfg);
  CHECK(fx.params().count() <= 1000);
  std::mt19937_64 rng(5);
  auto anchor = random_tensor(rng, {2, 3, 8, 8}, 0, 1);
  auto neg = random_tensor(rng, {2, 3, 8, 8}, 0, 1);
  auto pos = ag::parameter(random_tensor(rng, {2, 3, 8, 8}, 0, 1));
  auto f = [&](ag::Tape<double>* t) { return triplet_loss<double>(t, anchor, pos, neg, cfg, fx); };
  CHECK(max_grad_error(f, {pos}) < 1e-3);
  for (const auto& [name, v] : fx.params().params) {
    CHECK_FALSE(v->requires_grad);
    CHECK(v->grad.empty());
  }
}

TEST_CASE("shape mismatch and config validation") {
  auto cfg = small_config();
  FeatureExtractor<double> fx(cfg);
  CHECK_THROWS(triplet_loss<double>(nullptr, Tensor<double>(1, 3, 8, 8), ag::constant(Tensor<double>(1, 3, 8, 4)),
                                    Tensor<double>(1, 3, 8, 8), cfg, fx));
  TripletConfig bad;
  bad.margin = 0.0;
  CHECK_THROWS(bad.validate());
  bad = TripletConfig{};
  bad.num_levels = 0;
  CHECK_THROWS(bad.validate());
}
