#include <cmath>
#include <random>

#include "doctest.h"
#include "gradcheck.hpp"
#include "trgan/discriminator.hpp"

using namespace trgan;
using trgan::testing::max_grad_error;
using trgan::testing::random_tensor;

namespace {

ag::Var<double> scores(std::size_t n, std::size_t bits, std::size_t side, double v) {
  return ag::constant(Tensor<double>(n, bits, side, side, v));
}

ag::Var<double> two_bit(double s1, double s2) {
  Tensor<double> t(1, 2, 1, 1);
  t[0] = s1;
  t[1] = s2;
  return ag::constant(t);
}

}  // namespace

TEST_CASE("ordinal targets") {
  CHECK(ordinal_target(Rank::shuffled) == OrdinalTarget(0, 0));
  CHECK(ordinal_target(Rank::generated) == OrdinalTarget(1, 0));
  CHECK(ordinal_target(Rank::ground_truth) == OrdinalTarget(1, 1));
  CHECK_THROWS(OrdinalTarget(0, 1));
  CHECK_THROWS(OrdinalTarget(2, 0));
}

TEST_CASE("decode_rank inverts the ordinal code") {
  CHECK(decode_rank(0.1, 0.2) == Rank::shuffled);
  CHECK(decode_rank(0.9, 0.2) == Rank::generated);
  CHECK(decode_rank(0.9, 0.8) == Rank::ground_truth);
  CHECK(decode_rank(0.2, 0.8) == Rank::shuffled);
}

TEST_CASE("disc_loss with every score at 0.5 is ln 2") {
  auto s = scores(2, 2, 3, 0.5);
  CHECK(disc_loss<double>(nullptr, s, s, s)->value[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("disc_loss at the targets is about zero") {
  auto sh = two_bit(0.0, 0.0), gen = two_bit(1.0, 0.0), gt = two_bit(1.0, 1.0);
  CHECK(disc_loss<double>(nullptr, sh, gen, gt)->value[0] < 1e-6);
  // Any departure from the targets costs more.
  CHECK(disc_loss<double>(nullptr, sh, gt, gt)->value[0] > 1.0);
}

TEST_CASE("single-pixel target (1,0) with score (0.9, 0.1)") {
  auto v = ordinal_bce<double>(nullptr, {{two_bit(0.9, 0.1), OrdinalTarget(1, 0)}})->value[0];
  CHECK(v == doctest::Approx(-(std::log(0.9) + std::log(0.9)) / 2).epsilon(1e-12));
  CHECK(v == doctest::Approx(0.1054).epsilon(1e-3));
}

TEST_CASE("gen_adv_loss") {
  CHECK(gen_adv_loss<double>(nullptr, scores(1, 2, 2, 0.5))->value[0] == doctest::Approx(std::log(2.0)));
  CHECK(gen_adv_loss<double>(nullptr, scores(1, 2, 2, 0.25))->value[0] == doctest::Approx(1.3863).epsilon(1e-4));
  CHECK(gen_adv_loss<double>(nullptr, scores(1, 2, 2, 1.0 - kLogEps))->value[0] < 1e-6);
}

TEST_CASE("general discriminator loss") {
  auto half = scores(1, 1, 2, 0.5);
  CHECK(general_discriminator_loss<double>(nullptr, half, half)->value[0] == doctest::Approx(std::log(2.0)));
  auto one = scores(1, 1, 2, 1.0), zero = scores(1, 1, 2, 0.0);
  const double perfect = general_discriminator_loss<double>(nullptr, one, zero)->value[0];
  const double inverted = general_discriminator_loss<double>(nullptr, zero, one)->value[0];
  const double mixed = general_discriminator_loss<double>(nullptr, one, one)->value[0];
  CHECK(perfect < 1e-6);
  CHECK(inverted > mixed);
  CHECK(mixed > perfect);
}

TEST_CASE("loss shapes are checked") {
  CHECK_THROWS(disc_loss<double>(nullptr, scores(1, 2, 2, 0.5), scores(1, 2, 3, 0.5), scores(1, 2, 2, 0.5)));
  CHECK_THROWS(general_discriminator_loss<double>(nullptr, scores(1, 1, 2, 0.5), scores(2, 1, 2, 0.5)));
}

TEST_CASE("score map geometry and range") {
  // 256 -> 128 -> 64 -> 32 by stride 2, then each 4x4 stride-1 layer with pad 1 drops one: 31, 30, 29.
  CHECK(DiscriminatorConfig::output_side(256) == 29);
  CHECK(DiscriminatorConfig::output_side(64) == 5);
  DiscriminatorConfig c;
  c.base_width = 4;
  c.max_width = 8;
  c.seed = 2;
  Discriminator<float> d(c);
  std::mt19937_64 rng(1);
  auto img = ag::constant(random_tensor(rng, {2, 3, 64, 64}, 0, 1).cast<float>());
  auto mask = ag::constant(random_tensor(rng, {2, 3, 64, 64}, 0, 1).cast<float>());
  auto y = d.forward(nullptr, img, mask)->value;
  CHECK(y.shape() == Tensor<float>::Shape{2, 2, 5, 5});
  for (float v : y.vec()) REQUIRE((v > 0.0f && v < 1.0f));
  CHECK(d.forward(nullptr, img, mask)->value.vec() == y.vec());
  CHECK(d.access_count() == 2);
  CHECK_THROWS(d.forward(nullptr, img, ag::constant(Tensor<float>(2, 3, 32, 32))));
}

TEST_CASE("single-bit head for the general discriminator") {
  DiscriminatorConfig c;
  c.base_width = 2;
  c.max_width = 2;
  c.head_bits = 1;
  Discriminator<float> d(c);
  auto x = ag::constant(Tensor<float>(1, 3, 32, 32, 0.5f));
  CHECK(d.forward(nullptr, x, x)->value.c() == 1);
}

TEST_CASE("gradients of disc_loss and gen_adv_loss through a toy discriminator") {
  DiscriminatorConfig c;
  c.base_width = 2;
  c.max_width = 2;
  c.seed = 4;
  Discriminator<double> d(c);
  CHECK(d.params().count() <= 1000);
  std::mt19937_64 rng(5);
  auto img = ag::constant(random_tensor(rng, {1, 3, 32, 32}, 0, 1));
  auto gt = ag::constant(random_tensor(rng, {1, 3, 32, 32}, 0, 1));
  auto sh = ag::constant(random_tensor(rng, {1, 3, 32, 32}, 0, 1));
  auto gen = ag::parameter(random_tensor(rng, {1, 3, 32, 32}, 0.05, 0.95));
  std::vector<ag::Var<double>> ps;
  for (auto& [name, v] : d.params().params) ps.push_back(v);

  auto dl = [&](ag::Tape<double>* t) {
    return disc_loss<double>(t, d.forward(t, img, sh), d.forward(t, img, gen), d.forward(t, img, gt));
  };
  CHECK(max_grad_error(dl, ps) < 1e-3);

  d.params().set_requires_grad(false);
  auto gl = [&](ag::Tape<double>* t) { return gen_adv_loss<double>(t, d.forward(t, img, gen)); };
  CHECK(max_grad_error(gl, {gen}) < 1e-3);
}

TEST_CASE("gradient of the general discriminator loss") {
  std::mt19937_64 rng(6);
  auto real = ag::parameter(random_tensor(rng, {2, 1, 3, 3}, 0.05, 0.95));
  auto fake = ag::parameter(random_tensor(rng, {2, 1, 3, 3}, 0.05, 0.95));
  auto f = [&](ag::Tape<double>* t) { return general_discriminator_loss<double>(t, real, fake); };
  CHECK(max_grad_error(f, {real, fake}) < 1e-6);
}
