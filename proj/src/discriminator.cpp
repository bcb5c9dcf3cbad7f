#include "trgan/discriminator.hpp"

#include <cmath>
#include <stdexcept>

#include "trgan/rng.hpp"

namespace trgan {

OrdinalTarget::OrdinalTarget(int b1, int b2) : b1_(b1), b2_(b2) {
  const bool bits = (b1 == 0 || b1 == 1) && (b2 == 0 || b2 == 1);
  if (!bits || (b1 == 0 && b2 == 1)) throw std::invalid_argument("ordinal target must be (0,0), (1,0) or (1,1)");
}

OrdinalTarget ordinal_target(Rank r) {
  switch (r) {
    case Rank::shuffled: return {0, 0};
    case Rank::generated: return {1, 0};
    case Rank::ground_truth: return {1, 1};
  }
  throw std::invalid_argument("unknown rank");
}

Rank decode_rank(double score1, double score2) {
  if (score1 < 0.5) return Rank::shuffled;
  return score2 < 0.5 ? Rank::generated : Rank::ground_truth;
}

void DiscriminatorConfig::validate() const {
  if (base_width < 1) throw std::invalid_argument("discriminator: base_width must be >= 1");
  if (max_width != 0 && max_width < base_width)
    throw std::invalid_argument("discriminator: max_width must be >= base_width");
  if (head_bits != 1 && head_bits != 2) throw std::invalid_argument("discriminator: head_bits must be 1 or 2");
}

std::size_t DiscriminatorConfig::width(std::size_t layer) const {
  if (layer == 5) return head_bits;
  const std::size_t cap = max_width == 0 ? 8 * base_width : max_width;
  const std::size_t mult[] = {1, 2, 4, 8, 8};
  return std::min(base_width * mult[layer], cap);
}

std::size_t DiscriminatorConfig::output_side(std::size_t in) {
  std::size_t s = in;
  for (int i = 0; i < 3; ++i) s = (s + 2 - 4) / 2 + 1;
  for (int i = 0; i < 3; ++i) s = s - 1;
  return s;
}

template <typename T>
Discriminator<T>::Discriminator(const DiscriminatorConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  std::mt19937_64 rng(derive_seed(cfg_.seed, "discriminator-init"));
  std::size_t in_c = cfg_.image_channels + cfg_.mask_channels;
  for (std::size_t l = 0; l < 6; ++l) {
    const std::size_t stride = l < 3 ? 2 : 1;
    const T gain = l == 5 ? T(1) : T(2.0 / (1.0 + 0.2 * 0.2));
    layers_.emplace_back(rng, in_c, cfg_.width(l), 4, stride, 1, true, gain);
    in_c = cfg_.width(l);
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) layers_[l].collect(params_, "conv" + std::to_string(l + 1));
}

template <typename T>
ag::Var<T> Discriminator<T>::forward(ag::Tape<T>* tape, const ag::Var<T>& image, const ag::Var<T>& mask) {
  const auto& iv = image->value;
  const auto& mv = mask->value;
  if (iv.n() != mv.n() || iv.h() != mv.h() || iv.w() != mv.w() || iv.c() != cfg_.image_channels ||
      mv.c() != cfg_.mask_channels)
    throw ShapeError("discriminator: image " + iv.shape_string() + " and mask " + mv.shape_string() +
                     " do not match");
  if (iv.h() < 32 || iv.w() < 32) throw ShapeError("discriminator: input sides must be at least 32");
  ++accesses_;
  auto h = ag::concat_channels(tape, image, mask);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    h = layers_[l](tape, h);
    h = l + 1 < layers_.size() ? ag::leaky_relu(tape, h, T(0.2)) : ag::sigmoid(tape, h);
  }
  return h;
}

namespace {

// Two-sided (or positive-only) BCE against per-channel target bits, averaged
// over every entry of every map.
template <typename T>
ag::Var<T> bce_against_bits(ag::Tape<T>* tape, const std::vector<std::pair<ag::Var<T>, std::vector<int>>>& terms) {
  std::size_t total = 0;
  for (const auto& [v, bits] : terms) {
    if (v->value.c() != bits.size()) throw ShapeError("bce: score channels do not match target bits");
    total += v->value.size();
  }
  if (total == 0) throw ShapeError("bce: empty score maps");
  const double lo = kLogEps, hi = 1.0 - kLogEps;
  double loss = 0.0;
  for (const auto& [v, bits] : terms) {
    const auto& s = v->value;
    const std::size_t hw = s.h() * s.w();
    for (std::size_t n = 0; n < s.n(); ++n)
      for (std::size_t c = 0; c < s.c(); ++c) {
        const T* p = s.plane(n, c);
        for (std::size_t i = 0; i < hw; ++i) {
          const double q = std::clamp(static_cast<double>(p[i]), lo, hi);
          loss -= bits[c] ? std::log(q) : std::log(1.0 - q);
        }
      }
  }
  loss /= static_cast<double>(total);
  std::vector<ag::Var<T>> parents;
  for (const auto& t : terms) parents.push_back(t.first);
  return ag::Tape<T>::record(tape, Tensor<T>::scalar(static_cast<T>(loss)), parents, [terms, total, lo, hi](ag::Node<T>& node) {
    const double scale = static_cast<double>(node.grad[0]) / static_cast<double>(total);
    for (const auto& [v, bits] : terms) {
      if (!v->requires_grad) continue;
      auto& g = v->grad_buffer();
      const auto& s = v->value;
      const std::size_t hw = s.h() * s.w();
      for (std::size_t n = 0; n < s.n(); ++n)
        for (std::size_t c = 0; c < s.c(); ++c) {
          const T* p = s.plane(n, c);
          T* gp = g.plane(n, c);
          for (std::size_t i = 0; i < hw; ++i) {
            const double q = static_cast<double>(p[i]);
            if (q < lo || q > hi) continue;  // clamped: flat
            gp[i] += static_cast<T>(scale * (bits[c] ? -1.0 / q : 1.0 / (1.0 - q)));
          }
        }
    }
  });
}

}  // namespace

template <typename T>
ag::Var<T> ordinal_bce(ag::Tape<T>* tape, const std::vector<std::pair<ag::Var<T>, OrdinalTarget>>& terms) {
  std::vector<std::pair<ag::Var<T>, std::vector<int>>> bits;
  for (const auto& [v, t] : terms) {
    if (v->value.c() != 2) throw ShapeError("ordinal_bce: score maps need 2 channels");
    bits.emplace_back(v, std::vector<int>{t.b1(), t.b2()});
  }
  return bce_against_bits(tape, bits);
}

template <typename T>
ag::Var<T> disc_loss(ag::Tape<T>* tape, const ag::Var<T>& shuffled, const ag::Var<T>& generated,
                     const ag::Var<T>& ground_truth) {
  if (!shuffled->value.same_shape(generated->value) || !shuffled->value.same_shape(ground_truth->value))
    throw ShapeError("disc_loss: score maps must share a shape");
  return ordinal_bce<T>(tape, {{shuffled, ordinal_target(Rank::shuffled)},
                               {generated, ordinal_target(Rank::generated)},
                               {ground_truth, ordinal_target(Rank::ground_truth)}});
}

template <typename T>
ag::Var<T> gen_adv_loss(ag::Tape<T>* tape, const ag::Var<T>& scores) {
  return bce_against_bits<T>(tape, {{scores, std::vector<int>(scores->value.c(), 1)}});
}

template <typename T>
ag::Var<T> general_discriminator_loss(ag::Tape<T>* tape, const ag::Var<T>& real, const ag::Var<T>& fake) {
  if (real->value.c() != 1 || !real->value.same_shape(fake->value))
    throw ShapeError("general_discriminator_loss: expects matching single-channel score maps");
  return bce_against_bits<T>(tape, {{real, {1}}, {fake, {0}}});
}

template class Discriminator<float>;
template class Discriminator<double>;

#define TRGAN_INSTANTIATE_DLOSS(T)                                                                              \
  template ag::Var<T> ordinal_bce<T>(ag::Tape<T>*, const std::vector<std::pair<ag::Var<T>, OrdinalTarget>>&);  \
  template ag::Var<T> disc_loss<T>(ag::Tape<T>*, const ag::Var<T>&, const ag::Var<T>&, const ag::Var<T>&);    \
  template ag::Var<T> gen_adv_loss<T>(ag::Tape<T>*, const ag::Var<T>&);                                        \
  template ag::Var<T> general_discriminator_loss<T>(ag::Tape<T>*, const ag::Var<T>&, const ag::Var<T>&);

TRGAN_INSTANTIATE_DLOSS(float)
TRGAN_INSTANTIATE_DLOSS(double)

}  // namespace trgan
