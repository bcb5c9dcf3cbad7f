#pragma once

// Conditional PatchGAN discriminator with an ordinal ranking head, and the
// adversarial losses built on it.

#include <cstdint>
#include <utility>
#include <vector>

#include "trgan/nn.hpp"

namespace trgan {

/// Connectivity ranks, lowest first.
enum class Rank { shuffled, generated, ground_truth };

/// Monotone two-bit ordinal code: bit 1 = "better than shuffled",
/// bit 2 = "better than generated". (0, 1) is not a valid code.
class OrdinalTarget {
 public:
  OrdinalTarget(int b1, int b2);
  int b1() const { return b1_; }
  int b2() const { return b2_; }
  friend bool operator==(const OrdinalTarget&, const OrdinalTarget&) = default;

 private:
  int b1_, b2_;
};

OrdinalTarget ordinal_target(Rank r);
/// Thresholds both scores at 0.5 and maps the bits back to a rank. A
/// non-monotone (0, 1) reading decodes to the rank of its first bit.
Rank decode_rank(double score1, double score2);

struct DiscriminatorConfig {
  std::size_t base_width = 16;
  std::size_t max_width = 0;   // 0 means 8 * base_width
  std::size_t head_bits = 2;   // 2 = ordinal ranking head, 1 = real/fake head
  std::size_t image_channels = 3;
  std::size_t mask_channels = 3;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t width(std::size_t layer) const;
  /// Spatial side of the score map for an input side.
  static std::size_t output_side(std::size_t in);
};

/// Six 4x4 convolutions (stride 2, 2, 2, 1, 1, 1; padding 1) with
/// LeakyReLU(0.2) in between and a sigmoid on the last one.
template <typename T>
class Discriminator {
 public:
  explicit Discriminator(const DiscriminatorConfig& cfg);
  Discriminator(const Discriminator&) = delete;
  Discriminator& operator=(const Discriminator&) = delete;

  /// image: (N, 3, H, W); mask: (N, 3, H, W). Returns (N, head_bits, h, w) in (0, 1).
  ag::Var<T> forward(ag::Tape<T>* tape, const ag::Var<T>& image, const ag::Var<T>& mask);

  nn::ParamSet<T>& params() { return params_; }
  const DiscriminatorConfig& config() const { return cfg_; }

  /// Number of forward passes and optimizer updates that touched the parameters.
  std::size_t access_count() const { return accesses_; }
  void note_access() { ++accesses_; }

 private:
  DiscriminatorConfig cfg_;
  std::vector<nn::Conv2d<T>> layers_;
  nn::ParamSet<T> params_;
  std::size_t accesses_ = 0;
};

/// Log-clamp applied to every probability entering a log.
inline constexpr double kLogEps = 1e-7;

/// Mean over all terms, positions and bits of the two-sided binary cross
/// entropy between each score map and its broadcast ordinal target.
template <typename T>
ag::Var<T> ordinal_bce(ag::Tape<T>* tape, const std::vector<std::pair<ag::Var<T>, OrdinalTarget>>& terms);

/// Ranking loss over (shuffled, generated, ground-truth) score maps.
template <typename T>
ag::Var<T> disc_loss(ag::Tape<T>* tape, const ag::Var<T>& shuffled, const ag::Var<T>& generated,
                     const ag::Var<T>& ground_truth);

/// Mean of -log(score) over every entry: the generator's push towards (1, 1).
template <typename T>
ag::Var<T> gen_adv_loss(ag::Tape<T>* tape, const ag::Var<T>& scores);

/// Real/fake cross entropy for a single-bit head: real -> 1, fake -> 0.
template <typename T>
ag::Var<T> general_discriminator_loss(ag::Tape<T>* tape, const ag::Var<T>& real, const ag::Var<T>& fake);

}  // namespace trgan
