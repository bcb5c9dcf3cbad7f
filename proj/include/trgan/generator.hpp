#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trgan/nn.hpp"

namespace trgan {

/// Residual-encoder U-Net. Stage 0 is a full-resolution stem; each further
/// stage halves the resolution with a strided residual block. The decoder
/// upsamples bilinearly, concatenates the skip and applies conv-BN-ReLU.
/// Output: three independent sigmoids in AVMask channel order
/// (artery, vein, vessel).
struct GeneratorConfig {
  std::size_t encoder_stages = 5;
  std::size_t base_width = 16;
  std::size_t max_width = 0;  // 0 means 8 * base_width
  std::size_t blocks_per_stage = 1;
  std::size_t in_channels = 3;
  std::size_t out_channels = 3;
  std::uint64_t seed = 0;
  std::string pretrained_encoder;  // optional checkpoint holding stem.* / enc* tensors

  void validate() const;
  std::size_t width(std::size_t stage) const;
  /// Input sides must be multiples of this.
  std::size_t size_multiple() const { return std::size_t{1} << (encoder_stages - 1); }
};

template <typename T>
class Generator {
 public:
  explicit Generator(const GeneratorConfig& cfg);
  Generator(const Generator&) = delete;
  Generator& operator=(const Generator&) = delete;

  /// x: (N, 3, H, W) in [0, 1]. Returns (N, 3, H, W) probabilities.
  ag::Var<T> forward(ag::Tape<T>* tape, const ag::Var<T>& x, bool training);

  nn::ParamSet<T>& params() { return params_; }
  const GeneratorConfig& config() const { return cfg_; }

  /// Copies encoder tensors from a checkpoint file. Throws on a missing file,
  /// a missing tensor or a shape mismatch.
  void load_encoder_weights(const std::string& path);

 private:
  struct ResBlock {
    nn::Conv2d<T> conv1, conv2, proj;
    nn::BatchNorm2d<T> bn1, bn2, bn_proj;
    bool has_proj = false;
  };
  struct DecoderBlock {
    nn::Conv2d<T> conv;
    nn::BatchNorm2d<T> bn;
  };

  ag::Var<T> run_block(ag::Tape<T>* tape, ResBlock& b, const ag::Var<T>& x, bool training);

  GeneratorConfig cfg_;
  nn::Conv2d<T> stem_;
  nn::BatchNorm2d<T> stem_bn_;
  std::vector<std::vector<ResBlock>> stages_;  // stages_[s - 1] holds stage s
  std::vector<DecoderBlock> decoder_;          // decoder_[s - 1] merges into stage s - 1
  nn::Conv2d<T> head_;
  nn::ParamSet<T> params_;
};

}  // namespace trgan
