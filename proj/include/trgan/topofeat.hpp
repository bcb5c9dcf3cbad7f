#pragma once

// Frozen multi-scale feature extractor and the topology-preserving triplet
// loss with the ground truth as anchor, the generated mask as positive and
// the shuffled mask as negative.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "trgan/nn.hpp"

namespace trgan {

struct TripletConfig {
  double margin = 1.0;
  std::size_t num_levels = 4;
  std::size_t extractor_width = 16;
  std::uint64_t extractor_seed = 0;
  std::string pretrained_weights;  // optional checkpoint with extractor/* tensors

  void validate() const;
};

/// One feature map per level, each of shape (N, C_i, H_i, W_i).
template <typename T>
using FeaturePyramid = std::vector<ag::Var<T>>;

/// VGG-style stack of 2 * num_levels 3x3 conv + ReLU layers. A level is tapped
/// after every second ReLU; 2x2 max pooling precedes every block but the
/// first, so level i runs at 1 / 2^i resolution. Parameters never receive
/// gradients.
template <typename T>
class FeatureExtractor {
 public:
  explicit FeatureExtractor(const TripletConfig& cfg);
  FeatureExtractor(const FeatureExtractor&) = delete;
  FeatureExtractor& operator=(const FeatureExtractor&) = delete;

  FeaturePyramid<T> extract(ag::Tape<T>* tape, const ag::Var<T>& mask) const;

  std::size_t num_levels() const { return cfg_.num_levels; }
  std::size_t level_channels(std::size_t level) const;
  const nn::ParamSet<T>& params() const { return params_; }
  nn::ParamSet<T>& params() { return params_; }
  std::size_t access_count() const { return accesses_; }

 private:
  TripletConfig cfg_;
  std::vector<nn::Conv2d<T>> convs_;
  nn::ParamSet<T> params_;
  mutable std::size_t accesses_ = 0;
};

/// ||a - b||^2 divided by the element count of one sample's level (C * H * W),
/// for a single-sample level.
template <typename T>
double level_distance(const Tensor<T>& a, const Tensor<T>& b);

/// (1 / N) * sum_i max(d1_i - d2_i + margin, 0) for precomputed per-level distances.
double triplet_from_distances(const std::vector<std::pair<double, double>>& d1_d2, double margin);

/// Triplet loss averaged over the batch. Gradients flow only into `positive`.
template <typename T>
ag::Var<T> triplet_loss(ag::Tape<T>* tape, const Tensor<T>& anchor, const ag::Var<T>& positive,
                        const Tensor<T>& negative, const TripletConfig& cfg, const FeatureExtractor<T>& extractor);

}  // namespace trgan
