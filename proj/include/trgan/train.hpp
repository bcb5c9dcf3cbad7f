#pragma once
// Alternating adversarial optimisation of the generator against the ranking
// (or real/fake) discriminator, with the triplet topology loss.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "trgan/avmask.hpp"
#include "trgan/discriminator.hpp"
#include "trgan/generator.hpp"
#include "trgan/shuffle.hpp"
#include "trgan/topofeat.hpp"

namespace trgan::train {

/// Table 1 rows: which adversarial / topology modules are switched on.
enum class Ablation { baseline, general_d, ranking_d, triplet, ranking_d_triplet };
std::string to_string(Ablation a);
/// Accepts "baseline", "+GD", "+TR-D", "+TL", "+TR-D+TL" (the leading '+' is optional).
Ablation parse_ablation(const std::string& s);
bool uses_discriminator(Ablation a);
bool uses_triplet(Ablation a);

struct TrainConfig {
  // Per-channel BCE weights.
  double mu_vessel = 0.4;
  double mu_artery = 0.3;
  double mu_vein = 0.3;
  double lambda1 = 0.2;  // adversarial weight
  double lambda2 = 0.1;  // triplet weight
  std::size_t max_iters = 30000;
  std::size_t batch = 4;
  double lr0 = 2e-4;
  std::size_t lr_half_every = 7000;
  double lr_d_scale = 1.0;  // discriminator lr = lr_d_scale * lr_at(iteration)
  std::size_t patch = 256;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_d_beta1 = 0.9;  // discriminator optimizer
  double adam_d_beta2 = 0.999;
  std::size_t checkpoint_every = 1000;
  Ablation ablation = Ablation::ranking_d_triplet;
  std::uint64_t seed = 0;

  GeneratorConfig generator;
  DiscriminatorConfig discriminator;
  TripletConfig triplet;
  shuffle::ShuffleConfig shuffle;

  void validate() const;
  /// Whether the adversarial / triplet terms take part in training.
  bool adversarial_on() const { return uses_discriminator(ablation) && lambda1 > 0.0; }
  bool triplet_on() const { return uses_triplet(ablation) && lambda2 > 0.0; }
};

/// lr0 * 2^(-floor(iteration / lr_half_every)); iteration must lie in [0, max_iters).
double lr_at(const TrainConfig& cfg, std::size_t iteration);

/// sum_c mu_c * mean_p BCE(pred_c, target_c) over vessel, artery and vein,
/// with predictions clamped to [1e-7, 1 - 1e-7]. Tensors are (N, 3, H, W) in
/// AVMask channel order.
template <typename T>
ag::Var<T> bce_seg_loss(ag::Tape<T>* tape, const ag::Var<T>& pred, const Tensor<T>& target, double mu_vessel,
                        double mu_artery, double mu_vein);

/// L_BCE + lambda1 * L_adv + lambda2 * L_triplet with ablated terms dropped.
double generator_loss(const TrainConfig& cfg, double bce, double adv, double triplet);

struct LossRecord {
  std::size_t iteration = 0;
  double bce = 0.0;
  double adv_d = 0.0;  // discriminator objective, 0 when no discriminator is trained
  double adv_g = 0.0;  // generator adversarial term, 0 when off
  double triplet = 0.0;
  double lr = 0.0;
  friend bool operator==(const LossRecord&, const LossRecord&) = default;
};

std::string history_csv(const std::vector<LossRecord>& history);

class NonFiniteLoss : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A training batch: images and binary masks, both (N, 3, P, P).
struct Batch {
  Tensor<float> image;
  Tensor<float> mask;
};

/// Stacks single-sample tensors into one batch tensor.
Tensor<float> stack(const std::vector<const Tensor<float>*>& items);
AVMask mask_of(const Tensor<float>& batch_mask, std::size_t index);

class Trainer {
 public:
  /// Sub-module seeds are derived from cfg.seed; their own seed fields are ignored.
  explicit Trainer(const TrainConfig& cfg);

  /// Draws the batch for the current iteration: sample index and patch origin
  /// come from derive_seed(seed, "batch", iteration, slot).
  Batch sample_batch(const std::vector<FundusSample>& data) const;

  /// Shuffled negatives for the current iteration, one per batch entry.
  Tensor<float> shuffled_masks(const Tensor<float>& masks) const;

  /// One discriminator update followed by one generator update.
  LossRecord step(const Batch& batch);

  /// Runs until `until` iterations are done, checkpointing into `out_dir`
  /// every checkpoint_every iterations when out_dir is non-empty.
  void run(const std::vector<FundusSample>& data, std::size_t until, const std::filesystem::path& out_dir = {});

  void save(const std::filesystem::path& path) const;
  void load(const std::filesystem::path& path);

  std::size_t iteration() const { return iteration_; }
  const std::vector<LossRecord>& history() const { return history_; }
  const TrainConfig& config() const { return cfg_; }
  Generator<float>& generator() { return *generator_; }
  Discriminator<float>& discriminator() { return *discriminator_; }
  FeatureExtractor<float>& extractor() { return *extractor_; }
  /// Number of shuffles that fell back to an empty negative.
  std::size_t shuffle_fallbacks() const { return fallbacks_; }

 private:
  TrainConfig cfg_;
  std::unique_ptr<Generator<float>> generator_;
  std::unique_ptr<Discriminator<float>> discriminator_;
  std::unique_ptr<FeatureExtractor<float>> extractor_;
  nn::Adam<float> adam_g_;
  nn::Adam<float> adam_d_;
  std::size_t iteration_ = 0;
  std::vector<LossRecord> history_;
  mutable std::size_t fallbacks_ = 0;
};

/// Resolves sub-module configs (seeds, discriminator head) from a TrainConfig.
GeneratorConfig generator_config(const TrainConfig& cfg);
DiscriminatorConfig discriminator_config(const TrainConfig& cfg);
TripletConfig triplet_config(const TrainConfig& cfg);

}  // namespace trgan::train
