#include "trgan/topofeat.hpp"

#include <algorithm>
#include <filesystem>
#include <stdexcept>

#include "trgan/checkpoint.hpp"
#include "trgan/rng.hpp"

namespace trgan {

void TripletConfig::validate() const {
  if (!(margin > 0.0)) throw std::invalid_argument("triplet: margin must be positive");
  if (num_levels < 1) throw std::invalid_argument("triplet: num_levels must be >= 1");
  if (extractor_width < 1) throw std::invalid_argument("triplet: extractor_width must be >= 1");
}

template <typename T>
std::size_t FeatureExtractor<T>::level_channels(std::size_t level) const {
  return cfg_.extractor_width << std::min<std::size_t>(level, 2);
}

template <typename T>
FeatureExtractor<T>::FeatureExtractor(const TripletConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  std::mt19937_64 rng(derive_seed(cfg_.extractor_seed, "extractor-init"));
  std::size_t in_c = 3;
  for (std::size_t level = 0; level < cfg_.num_levels; ++level) {
    for (int k = 0; k < 2; ++k) {
      convs_.emplace_back(rng, in_c, level_channels(level), 3, 1, 1, true);
      in_c = level_channels(level);
    }
  }
  for (std::size_t i = 0; i < convs_.size(); ++i) convs_[i].collect(params_, "conv" + std::to_string(i + 1));
  if (!cfg_.pretrained_weights.empty()) {
    if (!std::filesystem::exists(cfg_.pretrained_weights))
      throw ckpt::CheckpointError("extractor weight file not found: " + cfg_.pretrained_weights);
    ckpt::restore(ckpt::read(cfg_.pretrained_weights), "extractor", params_);
  }
  params_.set_requires_grad(false);
}

template <typename T>
FeaturePyramid<T> FeatureExtractor<T>::extract(ag::Tape<T>* tape, const ag::Var<T>& mask) const {
  const auto& v = mask->value;
  const std::size_t m = std::size_t{1} << (cfg_.num_levels - 1);
  if (v.c() != 3 || v.h() % m != 0 || v.w() % m != 0)
    throw ShapeError("extractor: input " + v.shape_string() + " needs 3 channels and sides divisible by " +
                     std::to_string(m));
  ++accesses_;
  FeaturePyramid<T> levels;
  ag::Var<T> h = mask;
  for (std::size_t level = 0; level < cfg_.num_levels; ++level) {
    if (level > 0) h = ag::max_pool2(tape, h);
    h = ag::relu(tape, convs_[2 * level](tape, h));
    h = ag::relu(tape, convs_[2 * level + 1](tape, h));
    levels.push_back(h);
  }
  return levels;
}

template <typename T>
double level_distance(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "level_distance");
  const double per_sample = static_cast<double>(a.c() * a.h() * a.w());
  if (per_sample == 0) throw ShapeError("level_distance: empty level");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    sum += d * d;
  }
  return sum / per_sample;
}

double triplet_from_distances(const std::vector<std::pair<double, double>>& d1_d2, double margin) {
  if (d1_d2.empty()) throw std::invalid_argument("triplet: no levels");
  double total = 0.0;
  for (const auto& [d1, d2] : d1_d2) total += std::max(d1 - d2 + margin, 0.0);
  return total / static_cast<double>(d1_d2.size());
}

namespace {

template <typename T>
Tensor<T> sample_slice(const Tensor<T>& t, std::size_t n) {
  Tensor<T> out(1, t.c(), t.h(), t.w());
  std::copy(t.plane(n, 0), t.plane(n, 0) + out.size(), out.data());
  return out;
}

}  // namespace

template <typename T>
ag::Var<T> triplet_loss(ag::Tape<T>* tape, const Tensor<T>& anchor, const ag::Var<T>& positive,
                        const Tensor<T>& negative, const TripletConfig& cfg, const FeatureExtractor<T>& extractor) {
  require_same_shape(anchor, positive->value, "triplet_loss");
  require_same_shape(anchor, negative, "triplet_loss");
  const auto fa = extractor.extract(nullptr, ag::constant(anchor));
  const auto fn = extractor.extract(nullptr, ag::constant(negative));
  const auto fp = extractor.extract(tape, positive);
  const std::size_t batch = anchor.n();
  const std::size_t levels = fp.size();

  // active[b * levels + i]: hinge at sample b, level i is open.
  std::vector<char> active(batch * levels, 0);
  double loss = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    std::vector<std::pair<double, double>> d;
    for (std::size_t i = 0; i < levels; ++i) {
      const auto a = sample_slice(fa[i]->value, b);
      const double d1 = level_distance(a, sample_slice(fp[i]->value, b));
      const double d2 = level_distance(a, sample_slice(fn[i]->value, b));
      d.emplace_back(d1, d2);
      active[b * levels + i] = d1 - d2 + cfg.margin > 0.0 ? 1 : 0;
    }
    loss += triplet_from_distances(d, cfg.margin);
  }
  loss /= static_cast<double>(batch);

  std::vector<ag::Var<T>> parents(fp.begin(), fp.end());
  return ag::Tape<T>::record(
      tape, Tensor<T>::scalar(static_cast<T>(loss)), parents,
      [fp, fa, active = std::move(active), batch, levels](ag::Node<T>& node) {
        const double outer = static_cast<double>(node.grad[0]) / static_cast<double>(batch * levels);
        for (std::size_t i = 0; i < levels; ++i) {
          if (!fp[i]->requires_grad) continue;
          const auto& p = fp[i]->value;
          const auto& a = fa[i]->value;
          const std::size_t per = p.c() * p.h() * p.w();
          auto& g = fp[i]->grad_buffer();
          const double k = outer * 2.0 / static_cast<double>(per);
          for (std::size_t b = 0; b < batch; ++b) {
            if (!active[b * levels + i]) continue;  // closed hinge (and the kink) contribute 0
            const T* pp = p.plane(b, 0);
            const T* ap = a.plane(b, 0);
            T* gp = g.plane(b, 0);
            for (std::size_t j = 0; j < per; ++j) gp[j] += static_cast<T>(k * (static_cast<double>(pp[j]) - ap[j]));
          }
        }
      });
}

template class FeatureExtractor<float>;
template class FeatureExtractor<double>;
template double level_distance<float>(const Tensor<float>&, const Tensor<float>&);
template double level_distance<double>(const Tensor<double>&, const Tensor<double>&);
template ag::Var<float> triplet_loss<float>(ag::Tape<float>*, const Tensor<float>&, const ag::Var<float>&,
                                            const Tensor<float>&, const TripletConfig&, const FeatureExtractor<float>&);
template ag::Var<double> triplet_loss<double>(ag::Tape<double>*, const Tensor<double>&, const ag::Var<double>&,
                                              const Tensor<double>&, const TripletConfig&,
                                              const FeatureExtractor<double>&);

}  // namespace trgan
