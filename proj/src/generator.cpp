#include "trgan/generator.hpp"

#include <stdexcept>

#include "trgan/checkpoint.hpp"
#include "trgan/rng.hpp"

namespace trgan {

void GeneratorConfig::validate() const {
  if (encoder_stages < 1) throw std::invalid_argument("generator: encoder_stages must be >= 1");
  if (base_width < 4) throw std::invalid_argument("generator: base_width must be >= 4");
  if (max_width != 0 && max_width < base_width)
    throw std::invalid_argument("generator: max_width must be >= base_width");
  if (blocks_per_stage < 1) throw std::invalid_argument("generator: blocks_per_stage must be >= 1");
  if (in_channels != 3 || out_channels != 3)
    throw std::invalid_argument("generator: expects 3 input and 3 output channels");
}

std::size_t GeneratorConfig::width(std::size_t stage) const {
  const std::size_t cap = max_width == 0 ? 8 * base_width : max_width;
  std::size_t w = base_width;
  for (std::size_t s = 0; s < stage && w < cap; ++s) w *= 2;
  return std::min(w, cap);
}

template <typename T>
Generator<T>::Generator(const GeneratorConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  std::mt19937_64 rng(derive_seed(cfg_.seed, "generator-init"));
  stem_ = nn::Conv2d<T>(rng, cfg_.in_channels, cfg_.width(0), 3, 1, 1, false);
  stem_bn_ = nn::BatchNorm2d<T>(cfg_.width(0));
  stem_.collect(params_, "stem.conv");
  stem_bn_.collect(params_, "stem.bn");

  for (std::size_t s = 1; s < cfg_.encoder_stages; ++s) {
    std::vector<ResBlock> blocks;
    for (std::size_t b = 0; b < cfg_.blocks_per_stage; ++b) {
      const std::size_t in_c = b == 0 ? cfg_.width(s - 1) : cfg_.width(s);
      const std::size_t out_c = cfg_.width(s);
      const std::size_t stride = b == 0 ? 2 : 1;
      ResBlock rb;
      rb.conv1 = nn::Conv2d<T>(rng, in_c, out_c, 3, stride, 1, false);
      rb.bn1 = nn::BatchNorm2d<T>(out_c);
      rb.conv2 = nn::Conv2d<T>(rng, out_c, out_c, 3, 1, 1, false);
      rb.bn2 = nn::BatchNorm2d<T>(out_c);
      rb.has_proj = stride != 1 || in_c != out_c;
      if (rb.has_proj) {
        rb.proj = nn::Conv2d<T>(rng, in_c, out_c, 1, stride, 0, false);
        rb.bn_proj = nn::BatchNorm2d<T>(out_c);
      }
      blocks.push_back(std::move(rb));
    }
    stages_.push_back(std::move(blocks));
  }
  for (std::size_t s = 1; s < cfg_.encoder_stages; ++s) {
    auto& blocks = stages_[s - 1];
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const std::string p = "enc" + std::to_string(s) + "." + std::to_string(b);
      blocks[b].conv1.collect(params_, p + ".conv1");
      blocks[b].bn1.collect(params_, p + ".bn1");
      blocks[b].conv2.collect(params_, p + ".conv2");
      blocks[b].bn2.collect(params_, p + ".bn2");
      if (blocks[b].has_proj) {
        blocks[b].proj.collect(params_, p + ".proj");
        blocks[b].bn_proj.collect(params_, p + ".bn_proj");
      }
    }
  }
  for (std::size_t s = 1; s < cfg_.encoder_stages; ++s) {
    DecoderBlock d;
    const std::size_t in_c = cfg_.width(s) + cfg_.width(s - 1);
    d.conv = nn::Conv2d<T>(rng, in_c, cfg_.width(s - 1), 3, 1, 1, false);
    d.bn = nn::BatchNorm2d<T>(cfg_.width(s - 1));
    decoder_.push_back(std::move(d));
  }
  for (std::size_t s = 1; s < cfg_.encoder_stages; ++s) {
    decoder_[s - 1].conv.collect(params_, "dec" + std::to_string(s) + ".conv");
    decoder_[s - 1].bn.collect(params_, "dec" + std::to_string(s) + ".bn");
  }
  head_ = nn::Conv2d<T>(rng, cfg_.width(0), cfg_.out_channels, 1, 1, 0, true, T(1));
  head_.collect(params_, "head");

  if (!cfg_.pretrained_encoder.empty()) load_encoder_weights(cfg_.pretrained_encoder);
}

template <typename T>
ag::Var<T> Generator<T>::run_block(ag::Tape<T>* tape, ResBlock& b, const ag::Var<T>& x, bool training) {
  auto h = ag::relu(tape, b.bn1(tape, b.conv1(tape, x), training));
  h = b.bn2(tape, b.conv2(tape, h), training);
  auto shortcut = b.has_proj ? b.bn_proj(tape, b.proj(tape, x), training) : x;
  return ag::relu(tape, ag::add(tape, h, shortcut));
}

template <typename T>
ag::Var<T> Generator<T>::forward(ag::Tape<T>* tape, const ag::Var<T>& x, bool training) {
  const auto& v = x->value;
  const std::size_t m = cfg_.size_multiple();
  if (v.c() != cfg_.in_channels || v.h() == 0 || v.h() % m != 0 || v.w() % m != 0)
    throw ShapeError("generator: input " + v.shape_string() + " must have 3 channels and sides divisible by " +
                     std::to_string(m));
  std::vector<ag::Var<T>> skips;
  auto h = ag::relu(tape, stem_bn_(tape, stem_(tape, x), training));
  skips.push_back(h);
  for (auto& blocks : stages_) {
    for (auto& b : blocks) h = run_block(tape, b, h, training);
    skips.push_back(h);
  }
  for (std::size_t s = cfg_.encoder_stages - 1; s >= 1; --s) {
    auto up = ag::upsample2x(tape, h);
    auto cat = ag::concat_channels(tape, up, skips[s - 1]);
    auto& d = decoder_[s - 1];
    h = ag::relu(tape, d.bn(tape, d.conv(tape, cat), training));
  }
  return ag::sigmoid(tape, head_(tape, h));
}

template <typename T>
void Generator<T>::load_encoder_weights(const std::string& path) {
  if (!std::filesystem::exists(path))
    throw ckpt::CheckpointError("pretrained encoder weight file not found: " + path);
  const auto c = ckpt::read(path);
  std::size_t loaded = 0;
  auto take = [&](const std::string& key, Tensor<T>& dst) {
    const Tensor<float>* t = c.find(key);
    if (t == nullptr) throw ckpt::CheckpointError("weight file " + path + " is missing " + key);
    if (t->shape() != dst.shape()) throw ckpt::CheckpointError("weight file " + path + ": shape mismatch for " + key);
    dst = t->template cast<T>();
    ++loaded;
  };
  for (auto& [name, var] : params_.params)
    if (name.rfind("stem.", 0) == 0 || name.rfind("enc", 0) == 0) take("generator/" + name, var->value);
  for (auto& [name, buf] : params_.buffers)
    if (name.rfind("stem.", 0) == 0 || name.rfind("enc", 0) == 0) take("generator/buffer/" + name, *buf);
  if (loaded == 0) throw ckpt::CheckpointError("weight file " + path + " holds no encoder tensors");
}

template class Generator<float>;
template class Generator<double>;

}  // namespace trgan
