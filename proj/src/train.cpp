#include "trgan/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "trgan/checkpoint.hpp"
#include "trgan/config.hpp"
#include "trgan/dataset.hpp"
#include "trgan/rng.hpp"

namespace trgan::train {

std::string to_string(Ablation a) {
  switch (a) {
    case Ablation::baseline: return "baseline";
    case Ablation::general_d: return "+GD";
    case Ablation::ranking_d: return "+TR-D";
    case Ablation::triplet: return "+TL";
    case Ablation::ranking_d_triplet: return "+TR-D+TL";
  }
  return "?";
}

Ablation parse_ablation(const std::string& s) {
  std::string k = s;
  if (!k.empty() && k.front() != '+' && k != "baseline") k = "+" + k;
  for (auto a : {Ablation::baseline, Ablation::general_d, Ablation::ranking_d, Ablation::triplet,
                 Ablation::ranking_d_triplet})
    if (to_string(a) == k) return a;
  throw std::invalid_argument("unknown ablation '" + s + "' (expected baseline, +GD, +TR-D, +TL, +TR-D+TL)");
}

bool uses_discriminator(Ablation a) {
  return a == Ablation::general_d || a == Ablation::ranking_d || a == Ablation::ranking_d_triplet;
}

bool uses_triplet(Ablation a) { return a == Ablation::triplet || a == Ablation::ranking_d_triplet; }

void TrainConfig::validate() const {
  if (!(mu_vessel > 0 && mu_artery > 0 && mu_vein > 0))
    throw std::invalid_argument("train: mu weights must be positive");
  if (!(lambda1 >= 0 && lambda2 >= 0)) throw std::invalid_argument("train: lambda1 and lambda2 must be >= 0");
  if (!(lr0 > 0)) throw std::invalid_argument("train: lr0 must be positive");
  if (!(lr_d_scale > 0)) throw std::invalid_argument("train: lr_d_scale must be positive");
  if (max_iters == 0) throw std::invalid_argument("train: max_iters must be positive");
  if (batch == 0) throw std::invalid_argument("train: batch must be positive");
  if (lr_half_every == 0) throw std::invalid_argument("train: lr_half_every must be positive");
  const auto beta_ok = [](double b) { return b >= 0 && b < 1; };
  if (!(beta_ok(adam_beta1) && beta_ok(adam_beta2) && beta_ok(adam_d_beta1) && beta_ok(adam_d_beta2)))
    throw std::invalid_argument("train: Adam betas must lie in [0, 1)");
  generator.validate();
  if (patch % generator.size_multiple() != 0)
    throw std::invalid_argument("train: patch must be a multiple of " + std::to_string(generator.size_multiple()));
  if (uses_discriminator(ablation)) {
    discriminator.validate();
    if (patch < 32) throw std::invalid_argument("train: patch must be at least 32 with a discriminator");
  }
  if (uses_triplet(ablation)) {
    triplet.validate();
    if (patch % (std::size_t{1} << (triplet.num_levels - 1)) != 0)
      throw std::invalid_argument("train: patch must be divisible by 2^(triplet levels - 1)");
  }
  shuffle.validate();
}

double lr_at(const TrainConfig& cfg, std::size_t iteration) {
  if (iteration >= cfg.max_iters)
    throw std::out_of_range("lr_at: iteration " + std::to_string(iteration) + " outside [0, " +
                            std::to_string(cfg.max_iters) + ")");
  return std::ldexp(cfg.lr0, -static_cast<int>(iteration / cfg.lr_half_every));
}

template <typename T>
ag::Var<T> bce_seg_loss(ag::Tape<T>* tape, const ag::Var<T>& pred, const Tensor<T>& target, double mu_vessel,
                        double mu_artery, double mu_vein) {
  const auto& p = pred->value;
  require_same_shape(p, target, "bce_seg_loss");
  if (p.c() != 3) throw ShapeError("bce_seg_loss: expects 3 channels");
  double mu[3];
  mu[AVMask::kArtery] = mu_artery;
  mu[AVMask::kVein] = mu_vein;
  mu[AVMask::kVessel] = mu_vessel;
  const std::size_t hw = p.h() * p.w();
  const double per_channel = static_cast<double>(p.n() * hw);
  const double lo = kLogEps, hi = 1.0 - kLogEps;
  double loss = 0.0;
  for (std::size_t c = 0; c < 3; ++c) {
    double sum = 0.0;
    for (std::size_t n = 0; n < p.n(); ++n) {
      const T* pp = p.plane(n, c);
      const T* tp = target.plane(n, c);
      for (std::size_t i = 0; i < hw; ++i) {
        const double q = std::clamp(static_cast<double>(pp[i]), lo, hi);
        const double t = tp[i];
        sum -= t * std::log(q) + (1.0 - t) * std::log(1.0 - q);
      }
    }
    loss += mu[c] * sum / per_channel;
  }
  return ag::Tape<T>::record(
      tape, Tensor<T>::scalar(static_cast<T>(loss)), {pred},
      [pred, target, m0 = mu[0], m1 = mu[1], m2 = mu[2], per_channel, lo, hi](ag::Node<T>& node) {
        const double mu_c[3] = {m0, m1, m2};
        const auto& pv = pred->value;
        auto& g = pred->grad_buffer();
        const std::size_t hw = pv.h() * pv.w();
        for (std::size_t n = 0; n < pv.n(); ++n)
          for (std::size_t c = 0; c < 3; ++c) {
            const double k = static_cast<double>(node.grad[0]) * mu_c[c] / per_channel;
            const T* pp = pv.plane(n, c);
            const T* tp = target.plane(n, c);
            T* gp = g.plane(n, c);
            for (std::size_t i = 0; i < hw; ++i) {
              const double q = pp[i];
              if (q < lo || q > hi) continue;
              const double t = tp[i];
              gp[i] += static_cast<T>(k * (-t / q + (1.0 - t) / (1.0 - q)));
            }
          }
      });
}

double generator_loss(const TrainConfig& cfg, double bce, double adv, double triplet) {
  double total = bce;
  if (cfg.adversarial_on()) total += cfg.lambda1 * adv;
  if (cfg.triplet_on()) total += cfg.lambda2 * triplet;
  return total;
}

std::string history_csv(const std::vector<LossRecord>& history) {
  std::ostringstream os;
  os << "iteration,L_BCE,L_adv_D,L_adv_G,L_triplet,lr\n";
  os << std::setprecision(9);
  for (const auto& r : history)
    os << r.iteration << ',' << r.bce << ',' << r.adv_d << ',' << r.adv_g << ',' << r.triplet << ',' << r.lr << '\n';
  return os.str();
}

Tensor<float> stack(const std::vector<const Tensor<float>*>& items) {
  if (items.empty()) throw ShapeError("stack: no items");
  const auto& first = *items.front();
  Tensor<float> out(items.size(), first.c(), first.h(), first.w());
  const std::size_t per = first.c() * first.h() * first.w();
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i]->n() != 1 || items[i]->c() != first.c() || items[i]->h() != first.h() || items[i]->w() != first.w())
      throw ShapeError("stack: items must be single samples of one shape");
    std::copy(items[i]->data(), items[i]->data() + per, out.plane(i, 0));
  }
  return out;
}

AVMask mask_of(const Tensor<float>& batch_mask, std::size_t index) {
  AVMask m(batch_mask.h(), batch_mask.w());
  std::copy(batch_mask.plane(index, 0), batch_mask.plane(index, 0) + m.data.size(), m.data.data());
  return m;
}

GeneratorConfig generator_config(const TrainConfig& cfg) {
  GeneratorConfig g = cfg.generator;
  g.seed = derive_seed(cfg.seed, "generator");
  return g;
}

DiscriminatorConfig discriminator_config(const TrainConfig& cfg) {
  DiscriminatorConfig d = cfg.discriminator;
  d.seed = derive_seed(cfg.seed, "discriminator");
  d.head_bits = cfg.ablation == Ablation::general_d ? 1 : 2;
  return d;
}

TripletConfig triplet_config(const TrainConfig& cfg) {
  TripletConfig t = cfg.triplet;
  t.extractor_seed = derive_seed(cfg.seed, "extractor");
  return t;
}

Trainer::Trainer(const TrainConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  generator_ = std::make_unique<Generator<float>>(generator_config(cfg_));
  discriminator_ = std::make_unique<Discriminator<float>>(discriminator_config(cfg_));
  extractor_ = std::make_unique<FeatureExtractor<float>>(triplet_config(cfg_));
  adam_g_ = nn::Adam<float>(generator_->params(), {cfg_.adam_beta1, cfg_.adam_beta2, 1e-8});
  adam_d_ = nn::Adam<float>(discriminator_->params(), {cfg_.adam_d_beta1, cfg_.adam_d_beta2, 1e-8});
}

Batch Trainer::sample_batch(const std::vector<FundusSample>& data) const {
  if (data.empty()) throw std::invalid_argument("train: no training samples");
  std::vector<data::SamplePatch> patches;
  for (std::size_t b = 0; b < cfg_.batch; ++b) {
    Rng rng = make_rng(cfg_.seed, "batch", iteration_, b);
    const auto idx = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(data.size()) - 1));
    patches.push_back(data::sample_patch(data[idx], rng, cfg_.patch));
  }
  std::vector<const Tensor<float>*> images, masks;
  for (const auto& p : patches) {
    images.push_back(&p.image);
    masks.push_back(&p.mask.data);
  }
  return Batch{stack(images), stack(masks)};
}

Tensor<float> Trainer::shuffled_masks(const Tensor<float>& masks) const {
  Tensor<float> out(masks.shape());
  const std::size_t per = 3 * masks.h() * masks.w();
  for (std::size_t b = 0; b < masks.n(); ++b) {
    const AVMask m = mask_of(masks, b);
    // Up to three seeds; a mask that cannot be shuffled falls back to empty,
    // which still ranks below any generated mask.
    bool done = false;
    for (std::uint64_t attempt = 0; attempt < 3 && !done; ++attempt) {
      shuffle::ShuffleConfig sc = cfg_.shuffle;
      sc.seed = derive_seed(cfg_.seed, "shuffle", iteration_, b * 3 + attempt);
      try {
        const auto [shuffled, report] = shuffle::shuffle_mask(m, sc);
        std::copy(shuffled.data.data(), shuffled.data.data() + per, out.plane(b, 0));
        done = true;
      } catch (const shuffle::PreconditionError&) {
        break;
      } catch (const shuffle::ShuffleError&) {
      }
    }
    if (!done) ++fallbacks_;
  }
  return out;
}

namespace {

template <typename T>
double value_of(const ag::Var<T>& v) {
  return static_cast<double>(v->value[0]);
}

double param_norm(nn::ParamSet<float>& ps) {
  double s = 0.0;
  for (const auto& [name, v] : ps.params)
    for (float x : v->value.vec()) s += static_cast<double>(x) * x;
  return std::sqrt(s);
}

}  // namespace

LossRecord Trainer::step(const Batch& batch) {
  if (batch.image.n() != cfg_.batch || batch.mask.n() != cfg_.batch)
    throw std::invalid_argument("train: batch holds " + std::to_string(batch.image.n()) + " samples, expected " +
                                std::to_string(cfg_.batch));
  require_same_shape(batch.image, batch.mask, "train_step");
  LossRecord rec;
  rec.iteration = iteration_;
  rec.lr = lr_at(cfg_, iteration_);

  const bool adv = cfg_.adversarial_on();
  const bool trip = cfg_.triplet_on();
  const bool ranking = adv && cfg_.ablation != Ablation::general_d;
  const auto x = ag::constant(batch.image);
  const auto real = ag::constant(batch.mask);
  Tensor<float> negatives;
  if (ranking || trip) negatives = shuffled_masks(batch.mask);

  ag::Tape<float> tape;
  generator_->params().zero_grad();
  const auto fake = generator_->forward(&tape, x, true);

  // Discriminator update against a detached G(x).
  if (adv) {
    auto& dps = discriminator_->params();
    dps.zero_grad();
    dps.set_requires_grad(true);
    ag::Tape<float> dtape;
    const auto fake_d = ag::detach(fake);
    ag::Var<float> ld;
    if (ranking) {
      const auto s_shuf = discriminator_->forward(&dtape, x, ag::constant(negatives));
      const auto s_gen = discriminator_->forward(&dtape, x, fake_d);
      const auto s_gt = discriminator_->forward(&dtape, x, real);
      ld = disc_loss(&dtape, s_shuf, s_gen, s_gt);
    } else {
      const auto s_real = discriminator_->forward(&dtape, x, real);
      const auto s_fake = discriminator_->forward(&dtape, x, fake_d);
      ld = general_discriminator_loss(&dtape, s_real, s_fake);
    }
    rec.adv_d = value_of(ld);
    if (std::isfinite(rec.adv_d)) {
      dtape.backward(ld);
      adam_d_.step(dps, rec.lr * cfg_.lr_d_scale);
      discriminator_->note_access();
    }
    dps.set_requires_grad(false);
  }

  // Generator update.
  std::vector<std::pair<ag::Var<float>, float>> terms;
  const auto lbce = bce_seg_loss(&tape, fake, batch.mask, cfg_.mu_vessel, cfg_.mu_artery, cfg_.mu_vein);
  rec.bce = value_of(lbce);
  terms.emplace_back(lbce, 1.0f);
  if (adv) {
    const auto ladv = gen_adv_loss(&tape, discriminator_->forward(&tape, x, fake));
    rec.adv_g = value_of(ladv);
    terms.emplace_back(ladv, static_cast<float>(cfg_.lambda1));
  }
  if (trip) {
    const auto ltrip = triplet_loss(&tape, batch.mask, fake, negatives, triplet_config(cfg_), *extractor_);
    rec.triplet = value_of(ltrip);
    terms.emplace_back(ltrip, static_cast<float>(cfg_.lambda2));
  }
  const auto total = ag::weighted_sum(&tape, terms);
  const double total_v = value_of(total);
  if (!std::isfinite(total_v) || !std::isfinite(rec.adv_d)) {
    std::ostringstream os;
    os << std::setprecision(9) << "non-finite loss at iteration " << iteration_ << ": L_BCE=" << rec.bce
       << " L_adv_D=" << rec.adv_d << " L_adv_G=" << rec.adv_g << " L_triplet=" << rec.triplet << " lr=" << rec.lr
       << " |G|=" << param_norm(generator_->params()) << " |D|=" << param_norm(discriminator_->params());
    throw NonFiniteLoss(os.str());
  }
  tape.backward(total);
  adam_g_.step(generator_->params(), rec.lr);

  history_.push_back(rec);
  ++iteration_;
  return rec;
}

void Trainer::run(const std::vector<FundusSample>& data, std::size_t until, const std::filesystem::path& out_dir) {
  until = std::min(until, cfg_.max_iters);
  while (iteration_ < until) {
    step(sample_batch(data));
    if (!out_dir.empty() && cfg_.checkpoint_every > 0 && iteration_ % cfg_.checkpoint_every == 0) {
      std::ostringstream name;
      name << "ckpt_" << std::setw(6) << std::setfill('0') << iteration_ << ".ckpt";
      save(out_dir / name.str());
    }
  }
}

namespace {

void store_adam(ckpt::Checkpoint& c, const std::string& prefix, nn::Adam<float>& adam) {
  c.meta[prefix + "_steps"] = adam.steps();
  for (std::size_t i = 0; i < adam.first_moments().size(); ++i) {
    c.add(prefix + "/m/" + std::to_string(i), adam.first_moments()[i]);
    c.add(prefix + "/v/" + std::to_string(i), adam.second_moments()[i]);
  }
}

void restore_adam(const ckpt::Checkpoint& c, const std::string& prefix, nn::Adam<float>& adam) {
  adam.set_steps(c.meta.at(prefix + "_steps").get<std::uint64_t>());
  auto fetch = [&](const std::string& key, Tensor<float>& into) {
    const Tensor<float>* t = c.find(key);
    if (t == nullptr || t->shape() != into.shape()) throw ckpt::CheckpointError("checkpoint: bad optimizer tensor " + key);
    into = *t;
  };
  for (std::size_t i = 0; i < adam.first_moments().size(); ++i) {
    fetch(prefix + "/m/" + std::to_string(i), adam.first_moments()[i]);
    fetch(prefix + "/v/" + std::to_string(i), adam.second_moments()[i]);
  }
}

}  // namespace

void Trainer::save(const std::filesystem::path& path) const {
  auto& self = const_cast<Trainer&>(*this);
  ckpt::Checkpoint c;
  c.meta["iteration"] = iteration_;
  config::RunConfig rc;
  rc.train = cfg_;
  c.meta["config"] = config::render(rc);
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& r : history_) hist.push_back({r.iteration, r.bce, r.adv_d, r.adv_g, r.triplet, r.lr});
  c.meta["history"] = std::move(hist);
  c.meta["shuffle_fallbacks"] = fallbacks_;
  ckpt::store(c, "generator", self.generator_->params());
  ckpt::store(c, "discriminator", self.discriminator_->params());
  store_adam(c, "adam_g", self.adam_g_);
  store_adam(c, "adam_d", self.adam_d_);
  ckpt::write(path, c);
}

void Trainer::load(const std::filesystem::path& path) {
  const auto c = ckpt::read(path);
  ckpt::restore(c, "generator", generator_->params());
  ckpt::restore(c, "discriminator", discriminator_->params());
  restore_adam(c, "adam_g", adam_g_);
  restore_adam(c, "adam_d", adam_d_);
  iteration_ = c.meta.at("iteration").get<std::size_t>();
  fallbacks_ = c.meta.value("shuffle_fallbacks", std::size_t{0});
  history_.clear();
  for (const auto& r : c.meta.at("history"))
    history_.push_back(LossRecord{r.at(0).get<std::size_t>(), r.at(1).get<double>(), r.at(2).get<double>(),
                                  r.at(3).get<double>(), r.at(4).get<double>(), r.at(5).get<double>()});
}

template ag::Var<float> bce_seg_loss<float>(ag::Tape<float>*, const ag::Var<float>&, const Tensor<float>&, double,
                                            double, double);
template ag::Var<double> bce_seg_loss<double>(ag::Tape<double>*, const ag::Var<double>&, const Tensor<double>&,
                                              double, double, double);

}  // namespace trgan::train
