#include "trgan/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <iomanip>
#include <set>
#include <sstream>

namespace trgan::config {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename N>
N parse_number(const std::string& key, const std::string& v) {
  N out{};
  const char* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("config: bad value '" + v + "' for key " + key);
  return out;
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

struct Field {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

template <typename N, typename Ref>
Field integer(std::string key, Ref ref) {
  return Field{key, [ref](const RunConfig& c) { return std::to_string(ref(const_cast<RunConfig&>(c))); },
               [ref, key](RunConfig& c, const std::string& v) { ref(c) = parse_number<N>(key, v); }};
}

template <typename Ref>
Field real(std::string key, Ref ref) {
  return Field{key, [ref](const RunConfig& c) { return format_double(ref(const_cast<RunConfig&>(c))); },
               [ref, key](RunConfig& c, const std::string& v) { ref(c) = parse_number<double>(key, v); }};
}

template <typename Ref>
Field text(std::string key, Ref ref) {
  return Field{key, [ref](const RunConfig& c) { return ref(const_cast<RunConfig&>(c)); },
               [ref](RunConfig& c, const std::string& v) { ref(c) = v; }};
}

#define TRGAN_REF(expr) [](RunConfig& c) -> auto& { return c.expr; }

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      integer<std::uint64_t>("seed", TRGAN_REF(train.seed)),
      Field{"ablation", [](const RunConfig& c) { return train::to_string(c.train.ablation); },
            [](RunConfig& c, const std::string& v) {
              try {
                c.train.ablation = train::parse_ablation(v);
              } catch (const std::invalid_argument& e) {
                throw ConfigError(std::string("config: ") + e.what());
              }
            }},
      integer<std::size_t>("max_iters", TRGAN_REF(train.max_iters)),
      integer<std::size_t>("batch", TRGAN_REF(train.batch)),
      integer<std::size_t>("patch", TRGAN_REF(train.patch)),
      real("lr0", TRGAN_REF(train.lr0)),
      integer<std::size_t>("lr_half_every", TRGAN_REF(train.lr_half_every)),
      real("lr_d_scale", TRGAN_REF(train.lr_d_scale)),
      real("adam_beta1", TRGAN_REF(train.adam_beta1)),
      real("adam_beta2", TRGAN_REF(train.adam_beta2)),
      real("adam_d_beta1", TRGAN_REF(train.adam_d_beta1)),
      real("adam_d_beta2", TRGAN_REF(train.adam_d_beta2)),
      real("mu_vessel", TRGAN_REF(train.mu_vessel)),
      real("mu_artery", TRGAN_REF(train.mu_artery)),
      real("mu_vein", TRGAN_REF(train.mu_vein)),
      real("lambda1", TRGAN_REF(train.lambda1)),
      real("lambda2", TRGAN_REF(train.lambda2)),
      integer<std::size_t>("checkpoint_every", TRGAN_REF(train.checkpoint_every)),
      integer<std::size_t>("generator.stages", TRGAN_REF(train.generator.encoder_stages)),
      integer<std::size_t>("generator.base_width", TRGAN_REF(train.generator.base_width)),
      integer<std::size_t>("generator.max_width", TRGAN_REF(train.generator.max_width)),
      integer<std::size_t>("generator.blocks_per_stage", TRGAN_REF(train.generator.blocks_per_stage)),
      text("generator.pretrained_encoder", TRGAN_REF(train.generator.pretrained_encoder)),
      integer<std::size_t>("discriminator.base_width", TRGAN_REF(train.discriminator.base_width)),
      integer<std::size_t>("discriminator.max_width", TRGAN_REF(train.discriminator.max_width)),
      real("triplet.margin", TRGAN_REF(train.triplet.margin)),
      integer<std::size_t>("triplet.levels", TRGAN_REF(train.triplet.num_levels)),
      integer<std::size_t>("triplet.width", TRGAN_REF(train.triplet.extractor_width)),
      text("triplet.pretrained_weights", TRGAN_REF(train.triplet.pretrained_weights)),
      real("shuffle.budget_low", TRGAN_REF(train.shuffle.budget_low)),
      real("shuffle.budget_high", TRGAN_REF(train.shuffle.budget_high)),
      integer<int>("shuffle.window_min", TRGAN_REF(train.shuffle.window_min)),
      integer<int>("shuffle.window_max", TRGAN_REF(train.shuffle.window_max)),
      integer<int>("shuffle.shift", TRGAN_REF(train.shuffle.shift)),
      integer<int>("shuffle.max_ops", TRGAN_REF(train.shuffle.max_ops)),
      text("data.root", TRGAN_REF(data_root)),
      integer<std::size_t>("data.synth_count", TRGAN_REF(synth_count)),
      integer<std::size_t>("data.synth_size", TRGAN_REF(synth_size)),
      integer<std::size_t>("infer.stride", TRGAN_REF(infer_stride)),
  };
  return f;
}

#undef TRGAN_REF

}  // namespace

std::vector<std::string> known_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.push_back(f.key);
  return keys;
}

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    kv.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return kv;
}

void apply(RunConfig& cfg, const KeyValues& kv) {
  std::set<std::string> seen;
  for (const auto& [key, value] : kv) {
    if (!seen.insert(key).second) throw ConfigError("config: key '" + key + "' given twice");
    const auto& fs = fields();
    auto it = std::find_if(fs.begin(), fs.end(), [&](const Field& f) { return f.key == key; });
    if (it == fs.end()) throw ConfigError("config: unknown key '" + key + "'");
    it->set(cfg, value);
  }
}

RunConfig parse(const std::string& text) {
  RunConfig cfg;
  config::apply(cfg, parse_key_values(text));
  return cfg;
}

RunConfig load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string render(const RunConfig& cfg) {
  std::ostringstream os;
  for (const auto& f : fields()) os << f.key << " = " << f.get(cfg) << '\n';
  return os.str();
}

}  // namespace trgan::config
