#include "trgan/cli.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "trgan/checkpoint.hpp"
#include "trgan/config.hpp"
#include "trgan/dataset.hpp"
#include "trgan/evaluate.hpp"
#include "trgan/image_io.hpp"
#include "trgan/infer.hpp"
#include "trgan/shuffle.hpp"
#include "trgan/train.hpp"

namespace trgan::cli {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

bool is_image(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".tif" || ext == ".tiff" || ext == ".jpg" || ext == ".jpeg" || ext == ".gif" ||
         ext == ".bmp";
}

std::vector<fs::path> image_files(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && is_image(e.path())) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

AVMask read_color_mask(const fs::path& path) {
  const auto img = io::read_rgb8(path);
  return decode_color(img.rgb, img.h, img.w);
}

// --- synth -----------------------------------------------------------------

struct SynthArgs {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::string split = "train";
  std::size_t size = 128;
  std::string out;
};

void run_synth(const SynthArgs& a, std::ostream& out) {
  const auto split = data::parse_split(a.split);
  std::vector<FundusSample> samples;
  for (std::size_t i = 0; i < a.n; ++i) {
    auto s = data::synth_sample(a.seed + i, a.size, a.size);
    char id[32];
    std::snprintf(id, sizeof(id), "%02zu_synth", i + 1);
    s.id = id;
    samples.push_back(std::move(s));
  }
  data::export_avdrive(a.out, split, samples);
  out << "wrote " << a.n << " samples to " << (fs::path(a.out) / data::to_string(split)).string() << '\n';
}

// --- shuffle ---------------------------------------------------------------

struct ShuffleArgs {
  std::string mask;
  std::string out;
  std::uint64_t seed = 0;
  double budget_low = 0.05;
  double budget_high = 0.25;
};

void run_shuffle(const ShuffleArgs& a, std::ostream& out) {
  shuffle::ShuffleConfig cfg;
  cfg.seed = a.seed;
  cfg.budget_low = a.budget_low;
  cfg.budget_high = a.budget_high;
  const AVMask mask = read_color_mask(a.mask);
  const auto [shuffled, report] = shuffle::shuffle_mask(mask, cfg);
  fs::create_directories(a.out);
  const std::string stem = fs::path(a.mask).stem().string();
  io::write_rgb8(fs::path(a.out) / (stem + "_shuffled.png"), io::Rgb8{shuffled.h(), shuffled.w(), encode_color(shuffled)});
  write_text(fs::path(a.out) / (stem + "_shuffle.json"), shuffle::to_json(report).dump(2) + "\n");
  out << "shuffled " << stem << ": " << report.ops.size() << " ops, fraction " << report.final_fraction << '\n';
}

// --- train -----------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::string ablation;
  std::string out;
  std::string resume;
};

std::vector<FundusSample> training_data(const config::RunConfig& rc) {
  if (!rc.data_root.empty()) return data::load_avdrive(rc.data_root, data::Split::train);
  std::vector<FundusSample> samples;
  const std::uint64_t base = derive_seed(rc.train.seed, "synth-train");
  for (std::size_t i = 0; i < rc.synth_count; ++i)
    samples.push_back(data::synth_sample(base + i, rc.synth_size, rc.synth_size));
  return samples;
}

void run_train(const TrainArgs& a, std::ostream& out) {
  config::RunConfig rc = a.config.empty() ? config::RunConfig{} : config::load(a.config);
  if (!a.ablation.empty()) rc.train.ablation = train::parse_ablation(a.ablation);
  rc.train.validate();
  const fs::path dir(a.out);
  fs::create_directories(dir);
  write_text(dir / "config.resolved", config::render(rc));

  const auto data = training_data(rc);
  train::Trainer trainer(rc.train);
  if (!a.resume.empty()) trainer.load(a.resume);
  trainer.run(data, rc.train.max_iters, dir);
  trainer.save(dir / "model.ckpt");
  write_text(dir / "history.csv", train::history_csv(trainer.history()));
  out << "trained " << train::to_string(rc.train.ablation) << " for " << trainer.iteration() << " iterations; "
      << "model at " << (dir / "model.ckpt").string() << '\n';
}

// --- predict ---------------------------------------------------------------

struct PredictArgs {
  std::string checkpoint;
  std::string image;
  std::string out;
};

void run_predict(const PredictArgs& a, std::ostream& out) {
  const auto c = ckpt::read(a.checkpoint);
  if (!c.meta.contains("config")) throw ckpt::CheckpointError("checkpoint has no run config: " + a.checkpoint);
  const config::RunConfig rc = config::parse(c.meta.at("config").get<std::string>());
  Generator<float> g(train::generator_config(rc.train));
  ckpt::restore(c, "generator", g.params());
  const auto model = infer::generator_model(g);

  std::vector<fs::path> inputs;
  if (fs::is_directory(a.image))
    inputs = image_files(a.image);
  else
    inputs.push_back(a.image);
  if (inputs.empty()) throw std::runtime_error("no images found in " + a.image);
  for (const auto& path : inputs) {
    const auto image = io::read_image(path);
    const AVMask prob = infer::predict_full(image, model, rc.train.patch, rc.infer_stride, rc.train.batch);
    const auto files = infer::write_prediction(a.out, path.stem().string(), image, prob);
    out << "predicted " << path.filename().string() << " -> " << files.color.string() << '\n';
  }
}

// --- evaluate --------------------------------------------------------------

struct EvaluateArgs {
  std::string pred_dir;
  std::string gt_dir;
  std::string mode = "gt";
  std::string out;
  std::string name;
};

std::string match_key(const fs::path& p, const std::string& strip_suffix) {
  std::string stem = p.stem().string();
  if (!strip_suffix.empty() && stem.size() > strip_suffix.size() &&
      stem.compare(stem.size() - strip_suffix.size(), strip_suffix.size(), strip_suffix) == 0)
    stem.erase(stem.size() - strip_suffix.size());
  const std::string num = data::numeric_prefix(stem);
  return num.empty() ? stem : num;
}

void run_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const auto mode = eval::parse_mode(a.mode);
  fs::path gt_dir(a.gt_dir);
  if (fs::is_directory(gt_dir / "av")) gt_dir /= "av";
  std::map<std::string, fs::path> gt;
  for (const auto& p : image_files(gt_dir)) gt[match_key(p, "")] = p;

  std::vector<eval::AVMetrics> parts;
  eval::ConnectivityReport conn;
  std::vector<double> a_ratio, v_ratio;
  for (const auto& p : image_files(a.pred_dir)) {
    if (p.stem().string().size() < 3 || p.stem().string().substr(p.stem().string().size() - 3) != "_av") continue;
    const auto it = gt.find(match_key(p, "_av"));
    if (it == gt.end()) throw std::runtime_error("no ground truth for prediction " + p.filename().string());
    const AVMask pred = read_color_mask(p);
    const AVMask truth = read_color_mask(it->second);
    parts.push_back(eval::av_metrics(pred, truth, mode));
    const auto c = eval::connectivity_report(pred);
    conn.artery.component_count += c.artery.component_count;
    conn.vein.component_count += c.vein.component_count;
    if (c.artery.largest_ratio) a_ratio.push_back(*c.artery.largest_ratio);
    if (c.vein.largest_ratio) v_ratio.push_back(*c.vein.largest_ratio);
  }
  if (parts.empty()) throw std::runtime_error("no *_av.png predictions found in " + a.pred_dir);
  auto mean = [](const std::vector<double>& v) -> std::optional<double> {
    if (v.empty()) return std::nullopt;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  conn.artery.largest_ratio = mean(a_ratio);
  conn.vein.largest_ratio = mean(v_ratio);
  const std::string name = a.name.empty() ? fs::path(a.pred_dir).filename().string() : a.name;
  const auto report = eval::emit_tables({eval::RunRow{name.empty() ? "run" : name, eval::pool(parts), conn}});
  const fs::path out_path(a.out);
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  write_text(out_path, report.csv);
  out << report.table;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Topology-ranking adversarial A/V classification", "trgan"};
  app.require_subcommand(1);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Generate synthetic samples in AV-DRIVE layout");
  synth->add_option("--n", sa.n, "Number of samples")->required();
  synth->add_option("--seed", sa.seed, "Seed of the first sample; sample i uses seed + i");
  synth->add_option("--split", sa.split, "train or test");
  synth->add_option("--size", sa.size, "Image side in pixels");
  synth->add_option("--out", sa.out, "Dataset root")->required();

  ShuffleArgs sh;
  auto* shuf = app.add_subcommand("shuffle", "Perturb a color-coded A/V mask");
  shuf->add_option("--mask", sh.mask, "Color-coded mask PNG")->required();
  shuf->add_option("--out", sh.out, "Output directory")->required();
  shuf->add_option("--seed", sh.seed, "Shuffle seed");
  shuf->add_option("--budget-low", sh.budget_low, "Lower bound on the changed-pixel fraction");
  shuf->add_option("--budget-high", sh.budget_high, "Upper bound on the changed-pixel fraction");

  TrainArgs ta;
  auto* tr = app.add_subcommand("train", "Train a generator");
  tr->add_option("--config", ta.config, "Key/value config file");
  tr->add_option("--ablation", ta.ablation, "baseline, +GD, +TR-D, +TL or +TR-D+TL");
  tr->add_option("--out", ta.out, "Run directory")->required();
  tr->add_option("--resume", ta.resume, "Checkpoint to resume from");

  PredictArgs pa;
  auto* pr = app.add_subcommand("predict", "Predict A/V maps for an image or a directory of images");
  pr->add_option("--checkpoint", pa.checkpoint, "Model checkpoint")->required();
  pr->add_option("--image", pa.image, "Image file or directory")->required();
  pr->add_option("--out", pa.out, "Output directory")->required();

  EvaluateArgs ea;
  auto* ev = app.add_subcommand("evaluate", "Score predicted masks against ground truth");
  ev->add_option("--pred-dir", ea.pred_dir, "Directory with <id>_av.png predictions")->required();
  ev->add_option("--gt-dir", ea.gt_dir, "Directory with color-coded ground truth (or its parent with av/)")->required();
  ev->add_option("--mode", ea.mode, "gt or seg");
  ev->add_option("--out", ea.out, "Report CSV path")->required();
  ev->add_option("--name", ea.name, "Row name in the report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*synth) run_synth(sa, out);
    if (*shuf) run_shuffle(sh, out);
    if (*tr) run_train(ta, out);
    if (*pr) run_predict(pa, out);
    if (*ev) run_evaluate(ea, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace trgan::cli
