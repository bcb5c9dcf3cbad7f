#include "trgan/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cctype>
#include <map>
#include <numbers>

#include "trgan/image_io.hpp"

namespace fs = std::filesystem;

namespace trgan::data {

std::string to_string(Split s) { return s == Split::train ? "train" : "test"; }

Split parse_split(const std::string& s) {
  if (s == "train" || s == "training") return Split::train;
  if (s == "test") return Split::test;
  throw DatasetError("unknown split: " + s);
}

std::string numeric_prefix(const std::string& stem) {
  std::size_t n = 0;
  while (n < stem.size() && std::isdigit(static_cast<unsigned char>(stem[n]))) ++n;
  return stem.substr(0, n);
}

namespace {

bool has_ext(const fs::path& p, std::initializer_list<const char*> exts) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return std::any_of(exts.begin(), exts.end(), [&](const char* x) { return e == x; });
}

// numeric prefix -> path; duplicate prefixes are an error.
std::map<long, fs::path> index_dir(const fs::path& dir, std::initializer_list<const char*> exts,
                                   bool required) {
  std::map<long, fs::path> out;
  if (!fs::is_directory(dir)) {
    if (required) throw DatasetError("missing directory: " + dir.string());
    return out;
  }
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || !has_ext(entry.path(), exts)) continue;
    const std::string prefix = numeric_prefix(entry.path().stem().string());
    if (prefix.empty()) throw DatasetError("file without numeric prefix: " + entry.path().string());
    const long key = std::stol(prefix);
    if (!out.emplace(key, entry.path()).second)
      throw DatasetError("duplicate numeric prefix: " + entry.path().string());
  }
  return out;
}

fs::path split_dir(const fs::path& root, Split split) {
  fs::path dir = root / to_string(split);
  if (split == Split::train && !fs::is_directory(dir) && fs::is_directory(root / "training"))
    dir = root / "training";
  return dir;
}

}  // namespace

std::vector<FundusSample> load_avdrive(const fs::path& root, Split split) {
  const fs::path dir = split_dir(root, split);
  const auto images = index_dir(dir / "images", {".tif", ".tiff", ".png", ".jpg", ".jpeg", ".bmp"}, true);
  const auto labels = index_dir(dir / "av", {".png"}, true);
  const auto fovs = index_dir(dir / "mask", {".tif", ".tiff", ".png", ".gif", ".bmp"}, false);
  if (images.empty()) throw DatasetError("no images in " + (dir / "images").string());

  std::vector<FundusSample> out;
  for (const auto& [key, img_path] : images) {
    auto lab = labels.find(key);
    if (lab == labels.end()) throw DatasetError("no av label for image: " + img_path.string());
    FundusSample s;
    s.id = img_path.stem().string();
    try {
      s.image = io::read_image(img_path);
      const io::Rgb8 av = io::read_rgb8(lab->second);
      if (av.h != s.image.h() || av.w != s.image.w())
        throw DatasetError("size mismatch between image and label: " + lab->second.string());
      s.mask = decode_color(av.rgb, av.h, av.w);
    } catch (const io::IoError& e) {
      throw DatasetError(e.what());
    }
    s.fov.assign(s.h() * s.w(), 1);
    if (auto f = fovs.find(key); f != fovs.end()) {
      std::size_t fh = 0, fw = 0;
      std::vector<std::uint8_t> fov;
      try {
        fov = io::read_gray8(f->second, fh, fw);
      } catch (const io::IoError& e) {
        throw DatasetError(e.what());
      }
      if (fh != s.h() || fw != s.w()) throw DatasetError("size mismatch for fov mask: " + f->second.string());
      for (std::size_t i = 0; i < fov.size(); ++i) s.fov[i] = fov[i] > 0 ? 1 : 0;
    }
    out.push_back(std::move(s));
  }
  for (const auto& [key, lab_path] : labels) {
    if (!images.count(key)) throw DatasetError("no image for av label: " + lab_path.string());
  }
  return out;
}

void export_avdrive(const fs::path& root, Split split, const std::vector<FundusSample>& samples) {
  const fs::path dir = root / to_string(split);
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "av");
  for (const auto& s : samples) {
    io::write_image(dir / "images" / (s.id + ".png"), s.image);
    io::write_rgb8(dir / "av" / (s.id + ".png"), io::Rgb8{s.h(), s.w(), encode_color(s.mask)});
  }
}

// ---- synthetic samples ----------------------------------------------------

namespace {

struct Walker {
  double y, x, angle;
  int width;
  int steps;
  int depth;
};

double normal(Rng& rng) {
  // Box-Muller on the portable uniform source.
  const double u1 = std::max(uniform01(rng), 1e-300);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

void stamp(std::vector<std::uint8_t>& canvas, std::size_t h, std::size_t w, long y, long x, int width) {
  // width 1: single pixel; 2: 2x2 block; 3: 3x3 block centred on (y, x).
  const long lo = width == 3 ? -1 : 0;
  const long hi = width == 1 ? 0 : 1;
  for (long dy = lo; dy <= hi; ++dy)
    for (long dx = lo; dx <= hi; ++dx) {
      const long yy = y + dy, xx = x + dx;
      if (yy < 0 || xx < 0 || yy >= static_cast<long>(h) || xx >= static_cast<long>(w)) continue;
      canvas[static_cast<std::size_t>(yy) * w + static_cast<std::size_t>(xx)] = 1;
    }
}

void grow_tree(Rng& rng, std::vector<std::uint8_t>& canvas, std::size_t h, std::size_t w, double root_y,
               double root_x, double base_angle) {
  const double scale = static_cast<double>(std::max(h, w));
  std::vector<Walker> stack;
  for (int t = 0; t < 3; ++t) {
    const double spread = (t - 1) * 0.9 + uniform(rng, -0.25, 0.25);
    stack.push_back({root_y, root_x, base_angle + spread, 3, static_cast<int>(scale * uniform(rng, 0.6, 0.9)), 0});
  }
  while (!stack.empty()) {
    Walker wk = stack.back();
    stack.pop_back();
    long py = std::lround(wk.y), px = std::lround(wk.x);
    stamp(canvas, h, w, py, px, wk.width);
    for (int s = 0; s < wk.steps; ++s) {
      wk.angle += 0.12 * normal(rng);
      wk.y += std::sin(wk.angle);
      wk.x += std::cos(wk.angle);
      const long ny = std::lround(wk.y), nx = std::lround(wk.x);
      if (ny < 0 || nx < 0 || ny >= static_cast<long>(h) || nx >= static_cast<long>(w)) break;
      py = ny;
      px = nx;
      stamp(canvas, h, w, py, px, wk.width);
      const int remaining = wk.steps - s - 1;
      if (wk.depth < 3 && remaining > 12 && uniform01(rng) < 0.02) {
        const double turn = (uniform01(rng) < 0.5 ? -1.0 : 1.0) * uniform(rng, 0.45, 0.95);
        stack.push_back({wk.y, wk.x, wk.angle + turn, std::max(1, wk.width - 1),
                         static_cast<int>(remaining * uniform(rng, 0.4, 0.7)), wk.depth + 1});
      }
    }
  }
}

}  // namespace

FundusSample synth_sample(std::uint64_t seed, std::size_t h, std::size_t w) {
  if (h < kMinSynthSide || w < kMinSynthSide)
    throw std::invalid_argument("synth_sample: size must be at least 64x64");
  Rng rng = make_rng(seed, "synth");
  const double disc_y = static_cast<double>(h) * uniform(rng, 0.4, 0.6);
  const double disc_x = static_cast<double>(w) * uniform(rng, 0.08, 0.2);

  std::vector<std::uint8_t> art(h * w, 0), vei(h * w, 0);
  const double off = static_cast<double>(h) * 0.04;
  grow_tree(rng, art, h, w, disc_y - off, disc_x, uniform(rng, -0.3, 0.3));
  grow_tree(rng, vei, h, w, disc_y + off, disc_x, uniform(rng, -0.3, 0.3));

  FundusSample s;
  s.id = "synth_" + std::to_string(seed);
  s.mask = AVMask(h, w, MaskKind::binary);
  s.fov.assign(h * w, 1);
  for (std::size_t i = 0; i < h * w; ++i) {
    s.mask.channel(AVMask::kArtery)[i] = art[i];
    s.mask.channel(AVMask::kVein)[i] = vei[i];
    s.mask.channel(AVMask::kVessel)[i] = (art[i] || vei[i]) ? 1.0f : 0.0f;
  }

  // Paint: dark vignetted background, arteries bright red, veins dark purple.
  constexpr float kBg[3] = {0.55f, 0.33f, 0.18f};
  constexpr float kArt[3] = {0.82f, 0.12f, 0.06f};
  constexpr float kVein[3] = {0.28f, 0.06f, 0.30f};
  Tensor<float> paint(1, 3, h, w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const double ry = (static_cast<double>(y) / static_cast<double>(h) - 0.5) * 2.0;
      const double rx = (static_cast<double>(x) / static_cast<double>(w) - 0.5) * 2.0;
      const float light = static_cast<float>(1.0 - 0.25 * (ry * ry + rx * rx) / 2.0);
      const std::size_t i = y * w + x;
      for (std::size_t c = 0; c < 3; ++c) {
        float v = kBg[c] * light;
        if (art[i] && vei[i]) {
          v = 0.5f * (kArt[c] + kVein[c]);
        } else if (art[i]) {
          v = kArt[c];
        } else if (vei[i]) {
          v = kVein[c];
        }
        paint(0, c, y, x) = v;
      }
    }

  // Separable [1 2 1]/4 blur with clamped borders, then additive noise.
  s.image = Tensor<float>(1, 3, h, w);
  Tensor<float> tmp(1, 3, h, w);
  auto clampi = [](long v, std::size_t n) { return static_cast<std::size_t>(std::clamp<long>(v, 0, static_cast<long>(n) - 1)); };
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        const long xl = static_cast<long>(x);
        tmp(0, c, y, x) = 0.25f * paint(0, c, y, clampi(xl - 1, w)) + 0.5f * paint(0, c, y, x) +
                          0.25f * paint(0, c, y, clampi(xl + 1, w));
      }
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        const long yl = static_cast<long>(y);
        const float v = 0.25f * tmp(0, c, clampi(yl - 1, h), x) + 0.5f * tmp(0, c, y, x) +
                        0.25f * tmp(0, c, clampi(yl + 1, h), x);
        s.image(0, c, y, x) = std::clamp(v + static_cast<float>(0.02 * normal(rng)), 0.0f, 1.0f);
      }
  return s;
}

// ---- padding and patches --------------------------------------------------

namespace {

// Mirror index without edge repetition (..., 2, 1, 0, 1, 2, ...), any distance.
std::size_t reflect_index(long i, std::size_t n) {
  if (n == 1) return 0;
  const long period = 2 * (static_cast<long>(n) - 1);
  long m = i % period;
  if (m < 0) m += period;
  return static_cast<std::size_t>(m < static_cast<long>(n) ? m : period - m);
}

}  // namespace

Tensor<float> reflect_pad(const Tensor<float>& t, std::size_t min_h, std::size_t min_w, PadInfo* info) {
  const std::size_t ph = std::max(t.h(), min_h) - t.h();
  const std::size_t pw = std::max(t.w(), min_w) - t.w();
  const std::size_t top = ph / 2, left = pw / 2;
  if (info) *info = PadInfo{top, left, t.h(), t.w()};
  if (ph == 0 && pw == 0) return t;
  Tensor<float> out(t.n(), t.c(), t.h() + ph, t.w() + pw);
  for (std::size_t s = 0; s < t.n(); ++s)
    for (std::size_t c = 0; c < t.c(); ++c)
      for (std::size_t y = 0; y < out.h(); ++y) {
        const std::size_t sy = reflect_index(static_cast<long>(y) - static_cast<long>(top), t.h());
        for (std::size_t x = 0; x < out.w(); ++x) {
          const std::size_t sx = reflect_index(static_cast<long>(x) - static_cast<long>(left), t.w());
          out(s, c, y, x) = t(s, c, sy, sx);
        }
      }
  return out;
}

FundusSample reflect_pad(const FundusSample& s, std::size_t min_side) {
  FundusSample out;
  out.id = s.id;
  PadInfo info;
  out.image = reflect_pad(s.image, min_side, min_side, &info);
  out.mask.kind = s.mask.kind;
  out.mask.data = reflect_pad(s.mask.data, min_side, min_side);
  out.fov.assign(out.h() * out.w(), 0);
  for (std::size_t y = 0; y < out.h(); ++y)
    for (std::size_t x = 0; x < out.w(); ++x) {
      const std::size_t sy = reflect_index(static_cast<long>(y) - static_cast<long>(info.top), s.h());
      const std::size_t sx = reflect_index(static_cast<long>(x) - static_cast<long>(info.left), s.w());
      out.fov[y * out.w() + x] = s.fov.empty() ? 1 : s.fov[sy * s.w() + sx];
    }
  return out;
}

SamplePatch sample_patch(const FundusSample& sample, Rng& rng, std::size_t patch) {
  Tensor<float> image = reflect_pad(sample.image, patch, patch);
  Tensor<float> mask = reflect_pad(sample.mask.data, patch, patch);
  SamplePatch p;
  p.row = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(image.h() - patch)));
  p.col = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(image.w() - patch)));
  p.image = Tensor<float>(1, 3, patch, patch);
  p.mask = AVMask(patch, patch, sample.mask.kind);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < patch; ++y)
      for (std::size_t x = 0; x < patch; ++x) {
        p.image(0, c, y, x) = image(0, c, p.row + y, p.col + x);
        p.mask.data(0, c, y, x) = mask(0, c, p.row + y, p.col + x);
      }
  return p;
}

}  // namespace trgan::data
