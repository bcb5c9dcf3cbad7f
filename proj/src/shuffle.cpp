#include "trgan/shuffle.hpp"

#include <algorithm>
#include <cmath>

#include "trgan/rng.hpp"

namespace trgan::shuffle {

void ShuffleConfig::validate() const {
  if (!(budget_low > 0.0 && budget_low < budget_high && budget_high < 1.0))
    throw std::invalid_argument("shuffle: need 0 < budget_low < budget_high < 1");
  if (window_min <= 0 || window_max < window_min)
    throw std::invalid_argument("shuffle: window sides must be positive and ordered");
  if (shift < 0) throw std::invalid_argument("shuffle: shift range must be non-negative");
  if (max_ops < 1) throw std::invalid_argument("shuffle: max_ops must be at least 1");
}

std::string to_string(OpKind k) {
  switch (k) {
    case OpKind::remove: return "remove";
    case OpKind::shift: return "shift";
    case OpKind::swap: return "swap";
  }
  return "?";
}

OpKind parse_op_kind(const std::string& s) {
  if (s == "remove") return OpKind::remove;
  if (s == "shift") return OpKind::shift;
  if (s == "swap") return OpKind::swap;
  throw std::invalid_argument("unknown shuffle op: " + s);
}

Window centered_window(long cy, long cx, long side, std::size_t h, std::size_t w) {
  const long r0 = std::clamp<long>(cy - side / 2, 0, static_cast<long>(h));
  const long c0 = std::clamp<long>(cx - side / 2, 0, static_cast<long>(w));
  const long r1 = std::clamp<long>(cy - side / 2 + side, 0, static_cast<long>(h));
  const long c1 = std::clamp<long>(cx - side / 2 + side, 0, static_cast<long>(w));
  return Window{static_cast<std::size_t>(r0), static_cast<std::size_t>(c0), static_cast<std::size_t>(r1 - r0),
                static_cast<std::size_t>(c1 - c0)};
}

namespace {

void check_window(const AVMask& m, const Window& win) {
  if (win.row + win.h > m.h() || win.col + win.w > m.w())
    throw std::out_of_range("shuffle window exceeds mask bounds");
}

}  // namespace

AVMask op_remove(const AVMask& m, const Window& win) {
  check_window(m, win);
  AVMask out = m;
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = win.row; y < win.row + win.h; ++y)
      for (std::size_t x = win.col; x < win.col + win.w; ++x) out.at(c, y, x) = 0.0f;
  return out;
}

AVMask op_shift(const AVMask& m, const Window& win, int dy, int dx) {
  check_window(m, win);
  AVMask out = op_remove(m, win);
  for (std::size_t y = win.row; y < win.row + win.h; ++y)
    for (std::size_t x = win.col; x < win.col + win.w; ++x) {
      const long ty = static_cast<long>(y) + dy;
      const long tx = static_cast<long>(x) + dx;
      if (ty < 0 || tx < 0 || ty >= static_cast<long>(m.h()) || tx >= static_cast<long>(m.w())) continue;
      for (std::size_t c = 0; c < 3; ++c)
        out.at(c, static_cast<std::size_t>(ty), static_cast<std::size_t>(tx)) = m.at(c, y, x);
    }
  return out;
}

AVMask op_swap(const AVMask& m, const Window& win) {
  check_window(m, win);
  AVMask out = m;
  for (std::size_t y = win.row; y < win.row + win.h; ++y)
    for (std::size_t x = win.col; x < win.col + win.w; ++x)
      std::swap(out.artery(y, x), out.vein(y, x));
  return out;
}

AVMask apply_op(const AVMask& m, const ShuffleOp& op) {
  switch (op.kind) {
    case OpKind::remove: return op_remove(m, op.window);
    case OpKind::shift: return op_shift(m, op.window, op.dy, op.dx);
    case OpKind::swap: return op_swap(m, op.window);
  }
  return m;
}

AVMask replay(const AVMask& original, const ShuffleReport& report) {
  AVMask m = original;
  for (const auto& op : report.ops) m = apply_op(m, op);
  return m;
}

double shuffle_fraction(const AVMask& original, const AVMask& perturbed) {
  require_same_shape(original.data, perturbed.data, "shuffle_fraction");
  std::size_t total = 0, changed = 0;
  for (std::size_t y = 0; y < original.h(); ++y)
    for (std::size_t x = 0; x < original.w(); ++x) {
      if (original.vessel(y, x) != 1.0f) continue;
      ++total;
      if (original.artery(y, x) != perturbed.artery(y, x) || original.vein(y, x) != perturbed.vein(y, x) ||
          perturbed.vessel(y, x) != 1.0f)
        ++changed;
    }
  if (total == 0) throw std::domain_error("shuffle_fraction: original mask has no vessel pixels");
  return static_cast<double>(changed) / static_cast<double>(total);
}

std::pair<AVMask, ShuffleReport> shuffle_mask(const AVMask& mask, const ShuffleConfig& cfg) {
  cfg.validate();
  if (mask.kind != MaskKind::binary) throw PreconditionError("shuffle_mask: mask must be binary");
  if (auto err = check_invariants(mask)) throw PreconditionError("shuffle_mask: " + *err);
  if (mask.vessel_count() < kMinVesselPixels)
    throw PreconditionError("shuffle_mask: fewer than 50 vessel pixels");

  Rng rng = make_rng(cfg.seed, "shuffle");
  const double scale = static_cast<double>(std::min(mask.h(), mask.w())) / 256.0;
  AVMask cur = mask;
  ShuffleReport report;
  double fraction = 0.0;
  std::vector<std::size_t> vessel_px;

  auto in_budget = [&](double f) { return f >= cfg.budget_low && f <= cfg.budget_high; };
  while (!in_budget(fraction) && report.attempts < cfg.max_ops) {
    // Window centres are vessel pixels of the current mask, so every window holds one.
    vessel_px.clear();
    const AVMask& src = cur.vessel_count() > 0 ? cur : mask;
    for (std::size_t i = 0; i < src.pixels(); ++i)
      if (src.channel(AVMask::kVessel)[i] == 1.0f) vessel_px.push_back(i);
    const std::size_t centre = vessel_px[static_cast<std::size_t>(
        uniform_int(rng, 0, static_cast<std::int64_t>(vessel_px.size()) - 1))];
    const long cy = static_cast<long>(centre / mask.w());
    const long cx = static_cast<long>(centre % mask.w());

    ShuffleOp op;
    op.kind = static_cast<OpKind>(uniform_int(rng, 0, 2));
    long side = std::max<long>(2, std::lround(static_cast<double>(uniform_int(rng, cfg.window_min, cfg.window_max)) * scale));
    if (op.kind == OpKind::shift) {
      op.dy = static_cast<int>(uniform_int(rng, -cfg.shift, cfg.shift));
      op.dx = static_cast<int>(uniform_int(rng, -cfg.shift, cfg.shift));
    }
    while (side >= 1 && report.attempts < cfg.max_ops) {
      ++report.attempts;
      op.window = centered_window(cy, cx, side, mask.h(), mask.w());
      AVMask candidate = apply_op(cur, op);
      const double f = shuffle_fraction(mask, candidate);
      if (f > cfg.budget_high) {
        side /= 2;  // overshoot: revert and retry smaller
        continue;
      }
      cur = std::move(candidate);
      fraction = f;
      report.ops.push_back(op);
      break;
    }
  }
  if (!in_budget(fraction)) {
    throw ShuffleError("shuffle_mask: budget not reached within " + std::to_string(cfg.max_ops) +
                       " attempts (fraction " + std::to_string(fraction) + ")");
  }
  report.final_fraction = fraction;
  return {std::move(cur), std::move(report)};
}

nlohmann::json to_json(const ShuffleReport& r) {
  nlohmann::json ops = nlohmann::json::array();
  for (const auto& op : r.ops) {
    nlohmann::json o{{"kind", to_string(op.kind)},
                     {"window", {op.window.row, op.window.col, op.window.h, op.window.w}}};
    if (op.kind == OpKind::shift) o["offset"] = {op.dy, op.dx};
    ops.push_back(std::move(o));
  }
  return {{"ops", ops}, {"final_fraction", r.final_fraction}, {"attempts", r.attempts}};
}

ShuffleReport report_from_json(const nlohmann::json& j) {
  ShuffleReport r;
  r.final_fraction = j.at("final_fraction").get<double>();
  r.attempts = j.at("attempts").get<int>();
  for (const auto& o : j.at("ops")) {
    ShuffleOp op;
    op.kind = parse_op_kind(o.at("kind").get<std::string>());
    const auto& w = o.at("window");
    op.window = Window{w.at(0).get<std::size_t>(), w.at(1).get<std::size_t>(), w.at(2).get<std::size_t>(),
                       w.at(3).get<std::size_t>()};
    if (o.contains("offset")) {
      op.dy = o["offset"].at(0).get<int>();
      op.dx = o["offset"].at(1).get<int>();
    }
    r.ops.push_back(op);
  }
  return r;
}

}  // namespace trgan::shuffle
