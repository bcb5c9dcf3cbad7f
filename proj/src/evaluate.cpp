#include "trgan/evaluate.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

namespace trgan::eval {

std::string to_string(EvalMode m) { return m == EvalMode::gt_pixels ? "gt_pixels" : "segmented_pixels"; }

EvalMode parse_mode(const std::string& s) {
  if (s == "gt" || s == "gt_pixels") return EvalMode::gt_pixels;
  if (s == "seg" || s == "segmented_pixels") return EvalMode::segmented_pixels;
  throw std::invalid_argument("unknown evaluation mode '" + s + "' (expected gt or seg)");
}

namespace {

void finish(AVMetrics& m) {
  if (m.n_artery == 0) throw MetricsError("av_metrics: no artery pixels to evaluate (class artery)");
  if (m.n_vein == 0) throw MetricsError("av_metrics: no vein pixels to evaluate (class vein)");
  m.sen = static_cast<double>(m.tp_artery) / static_cast<double>(m.n_artery);
  m.spec = static_cast<double>(m.tn_vein) / static_cast<double>(m.n_vein);
  m.acc = static_cast<double>(m.tp_artery + m.tn_vein) / static_cast<double>(m.n_artery + m.n_vein);
}

}  // namespace

AVMetrics av_metrics(const AVMask& pred, const AVMask& gt, EvalMode mode) {
  if (pred.h() != gt.h() || pred.w() != gt.w())
    throw ShapeError("av_metrics: prediction " + pred.data.shape_string() + " vs ground truth " +
                     gt.data.shape_string());
  AVMetrics m;
  m.mode = mode;
  const float* ga = gt.channel(AVMask::kArtery);
  const float* gv = gt.channel(AVMask::kVein);
  const float* gs = gt.channel(AVMask::kVessel);
  const float* pa = pred.channel(AVMask::kArtery);
  const float* pv = pred.channel(AVMask::kVein);
  const float* ps = pred.channel(AVMask::kVessel);
  for (std::size_t i = 0; i < gt.pixels(); ++i) {
    if (gs[i] < 0.5f) continue;
    const bool artery = ga[i] >= 0.5f && gv[i] < 0.5f;
    const bool vein = gv[i] >= 0.5f && ga[i] < 0.5f;
    if (!artery && !vein) continue;  // crossing or uncertain
    const bool seg = ps[i] >= 0.5f;
    if (mode == EvalMode::segmented_pixels && !seg) continue;
    const bool pred_artery = seg && pa[i] >= 0.5f && pv[i] < 0.5f;
    const bool pred_vein = seg && pv[i] >= 0.5f && pa[i] < 0.5f;
    if (artery) {
      ++m.n_artery;
      m.tp_artery += pred_artery ? 1 : 0;
    } else {
      ++m.n_vein;
      m.tn_vein += pred_vein ? 1 : 0;
    }
  }
  finish(m);
  return m;
}

AVMetrics pool(const std::vector<AVMetrics>& parts) {
  if (parts.empty()) throw MetricsError("pool: no metrics");
  AVMetrics m;
  m.mode = parts.front().mode;
  for (const auto& p : parts) {
    m.n_artery += p.n_artery;
    m.n_vein += p.n_vein;
    m.tp_artery += p.tp_artery;
    m.tn_vein += p.tn_vein;
  }
  finish(m);
  return m;
}

namespace {

ClassConnectivity components(const AVMask& mask, std::size_t ch, std::size_t min_size) {
  const std::size_t h = mask.h(), w = mask.w();
  const float* src = mask.channel(ch);
  std::vector<char> seen(h * w, 0);
  std::vector<std::size_t> stack;
  ClassConnectivity out;
  std::size_t largest = 0;
  for (std::size_t start = 0; start < h * w; ++start) {
    if (src[start] < 0.5f || seen[start]) continue;
    std::size_t size = 0;
    seen[start] = 1;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      ++size;
      const long py = static_cast<long>(p / w), px = static_cast<long>(p % w);
      for (long dy = -1; dy <= 1; ++dy)
        for (long dx = -1; dx <= 1; ++dx) {
          const long y = py + dy, x = px + dx;
          if (y < 0 || x < 0 || y >= static_cast<long>(h) || x >= static_cast<long>(w)) continue;
          const std::size_t q = static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x);
          if (src[q] < 0.5f || seen[q]) continue;
          seen[q] = 1;
          stack.push_back(q);
        }
    }
    out.pixels += size;
    largest = std::max(largest, size);
    if (size >= min_size) ++out.component_count;
  }
  if (out.pixels > 0) out.largest_ratio = static_cast<double>(largest) / static_cast<double>(out.pixels);
  return out;
}

}  // namespace

ConnectivityReport connectivity_report(const AVMask& mask, std::size_t min_size) {
  return ConnectivityReport{components(mask, AVMask::kArtery, min_size), components(mask, AVMask::kVein, min_size)};
}

namespace {

const char* kHeader =
    "name,mode,acc,sen,spec,n_artery,n_vein,tp_artery,tn_vein,artery_components,artery_largest_ratio,"
    "vein_components,vein_largest_ratio";

std::string ratio_text(const std::optional<double>& r) {
  if (!r) return "";
  std::ostringstream os;
  os << std::setprecision(17) << *r;
  return os.str();
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

Report emit_tables(const std::vector<RunRow>& runs) {
  if (runs.empty()) throw std::invalid_argument("emit_tables: no runs");
  std::ostringstream csv, table;
  csv << kHeader << '\n' << std::setprecision(17);
  std::size_t name_w = 13;
  for (const auto& r : runs) {
    if (r.name.find(',') != std::string::npos) throw std::invalid_argument("emit_tables: run names may not contain ','");
    name_w = std::max(name_w, r.name.size());
  }
  table << std::left << std::setw(static_cast<int>(name_w)) << "Configuration" << std::right << std::setw(9)
        << "Acc(%)" << std::setw(9) << "Sen(%)" << std::setw(9) << "Spec(%)" << std::setw(9) << "A-comp"
        << std::setw(9) << "V-comp" << '\n';
  table << std::string(name_w + 45, '-') << '\n' << std::fixed << std::setprecision(2);
  for (const auto& r : runs) {
    const auto& m = r.metrics;
    csv << r.name << ',' << to_string(m.mode) << ',' << m.acc << ',' << m.sen << ',' << m.spec << ',' << m.n_artery
        << ',' << m.n_vein << ',' << m.tp_artery << ',' << m.tn_vein << ',' << r.connectivity.artery.component_count
        << ',' << ratio_text(r.connectivity.artery.largest_ratio) << ',' << r.connectivity.vein.component_count << ','
        << ratio_text(r.connectivity.vein.largest_ratio) << '\n';
    table << std::left << std::setw(static_cast<int>(name_w)) << r.name << std::right << std::setw(9) << 100 * m.acc
          << std::setw(9) << 100 * m.sen << std::setw(9) << 100 * m.spec << std::setw(9)
          << r.connectivity.artery.component_count << std::setw(9) << r.connectivity.vein.component_count << '\n';
  }
  return Report{csv.str(), table.str()};
}

std::vector<RunRow> parse_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line != kHeader) throw std::invalid_argument("parse_csv: unexpected header");
  std::vector<RunRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 13) throw std::invalid_argument("parse_csv: expected 13 fields in '" + line + "'");
    RunRow r;
    r.name = f[0];
    r.metrics.mode = parse_mode(f[1]);
    r.metrics.acc = std::stod(f[2]);
    r.metrics.sen = std::stod(f[3]);
    r.metrics.spec = std::stod(f[4]);
    r.metrics.n_artery = std::stoull(f[5]);
    r.metrics.n_vein = std::stoull(f[6]);
    r.metrics.tp_artery = std::stoull(f[7]);
    r.metrics.tn_vein = std::stoull(f[8]);
    r.connectivity.artery.component_count = std::stoull(f[9]);
    if (!f[10].empty()) r.connectivity.artery.largest_ratio = std::stod(f[10]);
    r.connectivity.vein.component_count = std::stoull(f[11]);
    if (!f[12].empty()) r.connectivity.vein.largest_ratio = std::stod(f[12]);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace trgan::eval
