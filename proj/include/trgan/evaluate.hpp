#pragma once
// A/V classification metrics (arteries positive, veins negative),
// connected-component statistics and report tables.

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "trgan/avmask.hpp"

namespace trgan::eval {

class MetricsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// gt_pixels: every labelled ground-truth vessel pixel; a missed vessel counts
/// as misclassified. segmented_pixels: only those the prediction also marks
/// as vessel.
enum class EvalMode { gt_pixels, segmented_pixels };
std::string to_string(EvalMode m);
/// Accepts "gt", "gt_pixels", "seg", "segmented_pixels".
EvalMode parse_mode(const std::string& s);

struct AVMetrics {
  double acc = 0.0;
  double sen = 0.0;   // correctly labelled arteries / arteries
  double spec = 0.0;  // correctly labelled veins / veins
  std::size_t n_artery = 0;
  std::size_t n_vein = 0;
  std::size_t tp_artery = 0;
  std::size_t tn_vein = 0;
  EvalMode mode = EvalMode::gt_pixels;
};

/// Scores over ground-truth pixels labelled artery-only or vein-only
/// (crossings and uncertain pixels are excluded). A predicted pixel counts as
/// artery (vein) only if it is vessel, artery (vein) and not vein (artery).
AVMetrics av_metrics(const AVMask& pred, const AVMask& gt, EvalMode mode);

/// Sums counts of several images and recomputes the fractions.
AVMetrics pool(const std::vector<AVMetrics>& parts);

struct ClassConnectivity {
  std::size_t component_count = 0;        // 8-connected components with >= min_size pixels
  std::optional<double> largest_ratio;    // largest component / all class pixels; empty class: none
  std::size_t pixels = 0;
};

struct ConnectivityReport {
  ClassConnectivity artery;
  ClassConnectivity vein;
};

constexpr std::size_t kMinComponentSize = 10;

ConnectivityReport connectivity_report(const AVMask& mask, std::size_t min_size = kMinComponentSize);

struct RunRow {
  std::string name;
  AVMetrics metrics;
  ConnectivityReport connectivity;
};

struct Report {
  std::string csv;
  std::string table;
};

/// One row per run: Acc/Sen/Spec, class counts and connectivity columns.
Report emit_tables(const std::vector<RunRow>& runs);
std::vector<RunRow> parse_csv(const std::string& csv);

}  // namespace trgan::eval
