#ifndef PANN_EVAL_HPP
#define PANN_EVAL_HPP

// Pixel-wise precision-recall evaluation and run aggregation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "pann/changedet.hpp"
#include "pann/common.hpp"
#include "pann/scene.hpp"

namespace pann {

/// Thrown when a label set has no positives or no negatives, so a
/// precision-recall curve is undefined.
class DegenerateLabelsError : public Error {
 public:
  using Error::Error;
};

struct PrPoint {
  double threshold = 0.0;
  double recall = 0.0;
  double precision = 0.0;
};

/// One point per distinct score, thresholds descending.
inline std::vector<PrPoint> precision_recall_curve(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw ConfigError("precision_recall_curve: scores and labels differ in length");
  std::size_t positives = 0;
  for (auto l : labels) {
    if (l > 1) throw ConfigError("precision_recall_curve: labels must be 0 or 1");
    positives += l;
  }
  if (positives == 0) throw DegenerateLabelsError("precision_recall_curve: no positive labels");
  if (positives == labels.size()) throw DegenerateLabelsError("precision_recall_curve: no negative labels");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::vector<PrPoint> curve;
  std::size_t tp = 0, seen = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      tp += labels[order[i]];
      ++seen;
      ++i;
    }
    curve.push_back({s, static_cast<double>(tp) / static_cast<double>(positives),
                     static_cast<double>(tp) / static_cast<double>(seen)});
  }
  return curve;
}

/// Average precision: sum of (R_n - R_{n-1}) * P_n over the curve.
inline double auprc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  const auto curve = precision_recall_curve(scores, labels);
  double ap = 0.0, prev_recall = 0.0;
  for (const auto& p : curve) {
    ap += (p.recall - prev_recall) * p.precision;
    prev_recall = p.recall;
  }
  return ap;
}

/// Pooled (score, label) pairs of one disaster class.
struct PixelPool {
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;

  /// Adds every valid, non-cloud pixel of a change map.
  void add(const ChangeMap& map, std::span<const std::uint8_t> mask) {
    if (mask.size() != map.scores.size()) throw ConfigError("pixel pool: mask dims do not match change map");
    for (std::size_t p = 0; p < mask.size(); ++p) {
      if (!map.valid[p] || mask[p] == MaskLabel::cloud) continue;
      scores.push_back(map.scores[p]);
      labels.push_back(mask[p] == MaskLabel::affected ? 1 : 0);
    }
  }

  std::size_t size() const { return scores.size(); }
  double auprc() const { return pann::auprc(scores, labels); }
};

struct RunSummary {
  double mean = 0.0;
  double sem = 0.0;
};

/// Mean and standard error of the mean (sample standard deviation / sqrt n).
inline RunSummary aggregate_runs(std::span<const double> values) {
  if (values.size() < 2) throw ConfigError("aggregate_runs: need at least two runs");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

}  // namespace pann

#endif  // PANN_EVAL_HPP
