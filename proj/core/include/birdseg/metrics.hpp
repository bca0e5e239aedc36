#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "birdseg/matrix.hpp"

namespace birdseg::metrics {

/// Axis-aligned time-frequency rectangle in bin coordinates, indices
/// inclusive on both ends: t spans frames (columns), f spans bins (rows).
/// Pixel area is (t1-t0+1)*(f1-f0+1).
struct BBox {
  int t0 = 0;
  int t1 = 0;
  int f0 = 0;
  int f1 = 0;

  long long area() const {
    return static_cast<long long>(t1 - t0 + 1) * static_cast<long long>(f1 - f0 + 1);
  }
  bool valid() const { return t0 >= 0 && f0 >= 0 && t0 <= t1 && f0 <= f1; }

  friend bool operator==(const BBox&, const BBox&) = default;
};

/// Mirrors the f-axis of a box across a grid of n_rows rows. Converts between
/// spectrogram bin convention (row 0 = lowest frequency) and image convention
/// (row 0 = top = highest frequency). Self-inverse.
BBox flip_rows(const BBox& box, std::size_t n_rows);

/// Intersection over union with inclusive-index pixel areas; 0 when disjoint.
double iou(const BBox& a, const BBox& b);

/// 2|A∩B| / (|A|+|B|) over pixel sets; 1.0 when both masks are empty.
double mask_dice(const BinaryMask& a, const BinaryMask& b);

/// Fraction of exact label matches.
double accuracy(const std::vector<int>& labels, const std::vector<int>& predictions);

/// P(score_pos > score_neg) + 0.5 P(tie) over all positive/negative pairs,
/// computed via rank statistics. Requires both classes present.
double roc_auc(const std::vector<int>& labels, const std::vector<double>& scores);

/// Greedy one-to-one matching by descending IOU; unmatched boxes contribute 0;
/// mean over max(|predicted|, |reference|). Both lists empty -> 1.0.
double mean_iou(const std::vector<BBox>& predicted, const std::vector<BBox>& reference);

struct EvalReport {
  std::optional<double> accuracy;
  std::optional<double> auc;
  std::optional<double> mean_iou;
  std::optional<double> mean_dice;
  // One entry per evaluated item: id plus named metric values.
  std::vector<std::pair<std::string, std::map<std::string, double>>> per_item;

  std::string to_json() const;
  std::string to_csv() const;
};

}  // namespace birdseg::metrics
