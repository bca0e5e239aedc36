#include "birdseg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace birdseg::metrics {

BBox flip_rows(const BBox& box, std::size_t n_rows) {
  if (!box.valid() || box.f1 >= static_cast<int>(n_rows))
    throw std::invalid_argument("flip_rows: box outside grid");
  BBox out = box;
  out.f0 = static_cast<int>(n_rows) - 1 - box.f1;
  out.f1 = static_cast<int>(n_rows) - 1 - box.f0;
  return out;
}

double iou(const BBox& a, const BBox& b) {
  if (!a.valid() || !b.valid()) throw std::invalid_argument("iou: invalid box");
  const int it0 = std::max(a.t0, b.t0);
  const int it1 = std::min(a.t1, b.t1);
  const int if0 = std::max(a.f0, b.f0);
  const int if1 = std::min(a.f1, b.f1);
  if (it0 > it1 || if0 > if1) return 0.0;
  const long long inter = static_cast<long long>(it1 - it0 + 1) * static_cast<long long>(if1 - if0 + 1);
  const long long uni = a.area() + b.area() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double mask_dice(const BinaryMask& a, const BinaryMask& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("mask_dice: shape mismatch");
  std::size_t inter = 0, na = 0, nb = 0;
  const std::uint8_t* pa = a.data();
  const std::uint8_t* pb = b.data();
  for (std::size_t i = 0; i < a.size(); ++i) {
    na += pa[i];
    nb += pb[i];
    inter += pa[i] & pb[i];
  }
  if (na + nb == 0) return 1.0;  // both empty: identity limit
  return 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
}

double accuracy(const std::vector<int>& labels, const std::vector<int>& predictions) {
  if (labels.empty()) throw std::invalid_argument("accuracy: empty input");
  if (labels.size() != predictions.size()) throw std::invalid_argument("accuracy: length mismatch");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += labels[i] == predictions[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double roc_auc(const std::vector<int>& labels, const std::vector<double>& scores) {
  if (labels.size() != scores.size()) throw std::invalid_argument("roc_auc: length mismatch");
  std::size_t n_pos = 0, n_neg = 0;
  for (int l : labels) (l ? n_pos : n_neg)++;
  if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("roc_auc: both classes must be present");

  std::vector<std::size_t> idx(labels.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Mann-Whitney: sum of average ranks over positives. Averaged tie ranks are
  // multiples of 0.5, so the sum is exact in doubles.
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
    for (std::size_t k = i; k < j; ++k) {
      if (labels[idx[k]]) rank_sum_pos += avg_rank;
    }
    i = j;
  }
  const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double mean_iou(const std::vector<BBox>& predicted, const std::vector<BBox>& reference) {
  if (predicted.empty() && reference.empty()) return 1.0;
  if (predicted.empty() || reference.empty()) return 0.0;

  struct Pair {
    double v;
    std::size_t p, r;
  };
  std::vector<Pair> pairs;
  pairs.reserve(predicted.size() * reference.size());
  for (std::size_t p = 0; p < predicted.size(); ++p) {
    for (std::size_t r = 0; r < reference.size(); ++r) {
      const double v = iou(predicted[p], reference[r]);
      if (v > 0.0) pairs.push_back({v, p, r});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.v != b.v) return a.v > b.v;
    if (a.p != b.p) return a.p < b.p;  // deterministic tie-break
    return a.r < b.r;
  });

  std::vector<bool> p_used(predicted.size(), false), r_used(reference.size(), false);
  double total = 0.0;
  for (const Pair& pr : pairs) {
    if (p_used[pr.p] || r_used[pr.r]) continue;
    p_used[pr.p] = r_used[pr.r] = true;
    total += pr.v;
  }
  return total / static_cast<double>(std::max(predicted.size(), reference.size()));
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  if (accuracy) j["accuracy"] = *accuracy;
  if (auc) j["auc"] = *auc;
  if (mean_iou) j["mean_iou"] = *mean_iou;
  if (mean_dice) j["mean_dice"] = *mean_dice;
  j["per_item"] = nlohmann::json::array();
  for (const auto& [id, values] : per_item) {
    nlohmann::json item;
    item["id"] = id;
    for (const auto& [name, v] : values) item[name] = v;
    j["per_item"].push_back(item);
  }
  return j.dump(2) + "\n";
}

std::string EvalReport::to_csv() const {
  std::set<std::string> names;
  for (const auto& [id, values] : per_item) {
    for (const auto& [name, v] : values) names.insert(name);
  }
  std::ostringstream out;
  out << "id";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  out.precision(12);
  for (const auto& [id, values] : per_item) {
    out << id;
    for (const auto& n : names) {
      out << ',';
      auto it = values.find(n);
      if (it != values.end()) out << it->second;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace birdseg::metrics
