#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "birdseg/io/png_io.hpp"
#include "birdseg/pipeline.hpp"
#include "common.hpp"

namespace birdseg::cli {

namespace {

std::vector<std::string> ids_with_extension(const std::filesystem::path& dir,
                                            const std::string& ext) {
  std::vector<std::string> ids;
  if (!std::filesystem::is_directory(dir)) return ids;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ext) {
      ids.push_back(entry.path().stem().string());
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::map<std::string, double> read_scores_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  std::map<std::string, double> scores;
  std::string line;
  std::getline(f, line);
  if (line != "id,score") throw std::runtime_error("unexpected scores header: " + line);
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::runtime_error("malformed scores row: " + line);
    scores[line.substr(0, comma)] = std::stod(line.substr(comma + 1));
  }
  return scores;
}

}  // namespace

int run_eval(const EvalArgs& args) {
  namespace fs = std::filesystem;
  if (args.kind != "boxes" && args.kind != "masks" && args.kind != "labels") {
    std::fprintf(stderr, "unknown kind: %s (expected boxes, masks or labels)\n", args.kind.c_str());
    return kExitUsage;
  }

  const fs::path pred_dir(args.pred), truth_dir(args.truth);
  const fs::path out_dir = args.out.empty() ? pred_dir : fs::path(args.out);
  fs::create_directories(out_dir);

  metrics::EvalReport report;
  std::vector<std::string> unmatched;

  if (args.kind == "boxes" || args.kind == "masks") {
    const bool boxes = args.kind == "boxes";
    const std::string sub = boxes ? "boxes" : "masks";
    const std::string ext = boxes ? ".json" : ".png";
    const auto ids = ids_with_extension(truth_dir / sub, ext);
    if (ids.empty()) {
      std::fprintf(stderr, "no truth %s under %s\n", sub.c_str(), (truth_dir / sub).string().c_str());
      return kExitRuntime;
    }
    double total = 0.0;
    std::size_t counted = 0;
    for (const std::string& id : ids) {
      const fs::path pred_path = pred_dir / sub / (id + ext);
      if (!fs::exists(pred_path)) {
        unmatched.push_back(id);
        continue;
      }
      double value;
      if (boxes) {
        value = metrics::mean_iou(read_boxes_json(pred_path),
                                  read_boxes_json(truth_dir / sub / (id + ext)));
        report.per_item.push_back({id, {{"mean_iou", value}}});
      } else {
        value = metrics::mask_dice(read_mask_png(pred_path.string()),
                                   read_mask_png((truth_dir / sub / (id + ext)).string()));
        report.per_item.push_back({id, {{"dice", value}}});
      }
      total += value;
      ++counted;
    }
    if (counted > 0) {
      if (boxes) report.mean_iou = total / static_cast<double>(counted);
      else report.mean_dice = total / static_cast<double>(counted);
    }
  } else {
    const auto rows = pipeline::read_manifest(truth_dir / "manifest.csv");
    const auto scores = read_scores_csv(pred_dir / "scores.csv");
    std::vector<int> labels, predictions;
    std::vector<double> score_list;
    for (const auto& row : rows) {
      auto it = scores.find(row.id);
      if (it == scores.end()) {
        unmatched.push_back(row.id);
        continue;
      }
      labels.push_back(row.label);
      score_list.push_back(it->second);
      predictions.push_back(it->second >= 0.5 ? 1 : 0);
      report.per_item.push_back(
          {row.id, {{"label", static_cast<double>(row.label)}, {"score", it->second}}});
    }
    if (!labels.empty()) {
      report.accuracy = metrics::accuracy(labels, predictions);
      bool both = std::count(labels.begin(), labels.end(), 1) > 0 &&
                  std::count(labels.begin(), labels.end(), 0) > 0;
      if (both) report.auc = metrics::roc_auc(labels, score_list);
    }
  }

  write_text(out_dir / "eval_report.json", report.to_json());
  write_text(out_dir / "eval_report.csv", report.to_csv());

  if (report.mean_iou) std::printf("mean_iou %.6f\n", *report.mean_iou);
  if (report.mean_dice) std::printf("mean_dice %.6f\n", *report.mean_dice);
  if (report.accuracy) std::printf("accuracy %.6f\n", *report.accuracy);
  if (report.auc) std::printf("auc %.6f\n", *report.auc);

  if (!unmatched.empty()) {
    std::fprintf(stderr, "unmatched ids (%zu):", unmatched.size());
    for (const std::string& id : unmatched) std::fprintf(stderr, " %s", id.c_str());
    std::fprintf(stderr, "\n");
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace birdseg::cli
