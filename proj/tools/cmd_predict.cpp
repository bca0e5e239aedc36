#include <cstdio>
#include <filesystem>
#include <sstream>

#include "birdseg/attention.hpp"
#include "birdseg/io/png_io.hpp"
#include "birdseg/io/wav.hpp"
#include "birdseg/pipeline.hpp"
#include "common.hpp"

namespace birdseg::cli {

namespace {

Matrix renormalized(Matrix m) {
  const double peak = m.max_value();
  if (peak > 0.0) {
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] /= peak;
  }
  return m;
}

}  // namespace

int run_predict(const PredictArgs& args) {
  namespace fs = std::filesystem;
  if (args.mode != "mask" && args.mode != "cam" && args.mode != "saliency") {
    std::fprintf(stderr, "unknown mode: %s (expected mask, cam or saliency)\n", args.mode.c_str());
    return kExitUsage;
  }

  const nnet::Network net = nnet::load_checkpoint(args.model);
  if (args.mode == "mask" && net.topology != nnet::Topology::unet) {
    std::fprintf(stderr, "mask mode needs a unet checkpoint, got a classifier\n");
    return kExitRuntime;
  }
  if (args.mode != "mask" && net.topology != nnet::Topology::classifier) {
    std::fprintf(stderr, "%s mode needs a classifier checkpoint, got a unet\n", args.mode.c_str());
    return kExitRuntime;
  }

  const auto wavs = list_wavs(args.input);
  if (wavs.empty()) {
    std::fprintf(stderr, "no wav files under %s\n", args.input.c_str());
    return kExitRuntime;
  }
  const bool mask_mode = args.mode == "mask";
  fs::create_directories(fs::path(args.out) / (mask_mode ? "masks" : "heatmaps"));
  if (!mask_mode) fs::create_directories(fs::path(args.out) / "boxes");
  if (!mask_mode && args.yolo) fs::create_directories(fs::path(args.out) / "labels");

  const dsp::StftParams stft = stft_params(args.stft, dsp::Scale::log_db);
  const std::size_t hw = net.input_shape[1];

  std::vector<std::string> summaries(wavs.size());
  std::vector<std::string> score_rows(wavs.size());
  auto errors = run_parallel(wavs.size(), args.jobs, [&](std::size_t i) {
    const std::string id = id_of(wavs[i]);
    const dsp::Spectrogram spec = dsp::stft_spectrogram(load_wav(wavs[i].string()), stft);

    if (mask_mode) {
      const BinaryMask mask = nnet::predict_mask(net, spec, args.threshold);
      write_mask_png((fs::path(args.out) / "masks" / (id + ".png")).string(), flip_rows(mask));
      const double density =
          static_cast<double>(mask.count_true()) / static_cast<double>(mask.size());
      char line[128];
      std::snprintf(line, sizeof(line), "%s density %.4f", id.c_str(), density);
      summaries[i] = line;
      return;
    }

    const nnet::Tensor input = nnet::net_input_from_spectrogram(spec, hw);
    const double score = nnet::forward(net, input)[0];
    const attention::Heatmap hm = args.mode == "cam" ? attention::grad_cam(net, input)
                                                     : attention::guided_backprop(net, input);
    // Native-resolution heatmap, re-normalized after resampling.
    const Matrix native = renormalized(resize_bilinear(hm, spec.n_bins(), spec.n_frames()));
    write_gray_png((fs::path(args.out) / "heatmaps" / (id + ".png")).string(), flip_rows(native));

    const auto boxes = attention::heatmap_to_bboxes(native, args.threshold, args.min_area);
    write_boxes_json(fs::path(args.out) / "boxes" / (id + ".json"), boxes);
    if (args.yolo) {
      std::vector<metrics::BBox> image_boxes;
      for (const metrics::BBox& b : boxes) image_boxes.push_back(metrics::flip_rows(b, spec.n_bins()));
      write_text(fs::path(args.out) / "labels" / (id + ".txt"),
                 attention::export_yolo_labels(image_boxes, spec.n_frames(), spec.n_bins()));
    }

    char line[160];
    std::snprintf(line, sizeof(line), "%s score %.6f boxes %zu", id.c_str(), score, boxes.size());
    summaries[i] = line;
    std::snprintf(line, sizeof(line), "%s,%.9f\n", id.c_str(), score);
    score_rows[i] = line;
  });

  bool failed = false;
  for (std::size_t i = 0; i < wavs.size(); ++i) {
    if (errors[i].empty()) {
      std::printf("%s\n", summaries[i].c_str());
    } else {
      std::fprintf(stderr, "%s: %s\n", id_of(wavs[i]).c_str(), errors[i].c_str());
      failed = true;
    }
  }

  if (!mask_mode) {
    std::string csv = "id,score\n";
    for (const std::string& row : score_rows) csv += row;
    write_text(fs::path(args.out) / "scores.csv", csv);
  }
  return failed ? kExitRuntime : kExitOk;
}

}  // namespace birdseg::cli
