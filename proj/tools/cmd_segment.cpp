#include <cstdio>
#include <filesystem>

#include "birdseg/attention.hpp"
#include "birdseg/io/png_io.hpp"
#include "birdseg/io/rle.hpp"
#include "birdseg/io/wav.hpp"
#include "common.hpp"

namespace birdseg::cli {

int run_segment(const SegmentArgs& args) {
  namespace fs = std::filesystem;
  const auto wavs = list_wavs(args.input);
  if (wavs.empty()) {
    std::fprintf(stderr, "no wav files under %s\n", args.input.c_str());
    return kExitRuntime;
  }
  fs::create_directories(fs::path(args.out) / "masks");
  fs::create_directories(fs::path(args.out) / "boxes");
  if (args.yolo) fs::create_directories(fs::path(args.out) / "labels");
  if (args.rle) fs::create_directories(fs::path(args.out) / "rle");

  const dsp::StftParams params = stft_params(args.stft, dsp::Scale::linear);

  std::vector<std::string> summaries(wavs.size());
  auto errors = run_parallel(wavs.size(), args.jobs, [&](std::size_t i) {
    const std::string id = id_of(wavs[i]);
    const dsp::Spectrogram spec = dsp::stft_spectrogram(load_wav(wavs[i].string()), params);
    auto [mask, blobs] = blobseg::segment(spec, args.seg);

    write_mask_png((fs::path(args.out) / "masks" / (id + ".png")).string(), flip_rows(mask));
    if (args.rle) {
      write_mask_rle((fs::path(args.out) / "rle" / (id + ".rle")).string(), flip_rows(mask));
    }

    std::vector<metrics::BBox> boxes;
    for (const auto& blob : blobs) boxes.push_back(blob.bbox);
    write_boxes_json(fs::path(args.out) / "boxes" / (id + ".json"), boxes);

    if (args.yolo) {
      // YOLO labels use image rows: flip the frequency axis.
      std::vector<metrics::BBox> image_boxes;
      for (const metrics::BBox& b : boxes) image_boxes.push_back(metrics::flip_rows(b, spec.n_bins()));
      write_text(fs::path(args.out) / "labels" / (id + ".txt"),
                 attention::export_yolo_labels(image_boxes, spec.n_frames(), spec.n_bins()));
    }

    summaries[i] = id + " " + std::to_string(blobs.size());
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
  return failed ? kExitRuntime : kExitOk;
}

}  // namespace birdseg::cli
