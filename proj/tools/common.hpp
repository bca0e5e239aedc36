#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "birdseg/blobseg.hpp"
#include "birdseg/dsp.hpp"
#include "birdseg/metrics.hpp"
#include "birdseg/nnet.hpp"

namespace birdseg::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

struct StftOptions {
  std::size_t window = 512;
  std::size_t hop = 706;
};

dsp::StftParams stft_params(const StftOptions& opts, dsp::Scale scale);

/// WAV files under a directory (sorted by filename), or the file itself.
std::vector<std::filesystem::path> list_wavs(const std::filesystem::path& input);

inline std::string id_of(const std::filesystem::path& wav) { return wav.stem().string(); }

/// Runs fn(i) for i in [0, n) on up to `jobs` worker threads. Returns one
/// error string per item (empty on success). Items are independent; output
/// files are distinct per item, so scheduling does not affect the artifacts.
std::vector<std::string> run_parallel(std::size_t n, std::size_t jobs,
                                      const std::function<void(std::size_t)>& fn);

void write_boxes_json(const std::filesystem::path& path, const std::vector<metrics::BBox>& boxes);
std::vector<metrics::BBox> read_boxes_json(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);

struct SynthArgs {
  std::size_t n = 0;
  double pos_fraction = 0.5;
  std::uint64_t seed = 0;
  double snr_db = 20.0;
  std::string out;
};
int run_synth(const SynthArgs& args);

struct SpectrogramArgs {
  std::string input;
  std::string out;
  StftOptions stft;
  std::string scale = "log";
  bool mean_subtract = false;  // per-row mean removal variant
  std::size_t mel = 0;         // if > 0, mel-reconstruct through this many filters
  bool png = false;
  std::size_t jobs = 1;
};
int run_spectrogram(const SpectrogramArgs& args);

struct SegmentArgs {
  std::string input;
  std::string out;
  StftOptions stft;
  blobseg::SegParams seg;
  bool yolo = false;
  bool rle = false;
  std::size_t jobs = 1;
};
int run_segment(const SegmentArgs& args);

struct TrainArgs {
  std::string task = "unet";
  std::string corpus;
  std::string model_out = "model.ckpt";
  std::string report_out;
  StftOptions stft;
  std::size_t hw = 64;
  std::size_t epochs = 60;
  std::size_t batch_size = 8;
  double learning_rate = 0.0;  // 0 = task default (0.1 unet, 0.05 classifier)
  std::uint64_t seed = 0;
  double dice_smooth = 1.0;
};
int run_train(const TrainArgs& args);

struct PredictArgs {
  std::string model;
  std::string input;
  std::string out;
  std::string mode = "mask";
  double threshold = 0.5;
  std::size_t min_area = 20;
  bool yolo = false;
  std::size_t jobs = 1;
  StftOptions stft;
};
int run_predict(const PredictArgs& args);

struct EvalArgs {
  std::string pred;
  std::string truth;
  std::string kind;
  std::string out;
};
int run_eval(const EvalArgs& args);

}  // namespace birdseg::cli
