#include <cmath>
#include <cstdio>
#include <filesystem>

#include "birdseg/io/fmat.hpp"
#include "birdseg/io/png_io.hpp"
#include "birdseg/io/wav.hpp"
#include "common.hpp"

namespace birdseg::cli {

int run_spectrogram(const SpectrogramArgs& args) {
  namespace fs = std::filesystem;
  const auto wavs = list_wavs(args.input);
  if (wavs.empty()) {
    std::fprintf(stderr, "no wav files under %s\n", args.input.c_str());
    return kExitRuntime;
  }
  fs::create_directories(args.out);

  const dsp::Scale scale = args.scale == "linear" ? dsp::Scale::linear : dsp::Scale::log_db;
  // Mel reconstruction operates on linear magnitudes; the scale flag applies after.
  dsp::StftParams params = stft_params(args.stft, args.mel > 0 ? dsp::Scale::linear : scale);

  std::vector<std::string> summaries(wavs.size());
  auto errors = run_parallel(wavs.size(), args.jobs, [&](std::size_t i) {
    const std::string id = id_of(wavs[i]);
    dsp::Spectrogram spec = dsp::stft_spectrogram(load_wav(wavs[i].string()), params);
    if (args.mel > 0) {
      const auto fb = dsp::MelFilterbank::triangular(args.mel, spec.n_bins(), spec.sample_rate,
                                                     0.0, spec.sample_rate / 2.0);
      spec = dsp::mel_reconstruct(spec, fb);
      if (scale == dsp::Scale::log_db) {
        const double peak = spec.values.max_value();
        if (peak > 0.0) {
          const double floor_lin = peak * std::pow(10.0, params.floor_db / 20.0);
          for (std::size_t k = 0; k < spec.values.size(); ++k) {
            double& v = spec.values.data()[k];
            v = 20.0 * std::log10(std::max(v, floor_lin));
          }
          spec.scale = dsp::Scale::log_db;
        }
      }
    }
    if (args.mean_subtract) spec = dsp::mean_subtract(spec);
    write_fmat((fs::path(args.out) / (id + ".fmat")).string(), spec.values);
    if (args.png) {
      // Rendered image: row 0 on top = highest frequency, unit-scaled values.
      Matrix img = flip_rows(spec.values);
      const double lo = img.min_value(), hi = img.max_value();
      if (hi > lo) {
        for (std::size_t k = 0; k < img.size(); ++k) img.data()[k] = (img.data()[k] - lo) / (hi - lo);
      }
      write_gray_png((fs::path(args.out) / (id + ".png")).string(), img);
    }
    char line[128];
    std::snprintf(line, sizeof(line), "%s %zux%zu", id.c_str(), spec.n_bins(), spec.n_frames());
    summaries[i] = line;
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
