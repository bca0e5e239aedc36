#pragma once

#include <cstddef>
#include <cstdint>

#include "birdseg/audio.hpp"
#include "birdseg/matrix.hpp"

namespace birdseg::dsp {

enum class Scale { linear, log_db };

struct StftParams {
  std::size_t window_len = 512;  // Hamming window length (even)
  std::size_t hop = 706;         // 10 s at 44.1 kHz -> exactly 624 frames
  Scale scale = Scale::log_db;
  double floor_db = -80.0;  // log floor, relative to the matrix maximum
};

/// Time-frequency magnitude image. values is [n_bins x n_frames] with row 0
/// the lowest frequency bin. Spectrograms produced by stft_spectrogram keep
/// window_len / 2 bins (the Nyquist bin is dropped); derived spectrograms
/// (resized, mel-reconstructed, mean-subtracted) keep the source metadata.
struct Spectrogram {
  Matrix values;
  double sample_rate = 0.0;
  std::size_t window_len = 0;
  std::size_t hop = 0;
  Scale scale = Scale::linear;
  bool normalized = false;  // set by mean_subtract; non-negativity no longer holds

  std::size_t n_bins() const { return values.rows(); }
  std::size_t n_frames() const { return values.cols(); }
};

/// Triangular mel filterbank, weights [n_mels x n_bins].
struct MelFilterbank {
  Matrix weights;
  double f_min = 0.0;
  double f_max = 0.0;

  std::size_t n_mels() const { return weights.rows(); }
  std::size_t n_bins() const { return weights.cols(); }

  /// Filters with centers equally spaced on the mel scale over [f_min, f_max],
  /// sampled at the STFT bin center frequencies.
  static MelFilterbank triangular(std::size_t n_mels, std::size_t n_bins, double sample_rate,
                                  double f_min, double f_max);
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Number of full analysis frames: 1 + floor((n_samples - window_len) / hop).
std::size_t frame_count(std::size_t n_samples, std::size_t window_len, std::size_t hop);

/// Sample index of the center of frame j (frames start at j * hop).
std::size_t frame_center_sample(std::size_t frame, std::size_t window_len, std::size_t hop);

/// Hamming-windowed magnitude STFT. Keeps bins 0 .. window_len/2 - 1 of the
/// one-sided spectrum (Nyquist dropped so a 512 window yields 256 rows).
/// log_db output is 20*log10(v) clamped at floor_db below the matrix maximum.
Spectrogram stft_spectrogram(const AudioClip& clip, const StftParams& params = {});

/// Subtracts each frequency row's mean over frames. Output rows have mean 0;
/// the result is flagged normalized.
Spectrogram mean_subtract(const Spectrogram& spec);

/// Smooths a linear spectrogram through a mel filterbank and back:
/// W+ (W S) where W+ is the transpose with each filter profile rescaled to
/// unit sum. Negative reconstruction values are clamped to 0.
Spectrogram mel_reconstruct(const Spectrogram& spec, const MelFilterbank& fb);

/// Corner-aligned bilinear resize of the magnitude image.
Spectrogram resize_bilinear(const Spectrogram& spec, std::size_t out_rows, std::size_t out_cols);

}  // namespace birdseg::dsp
