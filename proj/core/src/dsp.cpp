#include "birdseg/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace birdseg::dsp {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 FFT. Window lengths are powers of two in
// practice; other even lengths fall back to a direct DFT below.
void fft_radix2(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * kPi / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

void dft_naive(const std::vector<std::complex<double>>& in, std::vector<std::complex<double>>& out) {
  const std::size_t n = in.size();
  out.assign(n, {0.0, 0.0});
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
      const double ang = -2.0 * kPi * static_cast<double>(k) * static_cast<double>(t) / static_cast<double>(n);
      acc += in[t] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
}

std::vector<double> hamming_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.54 - 0.46 * std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  return w;
}

}  // namespace

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::size_t frame_count(std::size_t n_samples, std::size_t window_len, std::size_t hop) {
  if (n_samples < window_len) return 0;
  return 1 + (n_samples - window_len) / hop;
}

std::size_t frame_center_sample(std::size_t frame, std::size_t window_len, std::size_t hop) {
  return frame * hop + window_len / 2;
}

Spectrogram stft_spectrogram(const AudioClip& clip, const StftParams& params) {
  const std::size_t win = params.window_len;
  if (win < 2 || win % 2 != 0) throw std::invalid_argument("stft: window_len must be even and >= 2");
  if (params.hop < 1) throw std::invalid_argument("stft: hop must be >= 1");
  if (clip.samples.size() < win) throw std::invalid_argument("stft: clip shorter than one window");

  const std::size_t n_bins = win / 2;  // Nyquist bin dropped
  const std::size_t n_frames = frame_count(clip.samples.size(), win, params.hop);

  Spectrogram spec;
  spec.values = Matrix(n_bins, n_frames);
  spec.sample_rate = clip.sample_rate;
  spec.window_len = win;
  spec.hop = params.hop;
  spec.scale = Scale::linear;

  const std::vector<double> window = hamming_window(win);
  std::vector<std::complex<double>> buf(win), dft_out;
  const bool pow2 = is_pow2(win);

  for (std::size_t j = 0; j < n_frames; ++j) {
    const double* frame = clip.samples.data() + j * params.hop;
    for (std::size_t i = 0; i < win; ++i) buf[i] = {frame[i] * window[i], 0.0};
    const std::vector<std::complex<double>>* out = &buf;
    if (pow2) {
      fft_radix2(buf);
    } else {
      dft_naive(buf, dft_out);
      out = &dft_out;
    }
    for (std::size_t b = 0; b < n_bins; ++b) spec.values(b, j) = std::abs((*out)[b]);
  }

  if (params.scale == Scale::log_db) {
    const double peak = spec.values.max_value();
    if (peak <= 0.0) {
      // Degenerate all-zero input: the whole image sits on the floor.
      for (std::size_t i = 0; i < spec.values.size(); ++i) spec.values.data()[i] = params.floor_db;
    } else {
      const double floor_lin = peak * std::pow(10.0, params.floor_db / 20.0);
      for (std::size_t i = 0; i < spec.values.size(); ++i) {
        double& v = spec.values.data()[i];
        v = 20.0 * std::log10(std::max(v, floor_lin));
      }
    }
    spec.scale = Scale::log_db;
  }
  return spec;
}

Spectrogram mean_subtract(const Spectrogram& spec) {
  Spectrogram out = spec;
  for (std::size_t r = 0; r < out.values.rows(); ++r) {
    double* row = out.values.row(r);
    double mean = 0.0;
    for (std::size_t c = 0; c < out.values.cols(); ++c) mean += row[c];
    mean /= static_cast<double>(out.values.cols());
    for (std::size_t c = 0; c < out.values.cols(); ++c) row[c] -= mean;
  }
  out.normalized = true;
  return out;
}

MelFilterbank MelFilterbank::triangular(std::size_t n_mels, std::size_t n_bins, double sample_rate,
                                        double f_min, double f_max) {
  if (n_mels < 1 || n_bins < 2) throw std::invalid_argument("mel filterbank: bad shape");
  if (!(f_min >= 0.0) || !(f_max > f_min) || f_max > sample_rate / 2.0)
    throw std::invalid_argument("mel filterbank: need 0 <= f_min < f_max <= sample_rate/2");

  MelFilterbank fb;
  fb.weights = Matrix(n_mels, n_bins);
  fb.f_min = f_min;
  fb.f_max = f_max;

  // n_mels + 2 edge frequencies equally spaced on the mel scale.
  const double mel_lo = hz_to_mel(f_min);
  const double mel_hi = hz_to_mel(f_max);
  std::vector<double> edges(n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                      static_cast<double>(n_mels + 1));
  }

  // Bin b of an N-point window sits at b * sample_rate / N; n_bins = N/2.
  const double hz_per_bin = sample_rate / (2.0 * static_cast<double>(n_bins));
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double lo = edges[m], center = edges[m + 1], hi = edges[m + 2];
    double row_sum = 0.0;
    for (std::size_t b = 0; b < n_bins; ++b) {
      const double f = static_cast<double>(b) * hz_per_bin;
      double w = 0.0;
      if (f > lo && f < hi) {
        w = f <= center ? (f - lo) / (center - lo) : (hi - f) / (hi - center);
      }
      fb.weights(m, b) = w;
      row_sum += w;
    }
    if (row_sum <= 0.0) {
      // A triangle narrower than one bin (dense low-frequency filters): give
      // it the bin nearest its center so every row keeps a positive sum.
      std::size_t nearest = static_cast<std::size_t>(std::llround(center / hz_per_bin));
      nearest = std::min(nearest, n_bins - 1);
      fb.weights(m, nearest) = 1.0;
    }
  }
  return fb;
}

Spectrogram mel_reconstruct(const Spectrogram& spec, const MelFilterbank& fb) {
  if (spec.scale != Scale::linear) throw std::invalid_argument("mel_reconstruct: spectrogram must be linear scale");
  if (fb.n_bins() != spec.n_bins()) throw std::invalid_argument("mel_reconstruct: filterbank/spectrogram bin mismatch");

  const std::size_t n_mels = fb.n_mels();
  const std::size_t n_bins = spec.n_bins();
  const std::size_t n_frames = spec.n_frames();

  std::vector<double> row_sums(n_mels, 0.0);
  for (std::size_t m = 0; m < n_mels; ++m) {
    for (std::size_t b = 0; b < n_bins; ++b) row_sums[m] += fb.weights(m, b);
    if (row_sums[m] <= 0.0) throw std::invalid_argument("mel_reconstruct: filter with zero weight sum");
  }

  // mel = W S
  Matrix mel(n_mels, n_frames);
  for (std::size_t m = 0; m < n_mels; ++m) {
    for (std::size_t b = 0; b < n_bins; ++b) {
      const double w = fb.weights(m, b);
      if (w == 0.0) continue;
      const double* src = spec.values.row(b);
      double* dst = mel.row(m);
      for (std::size_t j = 0; j < n_frames; ++j) dst[j] += w * src[j];
    }
  }

  // out = W+ mel, with W+ = W^T columns rescaled to unit sum.
  Spectrogram out = spec;
  out.values = Matrix(n_bins, n_frames);
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double inv = 1.0 / row_sums[m];
    for (std::size_t b = 0; b < n_bins; ++b) {
      const double w = fb.weights(m, b) * inv;
      if (w == 0.0) continue;
      const double* src = mel.row(m);
      double* dst = out.values.row(b);
      for (std::size_t j = 0; j < n_frames; ++j) dst[j] += w * src[j];
    }
  }
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values.data()[i] = std::max(out.values.data()[i], 0.0);
  }
  return out;
}

Spectrogram resize_bilinear(const Spectrogram& spec, std::size_t out_rows, std::size_t out_cols) {
  Spectrogram out = spec;
  out.values = birdseg::resize_bilinear(spec.values, out_rows, out_cols);
  return out;
}

}  // namespace birdseg::dsp
