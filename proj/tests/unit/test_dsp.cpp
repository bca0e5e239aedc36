#include <cmath>
#include <complex>
#include <cstring>
#include <numbers>

#include <doctest.h>

#include "birdseg/dsp.hpp"
#include "birdseg/io/wav.hpp"
#include "birdseg/rng.hpp"
#include "testutil.hpp"

using namespace birdseg;
using testutil::TempDir;

namespace {

AudioClip sine_clip(double freq, double sr, std::size_t n, double amplitude = 1.0) {
  AudioClip clip;
  clip.sample_rate = sr;
  clip.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    clip.samples[i] = amplitude * std::sin(2.0 * std::numbers::pi * freq * i / sr);
  }
  return clip;
}

// Direct DFT of one Hamming-windowed frame: the independent oracle for the
// stft bin magnitudes.
std::vector<double> dft_frame_magnitudes(const double* frame, std::size_t n) {
  std::vector<double> mags(n / 2);
  for (std::size_t k = 0; k < n / 2; ++k) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t t = 0; t < n; ++t) {
      const double w = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * t / (n - 1));
      const double ang = -2.0 * std::numbers::pi * k * t / n;
      acc += frame[t] * w * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    mags[k] = std::abs(acc);
  }
  return mags;
}

}  // namespace

TEST_CASE("load_wav decodes 16-bit mono") {
  TempDir tmp("wav16");
  std::vector<std::uint8_t> payload;
  testutil::put_u16(payload, 16384);  // 16384/32768 = 0.5
  testutil::write_file(tmp.str("a.wav"), testutil::wav_bytes(1, 1, 8000, 16, payload));

  AudioClip clip = load_wav(tmp.str("a.wav"));
  REQUIRE(clip.samples.size() == 1);
  CHECK(clip.samples[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(clip.sample_rate == 8000.0);
}

TEST_CASE("load_wav averages stereo channels") {
  TempDir tmp("wavst");
  std::vector<std::uint8_t> payload;
  const float l = 1.0f, r = -1.0f;
  payload.resize(8);
  std::memcpy(payload.data(), &l, 4);
  std::memcpy(payload.data() + 4, &r, 4);
  testutil::write_file(tmp.str("s.wav"), testutil::wav_bytes(3, 2, 44100, 32, payload));

  AudioClip clip = load_wav(tmp.str("s.wav"));
  REQUIRE(clip.samples.size() == 1);
  CHECK(clip.samples[0] == 0.0);
}

TEST_CASE("load_wav decodes 8-bit and 24-bit PCM") {
  TempDir tmp("wavdepth");
  testutil::write_file(tmp.str("b8.wav"), testutil::wav_bytes(1, 1, 8000, 8, {192}));
  CHECK(load_wav(tmp.str("b8.wav")).samples[0] == doctest::Approx(0.5));

  // 24-bit value 2^22 = 4194304 -> 0.5
  testutil::write_file(tmp.str("b24.wav"), testutil::wav_bytes(1, 1, 8000, 24, {0x00, 0x00, 0x40}));
  CHECK(load_wav(tmp.str("b24.wav")).samples[0] == doctest::Approx(0.5));
}

TEST_CASE("load_wav error kinds") {
  TempDir tmp("waverr");

  testutil::write_file(tmp.str("empty.wav"), testutil::wav_bytes(1, 1, 8000, 16, {}));
  CHECK_THROWS_WITH_AS(load_wav(tmp.str("empty.wav")), doctest::Contains("zero-length"), WavError);
  try {
    load_wav(tmp.str("empty.wav"));
  } catch (const WavError& e) {
    CHECK(e.kind() == WavError::Kind::empty_audio);
  }

  testutil::write_file(tmp.str("garbage.wav"), {'n', 'o', 't', 'a', 'w', 'a', 'v'});
  try {
    load_wav(tmp.str("garbage.wav"));
    FAIL("expected WavError");
  } catch (const WavError& e) {
    CHECK(e.kind() == WavError::Kind::unreadable);
  }

  try {
    load_wav(tmp.str("missing.wav"));
    FAIL("expected WavError");
  } catch (const WavError& e) {
    CHECK(e.kind() == WavError::Kind::unreadable);
  }

  std::vector<std::uint8_t> payload{0, 0};
  testutil::write_file(tmp.str("adpcm.wav"), testutil::wav_bytes(2, 1, 8000, 16, payload));
  try {
    load_wav(tmp.str("adpcm.wav"));
    FAIL("expected WavError");
  } catch (const WavError& e) {
    CHECK(e.kind() == WavError::Kind::unsupported_encoding);
  }
}

TEST_CASE("stft reproduces the 256x624 shape for a 10 s clip at 44.1 kHz") {
  AudioClip clip = sine_clip(2000.0, 44100.0, 441000);
  dsp::StftParams params;
  params.window_len = 512;
  params.hop = 706;
  params.scale = dsp::Scale::linear;
  dsp::Spectrogram spec = dsp::stft_spectrogram(clip, params);
  CHECK(spec.n_bins() == 256);
  CHECK(spec.n_frames() == 624);
}

TEST_CASE("stft of silence is all zero in linear scale") {
  AudioClip clip;
  clip.sample_rate = 44100.0;
  clip.samples.assign(4096, 0.0);
  dsp::StftParams params;
  params.scale = dsp::Scale::linear;
  params.hop = 256;
  dsp::Spectrogram spec = dsp::stft_spectrogram(clip, params);
  CHECK(spec.values.max_value() == 0.0);
  CHECK(spec.values.min_value() == 0.0);
}

TEST_CASE("stft rejects a clip shorter than one window") {
  AudioClip clip;
  clip.sample_rate = 44100.0;
  clip.samples.assign(100, 0.0);
  CHECK_THROWS_AS(dsp::stft_spectrogram(clip), std::invalid_argument);
}

TEST_CASE("pure sine at a bin frequency peaks at that bin in every frame") {
  const std::size_t win = 512, k = 32;
  const double sr = 44100.0;
  const double freq = static_cast<double>(k) * sr / static_cast<double>(win);
  AudioClip clip = sine_clip(freq, sr, 20000);

  dsp::StftParams params;
  params.scale = dsp::Scale::linear;
  dsp::Spectrogram spec = dsp::stft_spectrogram(clip, params);
  REQUIRE(spec.n_frames() > 10);

  for (std::size_t j = 0; j < spec.n_frames(); ++j) {
    std::size_t argmax = 0;
    double best = -1.0;
    for (std::size_t b = 0; b < spec.n_bins(); ++b) {
      if (spec.values(b, j) > best) {
        best = spec.values(b, j);
        argmax = b;
      }
    }
    CHECK(argmax == k);
  }

  // Hamming main-lobe containment, checked against the direct DFT oracle of
  // the first frame: >= 90% of squared magnitude within +-1 bin of k.
  std::vector<double> mags = dft_frame_magnitudes(clip.samples.data(), win);
  double total = 0.0, near = 0.0;
  for (std::size_t b = 0; b < mags.size(); ++b) {
    const double e = mags[b] * mags[b];
    total += e;
    if (b + 1 >= k && b <= k + 1) near += e;
  }
  CHECK(near / total >= 0.90);

  // And the stft column must agree with the oracle bin for bin.
  for (std::size_t b = 0; b < spec.n_bins(); ++b) {
    CHECK(spec.values(b, 0) == doctest::Approx(mags[b]).epsilon(1e-9));
  }
}

TEST_CASE("frame count formula matches a loop-based counter") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t win = 2 * (1 + rng.uniform_int(500));
    const std::size_t n = win + rng.uniform_int(10000);
    const std::size_t hop = 1 + rng.uniform_int(900);
    std::size_t by_loop = 0;
    for (std::size_t start = 0; start + win <= n; start += hop) ++by_loop;
    CHECK(dsp::frame_count(n, win, hop) == by_loop);
  }
  CHECK(dsp::frame_count(441000, 512, 706) == 624);
}

TEST_CASE("stft is deterministic") {
  AudioClip clip = sine_clip(1234.5, 44100.0, 30000, 0.7);
  dsp::Spectrogram a = dsp::stft_spectrogram(clip);
  dsp::Spectrogram b = dsp::stft_spectrogram(clip);
  CHECK(a.values == b.values);
}

TEST_CASE("log scale floors at floor_db below the peak") {
  AudioClip clip = sine_clip(2000.0, 44100.0, 8192, 0.5);
  dsp::StftParams params;
  params.hop = 512;
  params.scale = dsp::Scale::log_db;
  dsp::Spectrogram spec = dsp::stft_spectrogram(clip, params);
  const double peak = spec.values.max_value();
  CHECK(spec.values.min_value() >= peak - 80.0 - 1e-9);
}

TEST_CASE("mean_subtract zeroes row means and is idempotent") {
  dsp::Spectrogram spec;
  spec.values = Matrix(1, 3);
  spec.values(0, 0) = 1;
  spec.values(0, 1) = 2;
  spec.values(0, 2) = 3;
  dsp::Spectrogram out = dsp::mean_subtract(spec);
  CHECK(out.values(0, 0) == doctest::Approx(-1.0));
  CHECK(out.values(0, 1) == doctest::Approx(0.0));
  CHECK(out.values(0, 2) == doctest::Approx(1.0));
  CHECK(out.normalized);

  dsp::Spectrogram twice = dsp::mean_subtract(out);
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    CHECK(twice.values.data()[i] == doctest::Approx(out.values.data()[i]).epsilon(1e-12));
  }

  Rng rng(3);
  dsp::Spectrogram rand_spec;
  rand_spec.values = Matrix(40, 60);
  for (std::size_t i = 0; i < rand_spec.values.size(); ++i) rand_spec.values.data()[i] = rng.uniform(0, 10);
  dsp::Spectrogram ms = dsp::mean_subtract(rand_spec);
  for (std::size_t r = 0; r < ms.values.rows(); ++r) {
    double mean = 0.0;
    for (std::size_t c = 0; c < ms.values.cols(); ++c) mean += ms.values(r, c);
    mean /= static_cast<double>(ms.values.cols());
    CHECK(std::abs(mean) < 1e-9);
  }

  dsp::Spectrogram constant;
  constant.values = Matrix(5, 7, 3.25);
  dsp::Spectrogram zeroed = dsp::mean_subtract(constant);
  CHECK(zeroed.values.max_value() == doctest::Approx(0.0));
  CHECK(zeroed.values.min_value() == doctest::Approx(0.0));
}

TEST_CASE("mel_reconstruct with the identity filterbank is the identity") {
  const std::size_t n = 16;
  dsp::MelFilterbank fb;
  fb.weights = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) fb.weights(i, i) = 1.0;
  fb.f_min = 0;
  fb.f_max = 4000;

  dsp::Spectrogram spec;
  spec.scale = dsp::Scale::linear;
  spec.values = Matrix(n, 9);
  Rng rng(11);
  for (std::size_t i = 0; i < spec.values.size(); ++i) spec.values.data()[i] = rng.uniform(0, 5);

  dsp::Spectrogram out = dsp::mel_reconstruct(spec, fb);
  for (std::size_t i = 0; i < spec.values.size(); ++i) {
    CHECK(out.values.data()[i] == doctest::Approx(spec.values.data()[i]).epsilon(1e-12));
  }
}

TEST_CASE("mel_reconstruct spike support equals the covering filters' support") {
  const std::size_t n_bins = 64, n_mels = 12;
  auto fb = dsp::MelFilterbank::triangular(n_mels, n_bins, 16000.0, 0.0, 8000.0);

  const std::size_t spike_bin = 20;
  dsp::Spectrogram spec;
  spec.scale = dsp::Scale::linear;
  spec.values = Matrix(n_bins, 1);
  spec.values(spike_bin, 0) = 1.0;

  // Oracle: bins sharing any filter with the spike bin.
  std::vector<bool> expected(n_bins, false);
  for (std::size_t m = 0; m < n_mels; ++m) {
    if (fb.weights(m, spike_bin) <= 0.0) continue;
    for (std::size_t b = 0; b < n_bins; ++b) {
      if (fb.weights(m, b) > 0.0) expected[b] = true;
    }
  }

  dsp::Spectrogram out = dsp::mel_reconstruct(spec, fb);
  for (std::size_t b = 0; b < n_bins; ++b) {
    CHECK((out.values(b, 0) > 1e-15) == expected[b]);
  }
}

TEST_CASE("mel_reconstruct of zero is zero and validates shapes") {
  auto fb = dsp::MelFilterbank::triangular(16, 64, 16000.0, 0.0, 8000.0);
  dsp::Spectrogram spec;
  spec.scale = dsp::Scale::linear;
  spec.values = Matrix(64, 5);
  dsp::Spectrogram out = dsp::mel_reconstruct(spec, fb);
  CHECK(out.values.max_value() == 0.0);
  CHECK(out.values.min_value() >= 0.0);

  dsp::Spectrogram wrong;
  wrong.scale = dsp::Scale::linear;
  wrong.values = Matrix(32, 5);
  CHECK_THROWS_AS(dsp::mel_reconstruct(wrong, fb), std::invalid_argument);
}

TEST_CASE("triangular filterbank invariants") {
  auto fb = dsp::MelFilterbank::triangular(64, 256, 44100.0, 0.0, 22050.0);
  for (std::size_t m = 0; m < fb.n_mels(); ++m) {
    double sum = 0.0;
    for (std::size_t b = 0; b < fb.n_bins(); ++b) sum += fb.weights(m, b);
    CHECK(sum > 0.0);
  }
  // Interior bins within the band are covered by at least one filter.
  const double hz_per_bin = 44100.0 / 512.0;
  std::size_t uncovered = 0;
  for (std::size_t b = 1; b < fb.n_bins(); ++b) {
    const double f = b * hz_per_bin;
    if (f <= 0.0 || f >= 22050.0) continue;
    bool covered = false;
    for (std::size_t m = 0; m < fb.n_mels() && !covered; ++m) covered = fb.weights(m, b) > 0.0;
    uncovered += !covered;
  }
  CHECK(uncovered == 0);
}

TEST_CASE("resize_bilinear identities and midpoints") {
  Matrix m(2, 2);
  m(0, 0) = 0;
  m(0, 1) = 1;
  m(1, 0) = 0;
  m(1, 1) = 1;

  Matrix same = resize_bilinear(m, 2, 2);
  CHECK(same == m);

  Matrix wide = resize_bilinear(m, 2, 3);
  CHECK(wide(0, 0) == doctest::Approx(0.0));
  CHECK(wide(0, 1) == doctest::Approx(0.5));
  CHECK(wide(0, 2) == doctest::Approx(1.0));
  CHECK(wide(1, 1) == doctest::Approx(0.5));

  Matrix constant(7, 5, 2.5);
  Matrix big = resize_bilinear(constant, 31, 13);
  CHECK(big.max_value() == doctest::Approx(2.5));
  CHECK(big.min_value() == doctest::Approx(2.5));

  Rng rng(5);
  Matrix r(10, 12);
  for (std::size_t i = 0; i < r.size(); ++i) r.data()[i] = rng.uniform(-3, 3);
  Matrix rsame = resize_bilinear(r, 10, 12);
  for (std::size_t i = 0; i < r.size(); ++i) {
    CHECK(rsame.data()[i] == doctest::Approx(r.data()[i]).epsilon(1e-12));
  }
}
