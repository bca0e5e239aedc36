#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>

#include "birdseg/dsp.hpp"
#include "birdseg/rng.hpp"

using namespace birdseg;

namespace {

AudioClip ten_second_clip() {
  AudioClip clip;
  clip.sample_rate = 44100.0;
  clip.samples.resize(441000);
  Rng rng(1);
  for (std::size_t i = 0; i < clip.samples.size(); ++i) {
    clip.samples[i] = 0.3 * std::sin(2.0 * std::numbers::pi * 3000.0 * i / 44100.0) +
                      0.05 * rng.normal();
  }
  return clip;
}

}  // namespace

static void BM_StftTenSeconds(benchmark::State& state) {
  const AudioClip clip = ten_second_clip();
  dsp::StftParams params;
  params.scale = dsp::Scale::linear;
  for (auto _ : state) {
    dsp::Spectrogram spec = dsp::stft_spectrogram(clip, params);
    benchmark::DoNotOptimize(spec.values.data());
  }
}
BENCHMARK(BM_StftTenSeconds)->Unit(benchmark::kMillisecond);

static void BM_MelReconstruct(benchmark::State& state) {
  const AudioClip clip = ten_second_clip();
  dsp::StftParams params;
  params.scale = dsp::Scale::linear;
  const dsp::Spectrogram spec = dsp::stft_spectrogram(clip, params);
  const auto fb = dsp::MelFilterbank::triangular(64, 256, 44100.0, 0.0, 22050.0);
  for (auto _ : state) {
    dsp::Spectrogram out = dsp::mel_reconstruct(spec, fb);
    benchmark::DoNotOptimize(out.values.data());
  }
}
BENCHMARK(BM_MelReconstruct)->Unit(benchmark::kMillisecond);

static void BM_ResizeTo64(benchmark::State& state) {
  const AudioClip clip = ten_second_clip();
  const dsp::Spectrogram spec = dsp::stft_spectrogram(clip);
  for (auto _ : state) {
    Matrix out = resize_bilinear(spec.values, 64, 64);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_ResizeTo64)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
