#include <benchmark/benchmark.h>

#include "birdseg/blobseg.hpp"
#include "birdseg/dsp.hpp"
#include "birdseg/synth.hpp"

using namespace birdseg;

namespace {

dsp::Spectrogram scene_spectrogram() {
  const synth::SceneSpec spec = synth::random_scene_spec(3, 1, 20.0, synth::NoiseKind::white);
  auto [clip, truth] = synth::generate_scene(spec);
  dsp::StftParams params;
  params.scale = dsp::Scale::linear;
  return dsp::stft_spectrogram(clip, params);
}

}  // namespace

static void BM_SegmentScene(benchmark::State& state) {
  const dsp::Spectrogram spec = scene_spectrogram();
  for (auto _ : state) {
    auto result = blobseg::segment(spec);
    benchmark::DoNotOptimize(result.second.size());
  }
}
BENCHMARK(BM_SegmentScene)->Unit(benchmark::kMillisecond);

static void BM_MedianClip(benchmark::State& state) {
  const dsp::Spectrogram spec = scene_spectrogram();
  for (auto _ : state) {
    BinaryMask mask = blobseg::median_clip(spec, 3.0);
    benchmark::DoNotOptimize(mask.data());
  }
}
BENCHMARK(BM_MedianClip)->Unit(benchmark::kMillisecond);

static void BM_MedianFilter(benchmark::State& state) {
  const dsp::Spectrogram spec = scene_spectrogram();
  const BinaryMask mask = blobseg::median_clip(spec, 3.0);
  for (auto _ : state) {
    BinaryMask out = blobseg::median_filter(mask, 5);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_MedianFilter)->Unit(benchmark::kMillisecond);
