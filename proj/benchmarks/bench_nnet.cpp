#include <benchmark/benchmark.h>

#include "birdseg/nnet.hpp"
#include "birdseg/rng.hpp"

using namespace birdseg;
using namespace birdseg::nnet;

namespace {

Tensor random_input(std::uint64_t seed) {
  Rng rng(seed);
  Tensor t({1, 64, 64});
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform();
  return t;
}

}  // namespace

static void BM_UnetForward(benchmark::State& state) {
  const Network net = make_unet(1, 64);
  const Tensor x = random_input(2);
  for (auto _ : state) {
    Tensor y = forward(net, x);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_UnetForward)->Unit(benchmark::kMillisecond);

static void BM_UnetTrainStep(benchmark::State& state) {
  Network net = make_unet(1, 64);
  const Tensor x = random_input(2);
  Tensor target({1, 64, 64});
  for (std::size_t i = 0; i < target.numel(); ++i) target[i] = i % 13 == 0 ? 1.0 : 0.0;
  for (auto _ : state) {
    Activations acts = forward_trace(net, x);
    Tensor upstream = dice_loss_grad(acts.final_output(), target, 1.0);
    net.zero_grads();
    backward(net, acts, upstream);
    benchmark::DoNotOptimize(net.layers[0].weight_grad.data());
  }
}
BENCHMARK(BM_UnetTrainStep)->Unit(benchmark::kMillisecond);

static void BM_ClassifierForward(benchmark::State& state) {
  const Network net = make_classifier(1, 64);
  const Tensor x = random_input(3);
  for (auto _ : state) {
    Tensor y = forward(net, x);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_ClassifierForward)->Unit(benchmark::kMillisecond);
