#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "birdseg/nnet.hpp"
#include "birdseg/rng.hpp"

namespace nnet_test {

using birdseg::Rng;
using namespace birdseg::nnet;

inline Tensor random_tensor(Rng& rng, std::vector<std::size_t> shape, double lo = -1.0,
                            double hi = 1.0) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

/// Nudges values so no two entries of any 2x2 pooling window or any relu
/// pre-activation sit within `gap` of each other / of zero; keeps the
/// finite-difference oracle away from kinks.
inline void separate_values(Tensor& t, double gap = 1e-3) {
  for (std::size_t i = 0; i < t.numel(); ++i) {
    if (std::abs(t[i]) < gap) t[i] = t[i] < 0 ? -gap : gap;
    // Deterministic jitter breaks near-ties between nearby entries.
    t[i] += static_cast<double>(i % 17) * 3.1e-4;
  }
}

/// Scalar probe loss sum(upstream .* output) so backprop and central finite
/// differences measure the same quantity.
inline double probe_loss(const Network& net, const Tensor& input, const Tensor& upstream,
                         std::size_t start_layer) {
  Activations acts = forward_trace(net, input);
  const Tensor& out = acts.outputs[start_layer];
  double loss = 0.0;
  for (std::size_t i = 0; i < out.numel(); ++i) loss += upstream[i] * out[i];
  return loss;
}

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::size_t checked = 0;
};

inline double rel_err(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

/// Central finite differences (h = 1e-5 * max(1,|x|)) against backprop for
/// sampled parameters and input entries.
inline GradCheckResult grad_check(Network& net, const Tensor& input, Rng& rng,
                                  std::size_t samples_per_tensor = 6,
                                  std::size_t start_layer = kLastLayer) {
  const std::size_t start = start_layer == kLastLayer ? net.layers.size() - 1 : start_layer;
  Activations acts = forward_trace(net, input);
  Tensor upstream = random_tensor(rng, acts.outputs[start].shape());

  BackwardOptions opts;
  opts.start_layer = start;
  net.zero_grads();
  ParamGrads grads;
  Tensor input_grad = backprop(net, acts, upstream, opts, &grads, nullptr);

  GradCheckResult result;
  auto check_one = [&](double* x, double analytic) {
    const double h = 1e-5 * std::max(1.0, std::abs(*x));
    const double saved = *x;
    *x = saved + h;
    const double f1 = probe_loss(net, input, upstream, start);
    *x = saved - h;
    const double f2 = probe_loss(net, input, upstream, start);
    *x = saved;
    const double numeric = (f1 - f2) / (2.0 * h);
    result.max_rel_err = std::max(result.max_rel_err, rel_err(analytic, numeric));
    ++result.checked;
  };

  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    Layer& l = net.layers[li];
    if (!l.has_params()) continue;
    for (std::size_t s = 0; s < samples_per_tensor; ++s) {
      const std::size_t wi = rng.uniform_int(l.weights.numel());
      check_one(&l.weights[wi], grads.weight[li][wi]);
      const std::size_t bi = rng.uniform_int(l.bias.numel());
      check_one(&l.bias[bi], grads.bias[li][bi]);
    }
  }

  Tensor probe_input = input;
  for (std::size_t s = 0; s < samples_per_tensor; ++s) {
    const std::size_t xi = rng.uniform_int(probe_input.numel());
    const double h = 1e-5 * std::max(1.0, std::abs(probe_input[xi]));
    const double saved = probe_input[xi];
    probe_input[xi] = saved + h;
    const double f1 = probe_loss(net, probe_input, upstream, start);
    probe_input[xi] = saved - h;
    const double f2 = probe_loss(net, probe_input, upstream, start);
    probe_input[xi] = saved;
    const double numeric = (f1 - f2) / (2.0 * h);
    result.max_rel_err = std::max(result.max_rel_err, rel_err(input_grad[xi], numeric));
    ++result.checked;
  }
  return result;
}

/// Minimal nets that exercise every layer kind.
inline Network tiny_unet_like(std::uint64_t seed, std::size_t hw = 8) {
  Network net;
  net.topology = Topology::unet;
  net.input_shape = {1, hw, hw};
  net.layers.push_back(Layer::make_conv2d(1, 2, 3, 1));  // 0
  net.layers.push_back(Layer::make_relu());              // 1
  net.layers.push_back(Layer::make_maxpool2());          // 2
  net.layers.push_back(Layer::make_conv2d(2, 4, 3, 1));  // 3
  net.layers.push_back(Layer::make_relu());              // 4
  net.layers.push_back(Layer::make_upsample2());         // 5
  net.layers.push_back(Layer::make_concat_skip(1));      // 6 -> 6 channels
  net.layers.push_back(Layer::make_conv2d(6, 1, 1, 0));  // 7
  net.layers.push_back(Layer::make_sigmoid());           // 8
  init_params(net, seed);
  net.validate();
  return net;
}

inline Network tiny_classifier(std::uint64_t seed, std::size_t hw = 8) {
  Network net;
  net.topology = Topology::classifier;
  net.input_shape = {1, hw, hw};
  net.layers.push_back(Layer::make_conv2d(1, 3, 3, 1));
  net.layers.push_back(Layer::make_relu());
  net.layers.push_back(Layer::make_maxpool2());
  net.layers.push_back(Layer::make_global_avg_pool());
  net.layers.push_back(Layer::make_dense(3, 1));
  net.layers.push_back(Layer::make_sigmoid());
  init_params(net, seed);
  net.validate();
  return net;
}

}  // namespace nnet_test
