#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "birdseg/nnet.hpp"
#include "birdseg/rng.hpp"

namespace birdseg::nnet {

namespace {

void check_dice_inputs(const Tensor& pred, const Tensor& target, double smooth) {
  if (!pred.same_shape(target)) throw std::invalid_argument("dice: shape mismatch");
  if (smooth < 0.0) throw std::invalid_argument("dice: smooth must be >= 0");
}

void sgd_step(Network& net, double lr, double scale) {
  for (Layer& l : net.layers) {
    if (!l.has_params()) continue;
    for (std::size_t k = 0; k < l.weights.numel(); ++k) l.weights[k] -= lr * scale * l.weight_grad[k];
    for (std::size_t k = 0; k < l.bias.numel(); ++k) l.bias[k] -= lr * scale * l.bias_grad[k];
  }
}

void validate_train_config(const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("train: learning_rate must be > 0");
  if (!(cfg.dice_smooth > 0.0)) throw std::invalid_argument("train: dice_smooth must be > 0");
}

void finish_report(TrainReport& report) {
  report.first_mean_loss = report.epochs.front().mean_loss;
  report.final_mean_loss = report.epochs.back().mean_loss;
  report.loss_decreased = report.final_mean_loss < report.first_mean_loss;
}

}  // namespace

double dice_coefficient(const Tensor& pred, const Tensor& target, double smooth) {
  check_dice_inputs(pred, target, smooth);
  double inter = 0.0, sum_p = 0.0, sum_t = 0.0;
  for (std::size_t i = 0; i < pred.numel(); ++i) {
    inter += pred[i] * target[i];
    sum_p += pred[i];
    sum_t += target[i];
  }
  const double denom = sum_p + sum_t + smooth;
  if (denom == 0.0) return 1.0;  // both empty with smooth 0: identity limit
  return (2.0 * inter + smooth) / denom;
}

double dice_loss(const Tensor& pred, const Tensor& target, double smooth) {
  if (!(smooth > 0.0)) throw std::invalid_argument("dice_loss: smooth must be > 0");
  return -dice_coefficient(pred, target, smooth);
}

Tensor dice_loss_grad(const Tensor& pred, const Tensor& target, double smooth) {
  if (!(smooth > 0.0)) throw std::invalid_argument("dice_loss_grad: smooth must be > 0");
  check_dice_inputs(pred, target, smooth);
  double inter = 0.0, sum_p = 0.0, sum_t = 0.0;
  for (std::size_t i = 0; i < pred.numel(); ++i) {
    inter += pred[i] * target[i];
    sum_p += pred[i];
    sum_t += target[i];
  }
  const double denom = sum_p + sum_t + smooth;
  const double numer = 2.0 * inter + smooth;
  // d(-dice)/dp_i = -(2 t_i denom - numer) / denom^2
  Tensor grad(pred.shape());
  const double inv_d2 = 1.0 / (denom * denom);
  for (std::size_t i = 0; i < pred.numel(); ++i) {
    grad[i] = -(2.0 * target[i] * denom - numer) * inv_d2;
  }
  return grad;
}

TrainingDivergedError::TrainingDivergedError(std::size_t epoch, std::size_t batch)
    : std::runtime_error("training diverged: non-finite loss at epoch " + std::to_string(epoch) +
                         ", batch " + std::to_string(batch)),
      epoch_(epoch),
      batch_(batch) {}

TrainReport train(Network& net, const std::vector<MaskSample>& dataset, const TrainConfig& cfg) {
  validate_train_config(cfg);
  if (net.topology != Topology::unet) throw std::invalid_argument("train: network must be a unet");
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  for (const auto& [input, target] : dataset) {
    if (input.shape() != net.input_shape || !target.same_shape(input))
      throw std::invalid_argument("train: sample shape mismatch");
  }

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);

  TrainReport report;
  report.metric_name = "mean_dice";
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      const double inv_batch = 1.0 / static_cast<double>(end - begin);
      net.zero_grads();
      for (std::size_t k = begin; k < end; ++k) {
        const auto& [input, target] = dataset[order[k]];
        try {
          Activations acts = forward_trace(net, input);
          const double loss = dice_loss(acts.final_output(), target, cfg.dice_smooth);
          if (!std::isfinite(loss)) throw TrainingDivergedError(epoch, batch_index);
          loss_sum += loss;
          Tensor upstream = dice_loss_grad(acts.final_output(), target, cfg.dice_smooth);
          for (std::size_t i = 0; i < upstream.numel(); ++i) upstream[i] *= inv_batch;
          backward(net, acts, upstream);
        } catch (const TrainingDivergedError&) {
          throw;
        } catch (const std::runtime_error&) {
          // Non-finite activations or gradients surface as divergence with
          // the epoch/batch that produced them.
          throw TrainingDivergedError(epoch, batch_index);
        }
      }
      sgd_step(net, cfg.learning_rate, 1.0);
    }
    const double mean_loss = loss_sum / static_cast<double>(dataset.size());
    report.epochs.push_back({epoch, mean_loss, -mean_loss});
  }
  finish_report(report);
  return report;
}

TrainReport train_classifier(Network& net, const std::vector<LabelSample>& dataset,
                             const TrainConfig& cfg) {
  validate_train_config(cfg);
  if (net.topology != Topology::classifier) throw std::invalid_argument("train_classifier: network must be a classifier");
  if (dataset.empty()) throw std::invalid_argument("train_classifier: empty dataset");
  for (const auto& [input, label] : dataset) {
    if (input.shape() != net.input_shape) throw std::invalid_argument("train_classifier: sample shape mismatch");
    if (label != 0 && label != 1) throw std::invalid_argument("train_classifier: labels must be 0/1");
  }
  // Cross-entropy gradient is injected at the logit, so the walk starts just
  // below the final sigmoid.
  const std::size_t logit_layer = net.layers.size() - 2;

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);

  TrainReport report;
  report.metric_name = "mean_accuracy";
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t hits = 0;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      const double inv_batch = 1.0 / static_cast<double>(end - begin);
      net.zero_grads();
      for (std::size_t k = begin; k < end; ++k) {
        const auto& [input, label] = dataset[order[k]];
        try {
          Activations acts = forward_trace(net, input);
          const double p = acts.final_output()[0];
          const double y = static_cast<double>(label);
          const double p_safe = std::clamp(p, 1e-12, 1.0 - 1e-12);
          const double loss = -(y * std::log(p_safe) + (1.0 - y) * std::log(1.0 - p_safe));
          if (!std::isfinite(loss)) throw TrainingDivergedError(epoch, batch_index);
          loss_sum += loss;
          hits += (p >= 0.5 ? 1 : 0) == label;
          Tensor upstream({1});
          upstream[0] = (p - y) * inv_batch;  // d(BCE)/d(logit)
          BackwardOptions opts;
          opts.start_layer = logit_layer;
          backward(net, acts, upstream, opts);
        } catch (const TrainingDivergedError&) {
          throw;
        } catch (const std::runtime_error&) {
          throw TrainingDivergedError(epoch, batch_index);
        }
      }
      sgd_step(net, cfg.learning_rate, 1.0);
    }
    const double n = static_cast<double>(dataset.size());
    report.epochs.push_back({epoch, loss_sum / n, static_cast<double>(hits) / n});
  }
  finish_report(report);
  return report;
}

std::string TrainReport::to_json() const {
  nlohmann::json j;
  j["metric"] = metric_name;
  j["first_mean_loss"] = first_mean_loss;
  j["final_mean_loss"] = final_mean_loss;
  j["loss_decreased"] = loss_decreased;
  j["epochs"] = nlohmann::json::array();
  for (const EpochStats& e : epochs) {
    nlohmann::json row;
    row["epoch"] = e.epoch;
    row["mean_loss"] = e.mean_loss;
    row[metric_name.empty() ? "mean_metric" : metric_name] = e.mean_metric;
    j["epochs"].push_back(row);
  }
  return j.dump(2) + "\n";
}

Tensor net_input_from_spectrogram(const dsp::Spectrogram& spec, std::size_t hw) {
  // Canonical network featurization: log magnitudes, per-row mean removal
  // (kills stationary bands and any global-level class giveaway), resize,
  // then a fixed /40 dB scaling clipped to [-1, 1]. Deterministic and free of
  // per-image statistics other than the log floor reference.
  dsp::Spectrogram s = spec;
  if (s.scale == dsp::Scale::linear) {
    const double peak = s.values.max_value();
    if (peak > 0.0) {
      const double floor_lin = peak * 1e-4;  // -80 dB
      for (std::size_t i = 0; i < s.values.size(); ++i) {
        double& v = s.values.data()[i];
        v = 20.0 * std::log10(std::max(v, floor_lin));
      }
    }
    s.scale = dsp::Scale::log_db;
  }
  if (!s.normalized) s = dsp::mean_subtract(s);

  Matrix resized = resize_bilinear(s.values, hw, hw);
  // /10 dB keeps the noise texture near +-0.5 and saturates event tracks at
  // 1, which the gradient scale of the small nets needs.
  for (std::size_t i = 0; i < resized.size(); ++i) {
    resized.data()[i] = std::clamp(resized.data()[i] / 10.0, -1.0, 1.0);
  }
  return Tensor::from_matrix(resized);
}

BinaryMask predict_mask(const Network& net, const dsp::Spectrogram& spec, double threshold) {
  if (net.topology != Topology::unet) throw std::invalid_argument("predict_mask: network must be a unet");
  if (!(threshold > 0.0 && threshold < 1.0)) throw std::invalid_argument("predict_mask: threshold must be in (0,1)");

  const std::size_t hw = net.input_shape[1];
  const Tensor out = forward(net, net_input_from_spectrogram(spec, hw));

  // Per-pixel >= threshold keeps exact-threshold pixels (an untrained net's
  // flat 0.5 output binarizes to all-true at the default threshold).
  BinaryMask coarse(out.dim(1), out.dim(2));
  for (std::size_t h = 0; h < out.dim(1); ++h) {
    for (std::size_t w = 0; w < out.dim(2); ++w) {
      coarse.set(h, w, out.at(0, h, w) >= threshold);
    }
  }
  if (coarse.rows() == spec.n_bins() && coarse.cols() == spec.n_frames()) return coarse;
  return resize_nearest(coarse, spec.n_bins(), spec.n_frames());
}

}  // namespace birdseg::nnet
