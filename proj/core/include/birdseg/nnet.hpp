#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "birdseg/dsp.hpp"
#include "birdseg/matrix.hpp"

namespace birdseg::nnet {

/// Dense n-dimensional array of doubles. Image tensors are [C, H, W].
/// Every op asserts finiteness of its output; NaN/Inf is a hard failure.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::initializer_list<std::size_t> shape, double fill = 0.0)
      : Tensor(std::vector<std::size_t>(shape), fill) {}

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t numel() const { return data_.size(); }
  std::size_t dim(std::size_t i) const { return shape_[i]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // [C,H,W] accessors.
  double& at(std::size_t c, std::size_t h, std::size_t w) {
    return data_[(c * shape_[1] + h) * shape_[2] + w];
  }
  double at(std::size_t c, std::size_t h, std::size_t w) const {
    return data_[(c * shape_[1] + h) * shape_[2] + w];
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  bool all_finite() const;
  void fill(double v);

  static Tensor from_matrix(const Matrix& m);  // [1, rows, cols]
  Matrix channel_as_matrix(std::size_t c) const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

enum class LayerKind : std::uint32_t {
  conv2d = 0,
  relu = 1,
  maxpool2 = 2,
  upsample2 = 3,
  concat_skip = 4,
  dense = 5,
  sigmoid = 6,
  global_avg_pool = 7,
};

const char* layer_kind_name(LayerKind kind);

/// One layer of a network. conv2d and dense carry parameters and congruent
/// gradient buffers; concat_skip records which earlier layer's output it
/// concatenates onto the running tensor.
struct Layer {
  LayerKind kind;

  // conv2d: kernel [out_ch, in_ch, kh, kw], stride 1, zero padding `pad`.
  std::size_t in_ch = 0, out_ch = 0, kh = 0, kw = 0, pad = 0;
  // dense: weights [out_dim, in_dim] over the flattened input.
  std::size_t in_dim = 0, out_dim = 0;
  // concat_skip: index of the source layer whose output is appended.
  std::size_t source = 0;

  Tensor weights{}, bias{};
  Tensor weight_grad{}, bias_grad{};

  bool has_params() const { return kind == LayerKind::conv2d || kind == LayerKind::dense; }

  static Layer make_conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t k, std::size_t pad);
  static Layer make_relu() { return {LayerKind::relu}; }
  static Layer make_maxpool2() { return {LayerKind::maxpool2}; }
  static Layer make_upsample2() { return {LayerKind::upsample2}; }
  static Layer make_concat_skip(std::size_t source_layer);
  static Layer make_dense(std::size_t in_dim, std::size_t out_dim);
  static Layer make_sigmoid() { return {LayerKind::sigmoid}; }
  static Layer make_global_avg_pool() { return {LayerKind::global_avg_pool}; }
};

enum class Topology : std::uint32_t { classifier = 0, unet = 1 };

struct Network {
  Topology topology = Topology::classifier;
  std::vector<std::size_t> input_shape;  // [C, H, W]
  std::vector<Layer> layers;

  void zero_grads();
  std::size_t param_count() const;
  /// Index of the last conv2d layer; the attention maps tap its output.
  std::size_t last_conv_index() const;

  /// Shape-inference pass over the whole stack. Verifies skip links join
  /// tensors of identical spatial shape and that a classifier ends in a
  /// scalar sigmoid. Returns the output shape.
  std::vector<std::size_t> validate() const;
};

/// Seeded Glorot-uniform initialization: U(-a, a), a = sqrt(6/(fan_in+fan_out)).
void init_params(Network& net, std::uint64_t seed);

/// Two-level contracting/expanding segmentation net with skip concatenations:
/// 8 -> 16 channels down, 32 at the bottom, mirrored back up to a 1x1 conv and
/// sigmoid. Input [1, hw, hw].
Network make_unet(std::uint64_t seed, std::size_t hw = 64);

/// Three conv/relu/pool stages, global average pooling, dense, sigmoid scalar.
Network make_classifier(std::uint64_t seed, std::size_t hw = 64);

/// Cached forward pass: outputs[i] is layer i's output; maxpool layers also
/// record their argmax selections for the backward pass.
struct Activations {
  Tensor input;
  std::vector<Tensor> outputs;
  std::vector<std::vector<std::uint32_t>> pool_argmax;  // indexed by layer

  const Tensor& final_output() const { return outputs.back(); }
};

Activations forward_trace(const Network& net, const Tensor& input);

/// Convenience forward returning only the final output. Const and safe to
/// call concurrently on a trained network.
Tensor forward(const Network& net, const Tensor& input);

enum class ReluBackward {
  standard,  // gate on forward sign
  guided,    // gate on forward sign and on upstream gradient sign
};

constexpr std::size_t kLastLayer = static_cast<std::size_t>(-1);

struct BackwardOptions {
  ReluBackward relu = ReluBackward::standard;
  /// Backprop starts from the output of this layer (kLastLayer = network
  /// output). Training on a pre-sigmoid logit or tapping grad-CAM gradients
  /// seeds the walk at an interior boundary.
  std::size_t start_layer = kLastLayer;
};

/// Per-layer parameter gradients produced by one backprop walk.
struct ParamGrads {
  std::vector<Tensor> weight;
  std::vector<Tensor> bias;
};

/// Reverse walk over the layer stack. `upstream` is dLoss/d(output of
/// start_layer). Returns dLoss/d(input). Does not touch the network, so
/// concurrent attention-map extraction on a shared trained net is safe.
/// If param_grads is non-null it is filled (allocated on demand); if
/// grad_at_output is non-null, (*grad_at_output)[i] = dLoss/d(output of
/// layer i) for every layer at or below start_layer.
Tensor backprop(const Network& net, const Activations& acts, const Tensor& upstream,
                const BackwardOptions& options = {}, ParamGrads* param_grads = nullptr,
                std::vector<Tensor>* grad_at_output = nullptr);

/// Accumulates parameter gradients into the network's grad buffers.
/// forward_trace must have produced `acts` for this network.
Tensor backward(Network& net, const Activations& acts, const Tensor& upstream,
                const BackwardOptions& options = {});

/// (2 sum(pred*target) + smooth) / (sum(pred) + sum(target) + smooth).
/// Soft intersection: pred may be real-valued in [0,1], target binary.
double dice_coefficient(const Tensor& pred, const Tensor& target, double smooth);

/// -dice_coefficient; the quantity minimized during segmentation training.
double dice_loss(const Tensor& pred, const Tensor& target, double smooth);

/// Analytic d(dice_loss)/d(pred).
Tensor dice_loss_grad(const Tensor& pred, const Tensor& target, double smooth);

struct TrainConfig {
  std::size_t epochs = 60;
  std::size_t batch_size = 8;
  double learning_rate = 0.1;  // classifier default is 0.05
  std::uint64_t seed = 0;
  double dice_smooth = 1.0;
};

struct EpochStats {
  std::size_t epoch = 0;   // 1-based
  double mean_loss = 0.0;  // unet: -dice; classifier: binary cross-entropy
  double mean_metric = 0.0;  // unet: dice; classifier: accuracy
};

struct TrainReport {
  std::string metric_name;  // "mean_dice" or "mean_accuracy"
  std::vector<EpochStats> epochs;
  double first_mean_loss = 0.0;
  double final_mean_loss = 0.0;
  bool loss_decreased = false;

  std::string to_json() const;
};

/// Raised when a training step produces a non-finite loss.
class TrainingDivergedError : public std::runtime_error {
 public:
  TrainingDivergedError(std::size_t epoch, std::size_t batch);
  std::size_t epoch() const { return epoch_; }
  std::size_t batch() const { return batch_; }

 private:
  std::size_t epoch_, batch_;
};

/// (input [1,H,W], target mask [1,H,W] with 0/1 values), pre-resized to the
/// network input shape.
using MaskSample = std::pair<Tensor, Tensor>;
using LabelSample = std::pair<Tensor, int>;

/// Mini-batch SGD on the Dice loss. Deterministic for a fixed config:
/// seeded shuffle, fixed batch order, plain SGD steps.
TrainReport train(Network& net, const std::vector<MaskSample>& dataset, const TrainConfig& cfg);

/// Mini-batch SGD on binary cross-entropy, gradients taken at the logit.
TrainReport train_classifier(Network& net, const std::vector<LabelSample>& dataset,
                             const TrainConfig& cfg);

/// Canonical featurization of a spectrogram for network input: bilinear
/// resize to hw x hw then min-max scaling to [0,1].
Tensor net_input_from_spectrogram(const dsp::Spectrogram& spec, std::size_t hw = 64);

/// Forward through a unet, per-pixel >= threshold, then nearest-neighbor
/// resize back to the spectrogram's native shape.
BinaryMask predict_mask(const Network& net, const dsp::Spectrogram& spec, double threshold = 0.5);

/// Versioned binary checkpoint: "SNTG" magic, format version, topology,
/// layer spec list, then parameters as little-endian 64-bit floats in
/// declaration order.
void save_checkpoint(const std::string& path, const Network& net);
Network load_checkpoint(const std::string& path);

}  // namespace birdseg::nnet
