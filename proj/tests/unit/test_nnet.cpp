#include <cmath>
#include <limits>

#include <doctest.h>

#include "birdseg/nnet.hpp"
#include "birdseg/rng.hpp"
#include "nnet_testlib.hpp"
#include "testutil.hpp"

using namespace birdseg;
using namespace birdseg::nnet;
using nnet_test::grad_check;
using nnet_test::random_tensor;
using nnet_test::separate_values;
using testutil::TempDir;

TEST_CASE("tensor basics") {
  Tensor t({2, 3, 4});
  CHECK(t.numel() == 24);
  t.at(1, 2, 3) = 5.0;
  CHECK(t[23] == 5.0);
  CHECK(t.all_finite());
  t[0] = std::nan("");
  CHECK(!t.all_finite());

  Matrix m(2, 2);
  m(0, 1) = 7.0;
  Tensor from = Tensor::from_matrix(m);
  CHECK(from.shape() == std::vector<std::size_t>{1, 2, 2});
  CHECK(from.at(0, 0, 1) == 7.0);
  CHECK(from.channel_as_matrix(0) == m);
}

TEST_CASE("dense layer analytic gradient: y = w*x, x=2 -> dw = 2") {
  Network net;
  net.topology = Topology::unet;  // free-form stack; skip classifier checks
  net.input_shape = {1, 1, 1};
  net.layers.push_back(Layer::make_dense(1, 1));
  net.layers[0].weights[0] = 3.0;
  net.input_shape = {1, 1, 1};

  Tensor x({1, 1, 1});
  x[0] = 2.0;
  Activations acts = forward_trace(net, x);
  CHECK(acts.final_output()[0] == doctest::Approx(6.0));

  Tensor upstream({1});
  upstream[0] = 1.0;
  net.zero_grads();
  Tensor input_grad = backward(net, acts, upstream);
  CHECK(net.layers[0].weight_grad[0] == doctest::Approx(2.0));
  CHECK(net.layers[0].bias_grad[0] == doctest::Approx(1.0));
  CHECK(input_grad[0] == doctest::Approx(3.0));
}

TEST_CASE("relu blocks gradient at negative pre-activations") {
  Network net;
  net.topology = Topology::unet;
  net.input_shape = {1, 1, 2};
  net.layers.push_back(Layer::make_relu());

  Tensor x({1, 1, 2});
  x[0] = -0.5;
  x[1] = 0.5;
  Activations acts = forward_trace(net, x);
  CHECK(acts.final_output()[0] == 0.0);
  CHECK(acts.final_output()[1] == 0.5);

  Tensor upstream({1, 1, 2});
  upstream[0] = upstream[1] = 1.0;
  Tensor g = backward(net, acts, upstream);
  CHECK(g[0] == 0.0);
  CHECK(g[1] == 1.0);
}

TEST_CASE("1x1 identity conv is the identity map") {
  Network net;
  net.topology = Topology::unet;
  net.input_shape = {1, 4, 4};
  net.layers.push_back(Layer::make_conv2d(1, 1, 1, 0));
  net.layers[0].weights[0] = 1.0;

  Rng rng(1);
  Tensor x = random_tensor(rng, {1, 4, 4});
  CHECK(forward(net, x) == x);
}

TEST_CASE("zero-weight classifier outputs sigmoid(0) = 0.5") {
  Network net = nnet_test::tiny_classifier(0);
  for (Layer& l : net.layers) {
    if (l.has_params()) {
      l.weights.fill(0.0);
      l.bias.fill(0.0);
    }
  }
  Rng rng(2);
  Tensor x = random_tensor(rng, {1, 8, 8});
  CHECK(forward(net, x)[0] == doctest::Approx(0.5));
}

TEST_CASE("unet forward preserves spatial shape with outputs in (0,1)") {
  Network net = make_unet(7, 64);
  Rng rng(3);
  Tensor x = random_tensor(rng, {1, 64, 64}, 0.0, 1.0);
  Tensor y = forward(net, x);
  CHECK(y.shape() == std::vector<std::size_t>{1, 64, 64});
  for (std::size_t i = 0; i < y.numel(); ++i) {
    CHECK(y[i] > 0.0);
    CHECK(y[i] < 1.0);
  }
}

TEST_CASE("forward rejects shape mismatches and unet validation catches bad skips") {
  Network net = make_unet(7, 64);
  Tensor wrong({1, 32, 32});
  CHECK_THROWS_AS(forward(net, wrong), std::invalid_argument);

  Network bad = net;
  bad.layers[9].source = 1;  // joins a 64x64 skip onto a 32x32 tensor
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("finite differences validate every layer kind in combination") {
  Rng rng(42);
  Network unet_like = nnet_test::tiny_unet_like(5);
  for (int trial = 0; trial < 3; ++trial) {
    Tensor x = random_tensor(rng, {1, 8, 8});
    separate_values(x);
    auto result = grad_check(unet_like, x, rng, 4);
    CHECK(result.max_rel_err < 1e-4);
    CHECK(result.checked > 0);
  }

  Network classifier = nnet_test::tiny_classifier(6);
  for (int trial = 0; trial < 3; ++trial) {
    Tensor x = random_tensor(rng, {1, 8, 8});
    separate_values(x);
    auto result = grad_check(classifier, x, rng, 4);
    CHECK(result.max_rel_err < 1e-4);
  }

  // Random 3-layer net per the worked example.
  Network three;
  three.topology = Topology::unet;
  three.input_shape = {2, 6, 6};
  three.layers.push_back(Layer::make_conv2d(2, 3, 3, 1));
  three.layers.push_back(Layer::make_relu());
  three.layers.push_back(Layer::make_conv2d(3, 1, 1, 0));
  init_params(three, 9);
  for (int trial = 0; trial < 3; ++trial) {
    Tensor x = random_tensor(rng, {2, 6, 6});
    separate_values(x);
    auto result = grad_check(three, x, rng, 5);
    CHECK(result.max_rel_err < 1e-4);
  }
}

TEST_CASE("dice coefficient worked values") {
  Tensor a({1, 10, 10}), b({1, 10, 10});
  for (std::size_t i = 0; i < 100; ++i) a[i] = 1.0;
  CHECK(dice_coefficient(a, a, 0.0) == doctest::Approx(1.0));

  Tensor zero({1, 10, 10});
  CHECK(dice_coefficient(a, zero, 0.0) == doctest::Approx(0.0));

  // |X|=100 as pred over the first 100 cells of a 200-cell grid; target covers
  // cells 50..149: overlap 50 -> dice 0.5.
  Tensor p({1, 10, 20}), t({1, 10, 20});
  for (std::size_t i = 0; i < 100; ++i) p[i] = 1.0;
  for (std::size_t i = 50; i < 150; ++i) t[i] = 1.0;
  CHECK(dice_coefficient(p, t, 0.0) == doctest::Approx(0.5));

  CHECK(dice_loss(p, t, 1.0) == -dice_coefficient(p, t, 1.0));
  CHECK(dice_loss(zero, zero, 1.0) == doctest::Approx(-1.0));  // zero-mask negatives train

  Tensor wrong({1, 5, 5});
  CHECK_THROWS_AS(dice_coefficient(p, wrong, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(dice_loss(p, t, 0.0), std::invalid_argument);
}

TEST_CASE("dice loss gradient matches finite differences") {
  Rng rng(77);
  for (int trial = 0; trial < 5; ++trial) {
    Tensor pred = random_tensor(rng, {1, 6, 6}, 0.05, 0.95);
    Tensor target({1, 6, 6});
    for (std::size_t i = 0; i < target.numel(); ++i) target[i] = rng.uniform_int(2);
    const double smooth = 1.0;

    Tensor analytic = dice_loss_grad(pred, target, smooth);
    for (int s = 0; s < 10; ++s) {
      const std::size_t i = rng.uniform_int(pred.numel());
      const double h = 1e-5 * std::max(1.0, std::abs(pred[i]));
      const double saved = pred[i];
      pred[i] = saved + h;
      const double f1 = dice_loss(pred, target, smooth);
      pred[i] = saved - h;
      const double f2 = dice_loss(pred, target, smooth);
      pred[i] = saved;
      CHECK(nnet_test::rel_err(analytic[i], (f1 - f2) / (2.0 * h)) < 1e-4);
    }
  }
}

TEST_CASE("training memorizes a single sample") {
  Network net = make_unet(11, 16);

  Tensor input({1, 16, 16});
  Tensor target({1, 16, 16});
  for (std::size_t r = 5; r < 11; ++r) {
    for (std::size_t c = 4; c < 12; ++c) {
      input.at(0, r, c) = 1.0;
      target.at(0, r, c) = 1.0;
    }
  }

  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.batch_size = 1;
  cfg.learning_rate = 0.1;
  cfg.seed = 1;
  TrainReport report = train(net, {{input, target}}, cfg);

  const Tensor pred = forward(net, input);
  CHECK(dice_coefficient(pred, target, 0.0) >= 0.95);
  CHECK(report.loss_decreased);
  CHECK(report.epochs.size() == 200);
}

TEST_CASE("zero-mask negatives suppress activations") {
  Network net = make_unet(13, 16);
  Rng rng(19);
  std::vector<MaskSample> negatives;
  for (int i = 0; i < 4; ++i) {
    Tensor input = random_tensor(rng, {1, 16, 16}, 0.0, 1.0);
    negatives.push_back({input, Tensor({1, 16, 16})});
  }

  // The zero-mask gradient s/(sum_p + s)^2 starts tiny and grows as the
  // activation mass shrinks, so this corner takes many cheap steps.
  TrainConfig cfg;
  cfg.epochs = 300;
  cfg.batch_size = 1;
  cfg.learning_rate = 0.5;
  cfg.seed = 5;
  train(net, negatives, cfg);

  double mean_act = 0.0;
  for (const auto& [input, target] : negatives) {
    const Tensor pred = forward(net, input);
    for (std::size_t i = 0; i < pred.numel(); ++i) mean_act += pred[i];
  }
  mean_act /= 4.0 * 16 * 16;
  CHECK(mean_act < 0.1);
}

TEST_CASE("training is bit-deterministic for a fixed seed") {
  Rng rng(23);
  std::vector<MaskSample> data;
  for (int i = 0; i < 3; ++i) {
    Tensor input = random_tensor(rng, {1, 16, 16}, 0.0, 1.0);
    Tensor target({1, 16, 16});
    for (std::size_t k = 0; k < target.numel(); ++k) target[k] = input[k] > 0.7 ? 1.0 : 0.0;
    data.push_back({input, target});
  }

  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.batch_size = 2;
  cfg.seed = 99;

  Network net1 = make_unet(31, 16);
  Network net2 = make_unet(31, 16);
  TrainReport r1 = train(net1, data, cfg);
  TrainReport r2 = train(net2, data, cfg);

  REQUIRE(r1.epochs.size() == r2.epochs.size());
  for (std::size_t e = 0; e < r1.epochs.size(); ++e) {
    CHECK(r1.epochs[e].mean_loss == r2.epochs[e].mean_loss);  // bit-for-bit
  }
  for (std::size_t li = 0; li < net1.layers.size(); ++li) {
    CHECK(net1.layers[li].weights == net2.layers[li].weights);
    CHECK(net1.layers[li].bias == net2.layers[li].bias);
  }
}

TEST_CASE("classifier training separates a linearly separable toy set") {
  Network net = make_classifier(3, 16);
  Rng rng(29);
  std::vector<LabelSample> data;
  for (int i = 0; i < 16; ++i) {
    const int label = i % 2;
    Tensor input({1, 16, 16});
    for (std::size_t k = 0; k < input.numel(); ++k) {
      input[k] = label ? rng.uniform(0.6, 1.0) : rng.uniform(0.0, 0.4);
    }
    data.push_back({input, label});
  }

  TrainConfig cfg;
  cfg.epochs = 40;
  cfg.batch_size = 4;
  cfg.learning_rate = 0.05;
  cfg.seed = 4;
  TrainReport report = train_classifier(net, data, cfg);
  CHECK(report.epochs.back().mean_metric == doctest::Approx(1.0));
  CHECK(report.metric_name == "mean_accuracy");

  // Constant inputs with balanced labels cannot beat chance.
  std::vector<LabelSample> flat;
  for (int i = 0; i < 8; ++i) flat.push_back({Tensor({1, 16, 16}, 0.5), i % 2});
  Network net2 = make_classifier(3, 16);
  TrainReport r2 = train_classifier(net2, flat, cfg);
  CHECK(r2.epochs.back().mean_metric == doctest::Approx(0.5));
}

TEST_CASE("training aborts with a diagnostic naming the epoch and batch") {
  Network net = make_unet(17, 16);
  Rng rng(31);
  Tensor input = random_tensor(rng, {1, 16, 16}, 0.0, 1.0);
  input[7] = std::numeric_limits<double>::quiet_NaN();
  Tensor target({1, 16, 16}, 1.0);

  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.batch_size = 1;
  cfg.seed = 1;
  CHECK_THROWS_AS(train(net, {{input, target}}, cfg), TrainingDivergedError);
  try {
    Network net2 = make_unet(17, 16);
    train(net2, {{input, target}}, cfg);
  } catch (const TrainingDivergedError& e) {
    CHECK(e.epoch() == 1);
    CHECK(e.batch() == 0);
    CHECK(std::string(e.what()).find("epoch 1") != std::string::npos);
  }
}

TEST_CASE("checkpoint round-trips exactly") {
  TempDir tmp("ckpt");
  Network net = make_unet(51, 16);
  save_checkpoint(tmp.str("u.ckpt"), net);
  Network loaded = load_checkpoint(tmp.str("u.ckpt"));

  CHECK(loaded.topology == Topology::unet);
  CHECK(loaded.input_shape == net.input_shape);
  REQUIRE(loaded.layers.size() == net.layers.size());
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    CHECK(loaded.layers[i].kind == net.layers[i].kind);
    CHECK(loaded.layers[i].weights == net.layers[i].weights);
    CHECK(loaded.layers[i].bias == net.layers[i].bias);
  }

  Rng rng(7);
  Tensor x = random_tensor(rng, {1, 16, 16}, 0.0, 1.0);
  CHECK(forward(net, x) == forward(loaded, x));

  testutil::write_file(tmp.str("junk.ckpt"), {1, 2, 3, 4, 5});
  CHECK_THROWS(load_checkpoint(tmp.str("junk.ckpt")));
}

TEST_CASE("predict_mask thresholding policy and validation") {
  Network net = make_unet(1, 16);
  // Zero the final conv so every output is exactly 0.5.
  Layer& final_conv = net.layers[16];
  final_conv.weights.fill(0.0);
  final_conv.bias.fill(0.0);

  dsp::Spectrogram spec;
  spec.values = Matrix(32, 48, 1.0);
  spec.values(10, 10) = 2.0;
  spec.scale = dsp::Scale::linear;

  // >= keeps pixels exactly at the threshold.
  BinaryMask mask = predict_mask(net, spec, 0.5);
  CHECK(mask.rows() == 32);
  CHECK(mask.cols() == 48);
  CHECK(mask.count_true() == mask.size());

  CHECK_THROWS_AS(predict_mask(net, spec, 0.0), std::invalid_argument);
  Network cls = make_classifier(1, 16);
  CHECK_THROWS_AS(predict_mask(cls, spec, 0.5), std::invalid_argument);
}

TEST_CASE("train report json carries per-epoch rows") {
  Network net = make_unet(2, 16);
  Tensor input({1, 16, 16}, 0.2);
  Tensor target({1, 16, 16});
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 1;
  TrainReport report = train(net, {{input, target}}, cfg);
  const std::string json = report.to_json();
  CHECK(json.find("\"mean_loss\"") != std::string::npos);
  CHECK(json.find("\"mean_dice\"") != std::string::npos);
  CHECK(report.epochs.size() == 3);
}
