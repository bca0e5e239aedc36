#include "birdseg/attention.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "birdseg/blobseg.hpp"

namespace birdseg::attention {

namespace {

void max_normalize(Matrix& m) {
  const double peak = m.max_value();
  if (peak <= 0.0) return;
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] /= peak;
}

// Index of the layer whose output is the pre-sigmoid score.
std::size_t logit_layer(const nnet::Network& net) {
  if (net.topology != nnet::Topology::classifier)
    throw std::invalid_argument("attention: network must be a classifier");
  if (net.layers.size() < 2 || net.layers.back().kind != nnet::LayerKind::sigmoid)
    throw std::invalid_argument("attention: classifier must end in sigmoid");
  return net.layers.size() - 2;
}

}  // namespace

Heatmap grad_cam(const nnet::Network& net, const nnet::Tensor& input) {
  const std::size_t logit = logit_layer(net);
  const std::size_t conv = net.last_conv_index();

  nnet::Activations acts = nnet::forward_trace(net, input);
  nnet::Tensor upstream({1});
  upstream[0] = 1.0;
  nnet::BackwardOptions opts;
  opts.start_layer = logit;
  std::vector<nnet::Tensor> grad_at_output;
  nnet::backprop(net, acts, upstream, opts, nullptr, &grad_at_output);

  const nnet::Tensor& maps = acts.outputs[conv];      // [K, h, w]
  const nnet::Tensor& grads = grad_at_output[conv];   // d(logit)/d(maps)
  const std::size_t K = maps.dim(0), h = maps.dim(1), w = maps.dim(2);

  Matrix cam(h, w);
  for (std::size_t k = 0; k < K; ++k) {
    double alpha = 0.0;
    const double* g = grads.data() + k * h * w;
    for (std::size_t i = 0; i < h * w; ++i) alpha += g[i];
    alpha /= static_cast<double>(h * w);
    const double* a = maps.data() + k * h * w;
    for (std::size_t i = 0; i < h * w; ++i) cam.data()[i] += alpha * a[i];
  }
  for (std::size_t i = 0; i < cam.size(); ++i) cam.data()[i] = std::max(cam.data()[i], 0.0);

  Matrix up = (h == input.dim(1) && w == input.dim(2))
                  ? cam
                  : resize_bilinear(cam, input.dim(1), input.dim(2));
  max_normalize(up);
  return up;
}

Heatmap guided_backprop(const nnet::Network& net, const nnet::Tensor& input) {
  const std::size_t logit = logit_layer(net);

  nnet::Activations acts = nnet::forward_trace(net, input);
  nnet::Tensor upstream({1});
  upstream[0] = 1.0;
  nnet::BackwardOptions opts;
  opts.start_layer = logit;
  opts.relu = nnet::ReluBackward::guided;
  const nnet::Tensor grad = nnet::backprop(net, acts, upstream, opts);

  const std::size_t C = grad.dim(0), H = grad.dim(1), W = grad.dim(2);
  Matrix hm(H, W);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t i = 0; i < H * W; ++i) {
      hm.data()[i] = std::max(hm.data()[i], std::abs(grad.data()[c * H * W + i]));
    }
  }
  max_normalize(hm);
  return hm;
}

std::vector<metrics::BBox> heatmap_to_bboxes(const Heatmap& hm, double threshold,
                                             std::size_t min_area) {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw std::invalid_argument("heatmap_to_bboxes: threshold must be in (0,1)");

  BinaryMask mask(hm.rows(), hm.cols());
  for (std::size_t r = 0; r < hm.rows(); ++r) {
    for (std::size_t c = 0; c < hm.cols(); ++c) mask.set(r, c, hm(r, c) >= threshold);
  }
  std::vector<metrics::BBox> boxes;
  for (const blobseg::Blob& blob : blobseg::connected_components(mask)) {
    if (blob.area() >= min_area) boxes.push_back(blob.bbox);
  }
  return boxes;  // components are already sorted by (t0, f0)
}

namespace {

// Six decimals with halfway cases rounded away from zero; printf would round
// exact ties (e.g. 50/256) to even instead.
std::string fixed6(double v) {
  const long long micro = std::llround(v * 1e6);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%lld.%06lld", micro / 1000000, micro % 1000000);
  return buf;
}

}  // namespace

std::string export_yolo_labels(const std::vector<metrics::BBox>& boxes, std::size_t img_w,
                               std::size_t img_h) {
  std::string out;
  for (const metrics::BBox& b : boxes) {
    if (!b.valid() || b.t1 >= static_cast<int>(img_w) || b.f1 >= static_cast<int>(img_h)) {
      throw std::invalid_argument("export_yolo_labels: box outside image");
    }
    const double cx = 0.5 * static_cast<double>(b.t0 + b.t1 + 1) / static_cast<double>(img_w);
    const double cy = 0.5 * static_cast<double>(b.f0 + b.f1 + 1) / static_cast<double>(img_h);
    const double w = static_cast<double>(b.t1 - b.t0 + 1) / static_cast<double>(img_w);
    const double h = static_cast<double>(b.f1 - b.f0 + 1) / static_cast<double>(img_h);
    out += "0 " + fixed6(cx) + " " + fixed6(cy) + " " + fixed6(w) + " " + fixed6(h) + "\n";
  }
  return out;
}

}  // namespace birdseg::attention
