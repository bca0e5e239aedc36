#include "birdseg/nnet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "birdseg/rng.hpp"

namespace birdseg::nnet {

namespace {

void check_finite(const Tensor& t, const char* what) {
  if (!t.all_finite()) {
    throw std::runtime_error(std::string("non-finite values in ") + what);
  }
}

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {
  if (shape_.empty()) throw std::invalid_argument("Tensor: empty shape");
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor Tensor::from_matrix(const Matrix& m) {
  Tensor t({1, m.rows(), m.cols()});
  std::copy(m.data(), m.data() + m.size(), t.data());
  return t;
}

Matrix Tensor::channel_as_matrix(std::size_t c) const {
  if (rank() != 3 || c >= shape_[0]) throw std::invalid_argument("channel_as_matrix: bad shape or channel");
  Matrix m(shape_[1], shape_[2]);
  const double* src = data_.data() + c * shape_[1] * shape_[2];
  std::copy(src, src + m.size(), m.data());
  return m;
}

const char* layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::relu: return "relu";
    case LayerKind::maxpool2: return "maxpool2";
    case LayerKind::upsample2: return "upsample2";
    case LayerKind::concat_skip: return "concat_skip";
    case LayerKind::dense: return "dense";
    case LayerKind::sigmoid: return "sigmoid";
    case LayerKind::global_avg_pool: return "global_avg_pool";
  }
  return "unknown";
}

Layer Layer::make_conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t k, std::size_t pad) {
  Layer l{LayerKind::conv2d};
  l.in_ch = in_ch;
  l.out_ch = out_ch;
  l.kh = l.kw = k;
  l.pad = pad;
  l.weights = Tensor({out_ch, in_ch, k, k});
  l.bias = Tensor({out_ch});
  l.weight_grad = Tensor({out_ch, in_ch, k, k});
  l.bias_grad = Tensor({out_ch});
  return l;
}

Layer Layer::make_concat_skip(std::size_t source_layer) {
  Layer l{LayerKind::concat_skip};
  l.source = source_layer;
  return l;
}

Layer Layer::make_dense(std::size_t in_dim, std::size_t out_dim) {
  Layer l{LayerKind::dense};
  l.in_dim = in_dim;
  l.out_dim = out_dim;
  l.weights = Tensor({out_dim, in_dim});
  l.bias = Tensor({out_dim});
  l.weight_grad = Tensor({out_dim, in_dim});
  l.bias_grad = Tensor({out_dim});
  return l;
}

void Network::zero_grads() {
  for (Layer& l : layers) {
    if (!l.has_params()) continue;
    l.weight_grad.fill(0.0);
    l.bias_grad.fill(0.0);
  }
}

std::size_t Network::param_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers) {
    if (!l.has_params()) continue;
    n += l.weights.numel() + l.bias.numel();
  }
  return n;
}

std::size_t Network::last_conv_index() const {
  for (std::size_t i = layers.size(); i > 0; --i) {
    if (layers[i - 1].kind == LayerKind::conv2d) return i - 1;
  }
  throw std::invalid_argument("network has no conv layer");
}

std::vector<std::size_t> Network::validate() const {
  if (input_shape.size() != 3) throw std::invalid_argument("network: input shape must be [C,H,W]");
  if (layers.empty()) throw std::invalid_argument("network: no layers");

  std::vector<std::vector<std::size_t>> shapes;  // output shape per layer
  std::vector<std::size_t> cur = input_shape;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Layer& l = layers[i];
    switch (l.kind) {
      case LayerKind::conv2d: {
        if (cur.size() != 3 || cur[0] != l.in_ch)
          throw std::invalid_argument("conv2d: channel mismatch at layer " + std::to_string(i));
        const std::size_t h = cur[1] + 2 * l.pad + 1 - l.kh;
        const std::size_t w = cur[2] + 2 * l.pad + 1 - l.kw;
        if (cur[1] + 2 * l.pad < l.kh || cur[2] + 2 * l.pad < l.kw)
          throw std::invalid_argument("conv2d: kernel larger than padded input");
        cur = {l.out_ch, h, w};
        break;
      }
      case LayerKind::relu:
      case LayerKind::sigmoid:
        break;
      case LayerKind::maxpool2:
        if (cur.size() != 3 || cur[1] % 2 != 0 || cur[2] % 2 != 0)
          throw std::invalid_argument("maxpool2: spatial dims must be even at layer " + std::to_string(i));
        cur = {cur[0], cur[1] / 2, cur[2] / 2};
        break;
      case LayerKind::upsample2:
        if (cur.size() != 3) throw std::invalid_argument("upsample2: needs [C,H,W]");
        cur = {cur[0], cur[1] * 2, cur[2] * 2};
        break;
      case LayerKind::concat_skip: {
        if (l.source >= i) throw std::invalid_argument("concat_skip: source must precede layer");
        const auto& src = shapes[l.source];
        if (src.size() != 3 || cur.size() != 3 || src[1] != cur[1] || src[2] != cur[2])
          throw std::invalid_argument("concat_skip: spatial shape mismatch at layer " + std::to_string(i));
        cur = {cur[0] + src[0], cur[1], cur[2]};
        break;
      }
      case LayerKind::dense:
        if (shape_numel(cur) != l.in_dim)
          throw std::invalid_argument("dense: input size mismatch at layer " + std::to_string(i));
        cur = {l.out_dim};
        break;
      case LayerKind::global_avg_pool:
        if (cur.size() != 3) throw std::invalid_argument("global_avg_pool: needs [C,H,W]");
        cur = {cur[0]};
        break;
    }
    shapes.push_back(cur);
  }

  if (topology == Topology::classifier) {
    if (layers.back().kind != LayerKind::sigmoid || shape_numel(cur) != 1)
      throw std::invalid_argument("classifier must end in a scalar sigmoid");
  }
  if (topology == Topology::unet) {
    if (cur.size() != 3 || cur[1] != input_shape[1] || cur[2] != input_shape[2])
      throw std::invalid_argument("unet must preserve the input spatial shape");
  }
  return cur;
}

void init_params(Network& net, std::uint64_t seed) {
  Rng rng(seed);
  for (Layer& l : net.layers) {
    if (!l.has_params()) continue;
    std::size_t fan_in, fan_out;
    if (l.kind == LayerKind::conv2d) {
      fan_in = l.in_ch * l.kh * l.kw;
      fan_out = l.out_ch * l.kh * l.kw;
    } else {
      fan_in = l.in_dim;
      fan_out = l.out_dim;
    }
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (std::size_t i = 0; i < l.weights.numel(); ++i) l.weights[i] = rng.uniform(-a, a);
    l.bias.fill(0.0);
  }
}

Network make_unet(std::uint64_t seed, std::size_t hw) {
  if (hw % 4 != 0) throw std::invalid_argument("make_unet: input size must be divisible by 4");
  Network net;
  net.topology = Topology::unet;
  net.input_shape = {1, hw, hw};
  auto& L = net.layers;
  L.push_back(Layer::make_conv2d(1, 8, 3, 1));   // 0
  L.push_back(Layer::make_relu());               // 1  <- skip A
  L.push_back(Layer::make_maxpool2());           // 2
  L.push_back(Layer::make_conv2d(8, 16, 3, 1));  // 3
  L.push_back(Layer::make_relu());               // 4  <- skip B
  L.push_back(Layer::make_maxpool2());           // 5
  L.push_back(Layer::make_conv2d(16, 32, 3, 1)); // 6  bottleneck
  L.push_back(Layer::make_relu());               // 7
  L.push_back(Layer::make_upsample2());          // 8
  L.push_back(Layer::make_concat_skip(4));       // 9  32+16 = 48 channels
  L.push_back(Layer::make_conv2d(48, 16, 3, 1)); // 10
  L.push_back(Layer::make_relu());               // 11
  L.push_back(Layer::make_upsample2());          // 12
  L.push_back(Layer::make_concat_skip(1));       // 13 16+8 = 24 channels
  L.push_back(Layer::make_conv2d(24, 8, 3, 1));  // 14
  L.push_back(Layer::make_relu());               // 15
  L.push_back(Layer::make_conv2d(8, 1, 1, 0));   // 16
  L.push_back(Layer::make_sigmoid());            // 17
  init_params(net, seed);
  net.validate();
  return net;
}

Network make_classifier(std::uint64_t seed, std::size_t hw) {
  if (hw % 8 != 0) throw std::invalid_argument("make_classifier: input size must be divisible by 8");
  Network net;
  net.topology = Topology::classifier;
  net.input_shape = {1, hw, hw};
  auto& L = net.layers;
  L.push_back(Layer::make_conv2d(1, 8, 3, 1));
  L.push_back(Layer::make_relu());
  L.push_back(Layer::make_maxpool2());
  L.push_back(Layer::make_conv2d(8, 16, 3, 1));
  L.push_back(Layer::make_relu());
  L.push_back(Layer::make_maxpool2());
  L.push_back(Layer::make_conv2d(16, 32, 3, 1));
  L.push_back(Layer::make_relu());
  L.push_back(Layer::make_maxpool2());
  L.push_back(Layer::make_global_avg_pool());
  L.push_back(Layer::make_dense(32, 1));
  L.push_back(Layer::make_sigmoid());
  init_params(net, seed);
  net.validate();
  return net;
}

namespace {

Tensor conv2d_forward(const Layer& l, const Tensor& in) {
  const std::size_t H = in.dim(1), W = in.dim(2);
  const std::size_t oh = H + 2 * l.pad + 1 - l.kh;
  const std::size_t ow = W + 2 * l.pad + 1 - l.kw;
  Tensor out({l.out_ch, oh, ow});

  const int pad = static_cast<int>(l.pad);
  const int Hi = static_cast<int>(H), Wi = static_cast<int>(W);
  const int ohi = static_cast<int>(oh), owi = static_cast<int>(ow);
  for (std::size_t oc = 0; oc < l.out_ch; ++oc) {
    const double b = l.bias[oc];
    double* out_ch = out.data() + oc * oh * ow;
    for (std::size_t i = 0; i < oh * ow; ++i) out_ch[i] = b;
    for (std::size_t ic = 0; ic < l.in_ch; ++ic) {
      const double* in_ch = in.data() + ic * H * W;
      for (std::size_t dh = 0; dh < l.kh; ++dh) {
        for (std::size_t dw = 0; dw < l.kw; ++dw) {
          const double wv = l.weights[((oc * l.in_ch + ic) * l.kh + dh) * l.kw + dw];
          if (wv == 0.0) continue;
          const int rh = static_cast<int>(dh) - pad;
          const int rw = static_cast<int>(dw) - pad;
          const int h_lo = std::max(0, -rh), h_hi = std::min(ohi, Hi - rh);
          const int w_lo = std::max(0, -rw), w_hi = std::min(owi, Wi - rw);
          for (int h = h_lo; h < h_hi; ++h) {
            const double* src = in_ch + (h + rh) * Wi + rw;
            double* dst = out_ch + h * owi;
            for (int w = w_lo; w < w_hi; ++w) dst[w] += wv * src[w];
          }
        }
      }
    }
  }
  return out;
}

// dLoss/d(input) and parameter gradients for conv2d.
void conv2d_backward(const Layer& l, const Tensor& in, const Tensor& gout, Tensor& gin,
                     Tensor* gweights, Tensor* gbias) {
  const std::size_t H = in.dim(1), W = in.dim(2);
  const std::size_t oh = gout.dim(1), ow = gout.dim(2);
  const int pad = static_cast<int>(l.pad);
  const int Hi = static_cast<int>(H), Wi = static_cast<int>(W);
  const int ohi = static_cast<int>(oh), owi = static_cast<int>(ow);

  for (std::size_t oc = 0; oc < l.out_ch; ++oc) {
    const double* g_ch = gout.data() + oc * oh * ow;
    if (gbias) {
      double acc = 0.0;
      for (std::size_t i = 0; i < oh * ow; ++i) acc += g_ch[i];
      (*gbias)[oc] += acc;
    }
    for (std::size_t ic = 0; ic < l.in_ch; ++ic) {
      const double* in_ch = in.data() + ic * H * W;
      double* gin_ch = gin.data() + ic * H * W;
      for (std::size_t dh = 0; dh < l.kh; ++dh) {
        for (std::size_t dw = 0; dw < l.kw; ++dw) {
          const std::size_t widx = ((oc * l.in_ch + ic) * l.kh + dh) * l.kw + dw;
          const double wv = l.weights[widx];
          const int rh = static_cast<int>(dh) - pad;
          const int rw = static_cast<int>(dw) - pad;
          const int h_lo = std::max(0, -rh), h_hi = std::min(ohi, Hi - rh);
          const int w_lo = std::max(0, -rw), w_hi = std::min(owi, Wi - rw);
          double wacc = 0.0;
          for (int h = h_lo; h < h_hi; ++h) {
            const double* g_row = g_ch + h * owi;
            const double* in_row = in_ch + (h + rh) * Wi + rw;
            double* gin_row = gin_ch + (h + rh) * Wi + rw;
            if (gweights) {
              for (int w = w_lo; w < w_hi; ++w) wacc += g_row[w] * in_row[w];
            }
            for (int w = w_lo; w < w_hi; ++w) gin_row[w] += wv * g_row[w];
          }
          if (gweights) (*gweights)[widx] += wacc;
        }
      }
    }
  }
}

}  // namespace

Activations forward_trace(const Network& net, const Tensor& input) {
  if (input.shape() != net.input_shape) {
    throw std::invalid_argument("forward: input shape mismatch");
  }
  check_finite(input, "network input");

  Activations acts;
  acts.input = input;
  acts.outputs.reserve(net.layers.size());
  acts.pool_argmax.resize(net.layers.size());

  const Tensor* cur = &acts.input;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const Layer& l = net.layers[i];
    Tensor out;
    switch (l.kind) {
      case LayerKind::conv2d:
        out = conv2d_forward(l, *cur);
        break;
      case LayerKind::relu: {
        out = *cur;
        for (std::size_t k = 0; k < out.numel(); ++k) out[k] = std::max(out[k], 0.0);
        break;
      }
      case LayerKind::sigmoid: {
        out = *cur;
        for (std::size_t k = 0; k < out.numel(); ++k) out[k] = 1.0 / (1.0 + std::exp(-out[k]));
        break;
      }
      case LayerKind::maxpool2: {
        const std::size_t C = cur->dim(0), H = cur->dim(1), W = cur->dim(2);
        out = Tensor({C, H / 2, W / 2});
        auto& arg = acts.pool_argmax[i];
        arg.resize(out.numel());
        for (std::size_t c = 0; c < C; ++c) {
          for (std::size_t h = 0; h < H / 2; ++h) {
            for (std::size_t w = 0; w < W / 2; ++w) {
              std::size_t best = (c * H + 2 * h) * W + 2 * w;
              double bv = cur->data()[best];
              const std::size_t cands[3] = {best + 1, best + W, best + W + 1};
              for (std::size_t cand : cands) {
                if (cur->data()[cand] > bv) {
                  bv = cur->data()[cand];
                  best = cand;
                }
              }
              const std::size_t o = (c * (H / 2) + h) * (W / 2) + w;
              out[o] = bv;
              arg[o] = static_cast<std::uint32_t>(best);
            }
          }
        }
        break;
      }
      case LayerKind::upsample2: {
        const std::size_t C = cur->dim(0), H = cur->dim(1), W = cur->dim(2);
        out = Tensor({C, H * 2, W * 2});
        for (std::size_t c = 0; c < C; ++c) {
          for (std::size_t h = 0; h < 2 * H; ++h) {
            const double* src = cur->data() + (c * H + h / 2) * W;
            double* dst = out.data() + (c * 2 * H + h) * 2 * W;
            for (std::size_t w = 0; w < 2 * W; ++w) dst[w] = src[w / 2];
          }
        }
        break;
      }
      case LayerKind::concat_skip: {
        const Tensor& skip = acts.outputs[l.source];
        const std::size_t C1 = cur->dim(0), C2 = skip.dim(0);
        const std::size_t H = cur->dim(1), W = cur->dim(2);
        out = Tensor({C1 + C2, H, W});
        std::copy(cur->data(), cur->data() + C1 * H * W, out.data());
        std::copy(skip.data(), skip.data() + C2 * H * W, out.data() + C1 * H * W);
        break;
      }
      case LayerKind::dense: {
        out = Tensor({l.out_dim});
        for (std::size_t o = 0; o < l.out_dim; ++o) {
          const double* wrow = l.weights.data() + o * l.in_dim;
          double acc = l.bias[o];
          for (std::size_t k = 0; k < l.in_dim; ++k) acc += wrow[k] * cur->data()[k];
          out[o] = acc;
        }
        break;
      }
      case LayerKind::global_avg_pool: {
        const std::size_t C = cur->dim(0), HW = cur->dim(1) * cur->dim(2);
        out = Tensor({C});
        for (std::size_t c = 0; c < C; ++c) {
          const double* src = cur->data() + c * HW;
          double acc = 0.0;
          for (std::size_t k = 0; k < HW; ++k) acc += src[k];
          out[c] = acc / static_cast<double>(HW);
        }
        break;
      }
    }
    check_finite(out, layer_kind_name(l.kind));
    acts.outputs.push_back(std::move(out));
    cur = &acts.outputs.back();
  }
  return acts;
}

Tensor forward(const Network& net, const Tensor& input) {
  return forward_trace(net, input).final_output();
}

Tensor backprop(const Network& net, const Activations& acts, const Tensor& upstream,
                const BackwardOptions& options, ParamGrads* param_grads,
                std::vector<Tensor>* grad_at_output) {
  const std::size_t n = net.layers.size();
  if (acts.outputs.size() != n) throw std::invalid_argument("backprop: activations do not match network");
  const std::size_t start = options.start_layer == kLastLayer ? n - 1 : options.start_layer;
  if (start >= n) throw std::invalid_argument("backprop: start layer out of range");
  if (!upstream.same_shape(acts.outputs[start]))
    throw std::invalid_argument("backprop: upstream gradient shape mismatch");

  if (param_grads) {
    param_grads->weight.resize(n);
    param_grads->bias.resize(n);
  }

  // gout[i] = dLoss/d(output of layer i); skip links accumulate into earlier
  // slots before the walk reaches them.
  std::vector<Tensor> gout(n);
  gout[start] = upstream;

  Tensor input_grad(acts.input.shape());
  for (std::size_t ii = start + 1; ii-- > 0;) {
    const Layer& l = net.layers[ii];
    if (gout[ii].numel() == 0) continue;  // branch never received gradient
    const Tensor& g = gout[ii];
    const Tensor& in = ii == 0 ? acts.input : acts.outputs[ii - 1];
    Tensor gin(in.shape());

    switch (l.kind) {
      case LayerKind::conv2d: {
        Tensor* gw = nullptr;
        Tensor* gb = nullptr;
        if (param_grads) {
          if (param_grads->weight[ii].numel() == 0) {
            param_grads->weight[ii] = Tensor(l.weights.shape());
            param_grads->bias[ii] = Tensor(l.bias.shape());
          }
          gw = &param_grads->weight[ii];
          gb = &param_grads->bias[ii];
        }
        conv2d_backward(l, in, g, gin, gw, gb);
        break;
      }
      case LayerKind::relu: {
        for (std::size_t k = 0; k < g.numel(); ++k) {
          double gv = in[k] > 0.0 ? g[k] : 0.0;
          if (options.relu == ReluBackward::guided && gv < 0.0) gv = 0.0;
          gin[k] = gv;
        }
        break;
      }
      case LayerKind::sigmoid: {
        const Tensor& y = acts.outputs[ii];
        for (std::size_t k = 0; k < g.numel(); ++k) gin[k] = g[k] * y[k] * (1.0 - y[k]);
        break;
      }
      case LayerKind::maxpool2: {
        const auto& arg = acts.pool_argmax[ii];
        for (std::size_t k = 0; k < g.numel(); ++k) gin[arg[k]] += g[k];
        break;
      }
      case LayerKind::upsample2: {
        const std::size_t C = in.dim(0), H = in.dim(1), W = in.dim(2);
        for (std::size_t c = 0; c < C; ++c) {
          for (std::size_t h = 0; h < 2 * H; ++h) {
            const double* g_row = g.data() + (c * 2 * H + h) * 2 * W;
            double* gin_row = gin.data() + (c * H + h / 2) * W;
            for (std::size_t w = 0; w < 2 * W; ++w) gin_row[w / 2] += g_row[w];
          }
        }
        break;
      }
      case LayerKind::concat_skip: {
        const std::size_t C1 = in.dim(0);
        const std::size_t main_n = C1 * in.dim(1) * in.dim(2);
        std::copy(g.data(), g.data() + main_n, gin.data());
        // Remainder flows into the skip source's output slot.
        const Tensor& skip_out = acts.outputs[l.source];
        if (gout[l.source].numel() == 0) gout[l.source] = Tensor(skip_out.shape());
        for (std::size_t k = 0; k < skip_out.numel(); ++k) gout[l.source][k] += g[main_n + k];
        break;
      }
      case LayerKind::dense: {
        if (param_grads) {
          if (param_grads->weight[ii].numel() == 0) {
            param_grads->weight[ii] = Tensor(l.weights.shape());
            param_grads->bias[ii] = Tensor(l.bias.shape());
          }
          for (std::size_t o = 0; o < l.out_dim; ++o) {
            double* gw_row = param_grads->weight[ii].data() + o * l.in_dim;
            for (std::size_t k = 0; k < l.in_dim; ++k) gw_row[k] += g[o] * in[k];
            param_grads->bias[ii][o] += g[o];
          }
        }
        for (std::size_t o = 0; o < l.out_dim; ++o) {
          const double* wrow = l.weights.data() + o * l.in_dim;
          for (std::size_t k = 0; k < l.in_dim; ++k) gin[k] += g[o] * wrow[k];
        }
        break;
      }
      case LayerKind::global_avg_pool: {
        const std::size_t C = in.dim(0), HW = in.dim(1) * in.dim(2);
        for (std::size_t c = 0; c < C; ++c) {
          const double gv = g[c] / static_cast<double>(HW);
          double* dst = gin.data() + c * HW;
          for (std::size_t k = 0; k < HW; ++k) dst[k] = gv;
        }
        break;
      }
    }

    check_finite(gin, "gradient");
    if (ii == 0) {
      input_grad = std::move(gin);
    } else {
      if (gout[ii - 1].numel() == 0) {
        gout[ii - 1] = std::move(gin);
      } else {
        for (std::size_t k = 0; k < gin.numel(); ++k) gout[ii - 1][k] += gin[k];
      }
    }
  }

  if (grad_at_output) *grad_at_output = std::move(gout);
  return input_grad;
}

Tensor backward(Network& net, const Activations& acts, const Tensor& upstream,
                const BackwardOptions& options) {
  ParamGrads grads;
  Tensor input_grad = backprop(net, acts, upstream, options, &grads, nullptr);
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    if (grads.weight.size() <= i || grads.weight[i].numel() == 0) continue;
    Layer& l = net.layers[i];
    for (std::size_t k = 0; k < l.weight_grad.numel(); ++k) l.weight_grad[k] += grads.weight[i][k];
    for (std::size_t k = 0; k < l.bias_grad.numel(); ++k) l.bias_grad[k] += grads.bias[i][k];
  }
  return input_grad;
}

}  // namespace birdseg::nnet
