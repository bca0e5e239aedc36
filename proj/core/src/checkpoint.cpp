#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "birdseg/nnet.hpp"

namespace birdseg::nnet {

namespace {

constexpr char kMagic[4] = {'S', 'N', 'T', 'G'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

class Reader {
 public:
  explicit Reader(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  void raw(void* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  bool exhausted() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw std::runtime_error("checkpoint: truncated file");
  }
  std::vector<std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::string& path, const Network& net) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(net.topology));
  put_u32(out, static_cast<std::uint32_t>(net.input_shape.size()));
  for (std::size_t d : net.input_shape) put_u64(out, d);
  put_u32(out, static_cast<std::uint32_t>(net.layers.size()));
  for (const Layer& l : net.layers) {
    put_u32(out, static_cast<std::uint32_t>(l.kind));
    switch (l.kind) {
      case LayerKind::conv2d:
        put_u64(out, l.in_ch);
        put_u64(out, l.out_ch);
        put_u64(out, l.kh);
        put_u64(out, l.kw);
        put_u64(out, l.pad);
        break;
      case LayerKind::dense:
        put_u64(out, l.in_dim);
        put_u64(out, l.out_dim);
        break;
      case LayerKind::concat_skip:
        put_u64(out, l.source);
        break;
      default:
        break;
    }
  }
  std::uint64_t n_params = net.param_count();
  put_u64(out, n_params);
  for (const Layer& l : net.layers) {
    if (!l.has_params()) continue;
    for (std::size_t k = 0; k < l.weights.numel(); ++k) put_f64(out, l.weights[k]);
    for (std::size_t k = 0; k < l.bias.numel(); ++k) put_f64(out, l.bias[k]);
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("checkpoint: write failed for " + path);
}

Network load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
  Reader r(std::vector<std::uint8_t>((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>()));

  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("checkpoint: bad magic in " + path);
  const std::uint32_t version = r.u32();
  if (version != kVersion) throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));

  Network net;
  const std::uint32_t topo = r.u32();
  if (topo > 1) throw std::runtime_error("checkpoint: unknown topology");
  net.topology = static_cast<Topology>(topo);

  const std::uint32_t n_dims = r.u32();
  if (n_dims != 3) throw std::runtime_error("checkpoint: input shape must be [C,H,W]");
  net.input_shape.resize(n_dims);
  for (auto& d : net.input_shape) d = static_cast<std::size_t>(r.u64());

  const std::uint32_t n_layers = r.u32();
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    const std::uint32_t kind = r.u32();
    if (kind > static_cast<std::uint32_t>(LayerKind::global_avg_pool))
      throw std::runtime_error("checkpoint: unknown layer kind");
    switch (static_cast<LayerKind>(kind)) {
      case LayerKind::conv2d: {
        const std::size_t in_ch = static_cast<std::size_t>(r.u64());
        const std::size_t out_ch = static_cast<std::size_t>(r.u64());
        const std::size_t kh = static_cast<std::size_t>(r.u64());
        const std::size_t kw = static_cast<std::size_t>(r.u64());
        const std::size_t pad = static_cast<std::size_t>(r.u64());
        if (kh != kw) throw std::runtime_error("checkpoint: non-square conv kernel");
        net.layers.push_back(Layer::make_conv2d(in_ch, out_ch, kh, pad));
        break;
      }
      case LayerKind::dense: {
        const std::size_t in_dim = static_cast<std::size_t>(r.u64());
        const std::size_t out_dim = static_cast<std::size_t>(r.u64());
        net.layers.push_back(Layer::make_dense(in_dim, out_dim));
        break;
      }
      case LayerKind::concat_skip:
        net.layers.push_back(Layer::make_concat_skip(static_cast<std::size_t>(r.u64())));
        break;
      case LayerKind::relu:
        net.layers.push_back(Layer::make_relu());
        break;
      case LayerKind::maxpool2:
        net.layers.push_back(Layer::make_maxpool2());
        break;
      case LayerKind::upsample2:
        net.layers.push_back(Layer::make_upsample2());
        break;
      case LayerKind::sigmoid:
        net.layers.push_back(Layer::make_sigmoid());
        break;
      case LayerKind::global_avg_pool:
        net.layers.push_back(Layer::make_global_avg_pool());
        break;
    }
  }

  const std::uint64_t n_params = r.u64();
  if (n_params != net.param_count()) throw std::runtime_error("checkpoint: parameter count mismatch");
  for (Layer& l : net.layers) {
    if (!l.has_params()) continue;
    for (std::size_t k = 0; k < l.weights.numel(); ++k) l.weights[k] = r.f64();
    for (std::size_t k = 0; k < l.bias.numel(); ++k) l.bias[k] = r.f64();
  }
  if (!r.exhausted()) throw std::runtime_error("checkpoint: trailing bytes in " + path);

  net.validate();
  return net;
}

}  // namespace birdseg::nnet
