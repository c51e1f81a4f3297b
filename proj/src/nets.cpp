#include "lucid/nets.hpp"

#include <string>

#include "lucid/geometry.hpp"

namespace lucid::nn {

Tensor Mlp::forward(const Tensor& x) const {
  if (layers.empty()) throw StateError("forward on an empty Mlp");
  Tensor h = x;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = ad::add_bias(ad::matmul(h, layers[i].W), layers[i].b);
    if (i + 1 < layers.size()) h = ad::relu(h);
  }
  return h;
}

std::vector<Tensor*> Mlp::params() {
  std::vector<Tensor*> out;
  for (AffineLayer& l : layers) {
    out.push_back(&l.W);
    out.push_back(&l.b);
  }
  return out;
}

std::size_t Mlp::param_count() const {
  std::size_t n = 0;
  for (const AffineLayer& l : layers) n += l.W.size() + l.b.size();
  return n;
}

Mlp make_mlp(const std::vector<std::size_t>& dims, std::uint64_t seed) {
  if (dims.size() < 2) {
    throw ConfigError("make_mlp needs at least input and output dims");
  }
  Mlp mlp;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    AffineLayer l;
    l.W = ad::xavier_uniform({dims[i], dims[i + 1]}, seed + i * 2);
    l.b = Tensor::zeros({dims[i + 1]}, true);
    mlp.layers.push_back(std::move(l));
  }
  return mlp;
}

void zero_layer(AffineLayer& layer) {
  std::fill(layer.W.data_mut().begin(), layer.W.data_mut().end(), 0.0);
  std::fill(layer.b.data_mut().begin(), layer.b.data_mut().end(), 0.0);
}

std::size_t NetConfig::lfn_param_count() const {
  if (lfn_depth < 2) throw ConfigError("light field net needs depth >= 2");
  std::size_t n = 6 * lfn_width + lfn_width;  // input layer
  for (std::size_t i = 0; i + 2 < lfn_depth; ++i)
    n += lfn_width * lfn_width + lfn_width;
  n += lfn_width * 3 + 3;  // rgb output
  return n;
}

// ---- encoder ----------------------------------------------------------------

namespace {

Tensor conv_block(const Tensor& x, const ConvLayer& l, bool activate) {
  Tensor y = ad::add_channel_bias(ad::conv2d(x, l.K, l.stride, l.padding),
                                  l.b);
  return activate ? ad::relu(y) : y;
}

// [C,H,W] -> [C] mean over the spatial extent
Tensor channel_mean(const Tensor& x) {
  std::size_t c = x.shape()[0], hw = x.shape()[1] * x.shape()[2];
  return ad::row_mean(ad::reshape(x, {c, hw}));
}

}  // namespace

Encoder::Output Encoder::forward(const Tensor& pair) const {
  if (!pair.defined() || pair.shape().size() != 3 || pair.shape()[0] != 6) {
    throw DimensionError("encoder expects a [6,H,W] stacked pair");
  }
  Tensor h = pair;
  for (const ConvLayer& l : trunk) h = conv_block(h, l, true);

  Tensor p = h;
  for (std::size_t i = 0; i < pose_head.size(); ++i)
    p = conv_block(p, pose_head[i], i + 1 < pose_head.size());
  Output out;
  out.pose9 = channel_mean(p);

  Tensor pooled = ad::reshape(channel_mean(h), {1, h.shape()[0]});
  out.z = ad::reshape(scene_head.forward(pooled), {scene_head.layers.back().b.size()});
  return out;
}

std::vector<Tensor*> Encoder::params() {
  std::vector<Tensor*> out;
  for (ConvLayer& l : trunk) {
    out.push_back(&l.K);
    out.push_back(&l.b);
  }
  for (ConvLayer& l : pose_head) {
    out.push_back(&l.K);
    out.push_back(&l.b);
  }
  for (Tensor* t : scene_head.params()) out.push_back(t);
  return out;
}

Encoder make_encoder(const NetConfig& cfg, std::uint64_t seed) {
  if (cfg.trunk_widths.size() != cfg.trunk_strides.size() ||
      cfg.trunk_widths.empty()) {
    throw ConfigError("encoder trunk widths and strides must match");
  }
  Encoder enc;
  std::size_t cin = 6;
  std::uint64_t s = seed;
  for (std::size_t i = 0; i < cfg.trunk_widths.size(); ++i) {
    ConvLayer l;
    l.K = ad::xavier_uniform({cfg.trunk_widths[i], cin, 3, 3}, s += 7);
    l.b = Tensor::zeros({cfg.trunk_widths[i]}, true);
    l.stride = cfg.trunk_strides[i];
    l.padding = 1;
    enc.trunk.push_back(std::move(l));
    cin = cfg.trunk_widths[i];
  }
  // pose head: two activated 1x1 convs and a linear one down to 9 channels
  for (std::size_t i = 0; i < 3; ++i) {
    ConvLayer l;
    std::size_t cout = i < 2 ? cin : 9;
    l.K = ad::xavier_uniform({cout, cin, 1, 1}, s += 7);
    l.b = Tensor::zeros({cout}, true);
    l.stride = 1;
    l.padding = 0;
    enc.pose_head.push_back(std::move(l));
  }
  enc.scene_head = make_mlp({cin, cfg.scene_dim, cfg.scene_dim, cfg.scene_dim},
                            s += 7);
  return enc;
}

std::pair<Tensor, Tensor> pose_to_rt(const Tensor& pose9) {
  if (!pose9.defined() || pose9.size() != 9) {
    throw DimensionError("pose_to_rt expects a flat 9-vector");
  }
  Tensor rot6 = ad::add(ad::slice(pose9, 0, 6),
                        Tensor::from({1, 0, 0, 0, 1, 0}, {6}));
  Tensor r = rot6d_to_matrix(rot6);
  Tensor t = ad::slice(pose9, 6, 3);
  return {r, t};
}

// ---- hypernet and light field net --------------------------------------------

Tensor HyperNet::forward(const Tensor& z_row) const {
  if (!z_row.defined() || z_row.shape().size() != 2 || z_row.shape()[0] != 1) {
    throw DimensionError("hypernet expects z as a [1,dim] row");
  }
  Tensor out = mlp.forward(z_row);
  return ad::reshape(out, {out.size()});
}

HyperNet make_hypernet(const NetConfig& cfg, std::uint64_t seed) {
  if (cfg.hyper_depth < 2) throw ConfigError("hypernet needs depth >= 2");
  // hyper_depth affine layers means hyper_depth+1 entries in the dim list
  std::vector<std::size_t> dims;
  dims.push_back(cfg.scene_dim);
  for (std::size_t i = 0; i + 1 < cfg.hyper_depth; ++i)
    dims.push_back(cfg.scene_dim);
  dims.push_back(cfg.lfn_param_count());
  HyperNet h;
  h.mlp = make_mlp(dims, seed);
  return h;
}

Tensor light_field_forward(const NetConfig& cfg, const Tensor& rays,
                           const Tensor& psi) {
  if (!rays.defined() || rays.shape().size() != 2 || rays.shape()[1] != 6) {
    throw DimensionError("light field net expects rays as [n,6]");
  }
  if (!psi.defined() || psi.size() != cfg.lfn_param_count()) {
    throw DimensionError(
        "light field weights have size " +
        std::to_string(psi.defined() ? psi.size() : 0) + ", expected " +
        std::to_string(cfg.lfn_param_count()));
  }
  std::size_t w = cfg.lfn_width;
  std::size_t off = 0;
  auto take = [&](std::size_t in, std::size_t out) {
    Tensor W = ad::reshape(ad::slice(psi, off, in * out), {in, out});
    off += in * out;
    Tensor b = ad::slice(psi, off, out);
    off += out;
    return AffineLayer{W, b};
  };
  Tensor h = rays;
  for (std::size_t i = 0; i < cfg.lfn_depth; ++i) {
    std::size_t in = i == 0 ? 6 : w;
    std::size_t out = i + 1 == cfg.lfn_depth ? 3 : w;
    AffineLayer l = take(in, out);
    h = ad::add_bias(ad::matmul(h, l.W), l.b);
    if (i + 1 < cfg.lfn_depth) h = ad::relu(h);
  }
  return h;
}

Tensor stack_pair(const std::vector<float>& a, const std::vector<float>& b,
                  std::size_t width, std::size_t height) {
  std::size_t hw = width * height;
  if (a.size() != hw * 3 || b.size() != hw * 3) {
    throw DimensionError("stack_pair: image buffers do not match " +
                         std::to_string(width) + "x" + std::to_string(height));
  }
  std::vector<double> out(6 * hw);
  // interleaved rgb -> channel planes
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < hw; ++i) {
      out[c * hw + i] = static_cast<double>(a[i * 3 + c]);
      out[(3 + c) * hw + i] = static_cast<double>(b[i * 3 + c]);
    }
  }
  return Tensor::from(std::move(out), {6, height, width});
}

}  // namespace lucid::nn
