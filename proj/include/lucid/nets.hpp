#pragma once

// Network blocks: plain MLPs, the pair encoder, the hypernetwork that emits
// light-field weights, and the light-field renderer itself. All weights are
// tape tensors; forward passes record onto the active tape.

#include <cstdint>
#include <utility>
#include <vector>

#include "lucid/tensor.hpp"

namespace lucid::nn {

using ad::Tensor;

struct AffineLayer {
  Tensor W;  // [in, out]
  Tensor b;  // [out]
};

// relu between layers, linear output
struct Mlp {
  std::vector<AffineLayer> layers;

  Tensor forward(const Tensor& x) const;  // [n, in] -> [n, out]
  std::vector<Tensor*> params();
  std::size_t param_count() const;
};

Mlp make_mlp(const std::vector<std::size_t>& dims, std::uint64_t seed);

// Clears a layer in place; used for heads that must start as the identity
// correction (predict exactly zero until trained).
void zero_layer(AffineLayer& layer);

struct ConvLayer {
  Tensor K;  // [out, in, k, k]
  Tensor b;  // [out]
  std::size_t stride = 1;
  std::size_t padding = 1;
};

// Widths and depths are configurable so tests can run scaled-down copies;
// the defaults are the shipping architecture.
struct NetConfig {
  std::vector<std::size_t> trunk_widths{16, 32, 64, 128, 128, 128, 128};
  std::vector<std::size_t> trunk_strides{2, 2, 2, 2, 1, 1, 1};
  std::size_t scene_dim = 256;   // encoding size, also hypernet hidden width
  std::size_t hyper_depth = 6;   // affine layers in the hypernet
  std::size_t lfn_width = 128;
  std::size_t lfn_depth = 6;     // affine layers in the light field net

  std::size_t lfn_param_count() const;
};

// Shared trunk over a stacked image pair [6,H,W]; one head pools 1x1-conv
// features into a 9-vector (6 rotation + 3 translation), the other pools
// trunk features and lifts them to the scene encoding.
struct Encoder {
  std::vector<ConvLayer> trunk;
  std::vector<ConvLayer> pose_head;  // 1x1 convs, linear last
  Mlp scene_head;

  struct Output {
    Tensor pose9;  // [9]
    Tensor z;      // [scene_dim]
  };
  Output forward(const Tensor& pair) const;
  std::vector<Tensor*> params();
};

Encoder make_encoder(const NetConfig& cfg, std::uint64_t seed);

// Raw pose 9-vector -> ([3,3] rotation, [3] translation). The rotation part
// is a residual around the identity so an untrained head yields R = I.
std::pair<Tensor, Tensor> pose_to_rt(const Tensor& pose9);

// scene encoding [1, scene_dim] -> flat light-field weights [param_count]
struct HyperNet {
  Mlp mlp;
  Tensor forward(const Tensor& z_row) const;
  std::vector<Tensor*> params() { return mlp.params(); }
};

HyperNet make_hypernet(const NetConfig& cfg, std::uint64_t seed);

// Renders colors from Plücker rays [n,6] using externally supplied flat
// weights (usually the hypernet output, still on the tape).
Tensor light_field_forward(const NetConfig& cfg, const Tensor& rays,
                           const Tensor& psi);

// Stacks two RGB images into the [6,H,W] encoder input.
Tensor stack_pair(const std::vector<float>& a, const std::vector<float>& b,
                  std::size_t width, std::size_t height);

}  // namespace lucid::nn
