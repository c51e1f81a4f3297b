#include "lucid/camera.hpp"

#include "lucid/geometry.hpp"

namespace lucid {

using ad::Tensor;

Intrinsics Intrinsics::init(std::size_t width, std::size_t height) {
  if (width < 2 || height < 2) {
    throw ConfigError("intrinsics need an image of at least 2x2");
  }
  Intrinsics k;
  k.f = Tensor::from({static_cast<double>(width)}, {1}, true);
  k.cx = Tensor::from({(static_cast<double>(width) - 1.0) / 2.0}, {1}, true);
  k.cy = Tensor::from({(static_cast<double>(height) - 1.0) / 2.0}, {1}, true);
  return k;
}

CameraModel CameraModel::init(std::size_t width, std::size_t height,
                              std::uint64_t seed) {
  CameraModel cam;
  cam.width = width;
  cam.height = height;
  cam.k = Intrinsics::init(width, height);
  cam.distortion = nn::make_mlp({2, 8, 8, 2}, seed);
  // start as a perfect pinhole: the correction must be exactly zero
  nn::zero_layer(cam.distortion.layers.back());
  return cam;
}

Tensor CameraModel::plane_points(const Tensor& pixels,
                                 bool with_distortion) const {
  if (!pixels.defined() || pixels.shape().size() != 2 ||
      pixels.shape()[1] != 2) {
    throw DimensionError("plane_points expects pixels as [n,2]");
  }
  if (k.f.item() <= 0.0) {
    throw DomainError("focal length must stay positive, got " +
                      std::to_string(k.f.item()));
  }
  Tensor u = ad::slice_col(pixels, 0);
  Tensor v = ad::slice_col(pixels, 1);
  Tensor x = ad::div(ad::sub(u, k.cx), k.f);
  Tensor y = ad::div(ad::sub(v, k.cy), k.f);
  Tensor plane = ad::hconcat({x, y});
  if (!with_distortion) return plane;

  // correction input: pixel coordinates scaled to [-1,1]
  double sx = 2.0 / (static_cast<double>(width) - 1.0);
  double sy = 2.0 / (static_cast<double>(height) - 1.0);
  Tensor un = ad::add_const(ad::scale(u, sx), -1.0);
  Tensor vn = ad::add_const(ad::scale(v, sy), -1.0);
  Tensor delta = distortion.forward(ad::hconcat({un, vn}));
  return ad::add(plane, delta);
}

Tensor CameraModel::pixels_to_unit_dirs(const Tensor& pixels,
                                        bool with_distortion) const {
  Tensor plane = plane_points(pixels, with_distortion);
  Tensor ones = Tensor::full({plane.shape()[0]}, 1.0);
  Tensor dirs = ad::hconcat({plane, ones});
  return rows_normalize(dirs);
}

std::vector<Tensor*> CameraModel::intrinsic_params() { return {&k.f}; }

std::vector<Tensor*> CameraModel::center_params() { return {&k.cx, &k.cy}; }

std::vector<Tensor*> CameraModel::distortion_params() {
  return distortion.params();
}

Tensor make_pixel_grid(std::size_t width, std::size_t height,
                       std::size_t stride) {
  if (stride == 0) throw ConfigError("pixel grid stride must be >= 1");
  std::vector<double> px;
  for (std::size_t v = 0; v < height; v += stride) {
    for (std::size_t u = 0; u < width; u += stride) {
      px.push_back(static_cast<double>(u));
      px.push_back(static_cast<double>(v));
    }
  }
  std::size_t n = px.size() / 2;
  return Tensor::from(std::move(px), {n, 2});
}

void truth_plane_point(const CameraTruth& cam, double u, double v, double& x,
                       double& y) {
  double x0 = (u - cam.cx) / cam.f;
  double y0 = (v - cam.cy) / cam.f;
  double r2 = x0 * x0 + y0 * y0;
  double s = 1.0 + cam.k1 * r2 + cam.k2 * r2 * r2;
  x = x0 * s;
  y = y0 * s;
}

}  // namespace lucid
