#pragma once

// Learnable camera: a shared focal length, a principal point, and a small
// freeform correction network that bends points on the normalized image
// plane. The whole pixel-to-ray path is differentiable so calibration can
// be driven by the photometric objective.

#include <cstdint>

#include "lucid/dataset.hpp"
#include "lucid/nets.hpp"
#include "lucid/tensor.hpp"

namespace lucid {

struct Intrinsics {
  ad::Tensor f;   // [1], pixels, shared between axes
  ad::Tensor cx;  // [1]
  ad::Tensor cy;  // [1]

  // f starts at the image width (a deliberate ~wrong guess that training
  // must walk down); the principal point starts at the pixel-grid center
  // and stays frozen unless explicitly trained.
  static Intrinsics init(std::size_t width, std::size_t height);
};

struct CameraModel {
  std::size_t width = 0;
  std::size_t height = 0;
  Intrinsics k;
  nn::Mlp distortion;  // (u,v) in [-1,1]^2 -> additive plane correction

  static CameraModel init(std::size_t width, std::size_t height,
                          std::uint64_t seed);

  // [n,2] pixel coordinates -> [n,2] normalized plane points
  // (u - cx)/f + delta_x(u,v), same for y. `with_distortion` skips the
  // correction term entirely (used by the undistorted ablation).
  ad::Tensor plane_points(const ad::Tensor& pixels,
                          bool with_distortion = true) const;

  // [n,2] pixels -> [n,3] unit direction vectors in the camera frame
  ad::Tensor pixels_to_unit_dirs(const ad::Tensor& pixels,
                                 bool with_distortion = true) const;

  std::vector<ad::Tensor*> intrinsic_params();   // f only by default
  std::vector<ad::Tensor*> center_params();      // cx, cy
  std::vector<ad::Tensor*> distortion_params();
};

// Regular pixel-center grid [n,2] over the image, stepping by `stride`.
ad::Tensor make_pixel_grid(std::size_t width, std::size_t height,
                           std::size_t stride);

// Ground-truth plane point for a pixel under the generator's camera
// (pinhole + forward radial distortion).
void truth_plane_point(const CameraTruth& cam, double u, double v,
                       double& x, double& y);

}  // namespace lucid
