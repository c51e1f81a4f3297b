#pragma once

// Procedural test scene: a single textured sphere floating in a direction
// colored void. Everything about it is analytic, so a renderer, a pose
// estimator and a calibration can all be checked against closed forms.

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "lucid/dataset.hpp"
#include "lucid/geometry.hpp"
#include "lucid/image.hpp"

namespace lucid {

struct SphereScene {
  Eigen::Vector3d center{0.0, 0.0, 2.0};
  double radius = 0.7;

  // Smaller textured spheres at other depths. Their occlusion edges and
  // parallax are what tie the image motion to the true camera geometry; a
  // single smooth body leaves the focal length nearly unobservable.
  struct Satellite {
    Eigen::Vector3d center;
    double radius;
    double phase;  // texture longitude offset so each body looks distinct
  };
  std::array<Satellite, 2> satellites{{{{0.78, -0.40, 1.25}, 0.27, 2.1},
                                       {{-1.15, 0.60, 2.90}, 0.40, 4.4}}};

  // Color seen along a world-space ray: nearest sphere hit wins. A sphere is
  // hit when the smaller intersection root, measured from the canonical line
  // origin, is non-negative; if nothing is hit the background encodes the
  // direction as (d+1)/2 per channel.
  Eigen::Vector3d shade(const PluckerRay& ray) const;
};

struct SimConfig {
  std::size_t width = 64;
  std::size_t height = 64;
  std::size_t frames = 40;
  double f = 60.0;  // pixels
  double k1 = 0.0;  // forward radial distortion on the normalized plane
  double k2 = 0.0;
  std::uint64_t seed = 1;
  SphereScene scene;
};

// Smooth orbit segment around the scene: the camera swings in azimuth and
// elevation while keeping the sphere roughly centered. Consecutive poses
// differ by a few centimeters and a couple of degrees.
std::vector<SE3> make_trajectory(std::size_t n, std::uint64_t seed);

// Renders one pinhole view with the given ground-truth camera. Distortion
// is applied when mapping pixels to rays, i.e. the recorded image is what
// a lens with that radial profile would capture.
Image render_view(const SphereScene& scene, const SE3& cam_to_world,
                  const CameraTruth& cam);

// Renders the trajectory and writes frames, sidecars, manifest.tsv and
// camera.txt into out_dir (created if needed).
Dataset generate_dataset(const SimConfig& cfg, const std::string& out_dir);

}  // namespace lucid
