#include "lucid/simscene.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "lucid/errors.hpp"

namespace lucid {

namespace {

// Per-channel angular frequencies of the sphere texture. Low integers keep
// the pattern smooth enough to photometrically lock onto at 64x64.
constexpr int kFreqTheta[3] = {3, 4, 5};
constexpr int kFreqPhi[3] = {2, 3, 4};

Eigen::Vector3d texture_at(const Eigen::Vector3d& n, double phase) {
  double theta = std::atan2(n.y(), n.x()) + phase;
  double phi = std::acos(std::clamp(n.z(), -1.0, 1.0));
  Eigen::Vector3d c;
  for (int i = 0; i < 3; ++i) {
    c(i) = 0.5 + 0.5 * std::sin(kFreqTheta[i] * theta) *
                     std::sin(kFreqPhi[i] * phi);
  }
  return c;
}

// smaller positive intersection root of the unit-direction ray with a
// sphere, or a negative value when the line misses it
double hit_distance(const Eigen::Vector3d& origin, const Eigen::Vector3d& d,
                    const Eigen::Vector3d& center, double radius) {
  Eigen::Vector3d oc = origin - center;
  double b = oc.dot(d);
  double c = oc.squaredNorm() - radius * radius;
  double disc = b * b - c;
  if (disc < 0.0) return -1.0;
  return -b - std::sqrt(disc);
}

// look-at in a y-down, z-forward world; the image bottom maps to world +y
Eigen::Matrix3d look_at(const Eigen::Vector3d& from,
                        const Eigen::Vector3d& target) {
  Eigen::Vector3d z = target - from;
  if (z.norm() < 1e-9) throw DegeneracyError("look_at: target equals eye");
  z.normalize();
  Eigen::Vector3d down(0.0, 1.0, 0.0);
  Eigen::Vector3d x = down.cross(z);
  if (x.norm() < 1e-9) {
    throw DegeneracyError("look_at: viewing direction is vertical");
  }
  x.normalize();
  Eigen::Vector3d y = z.cross(x);
  Eigen::Matrix3d r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  return r;
}

}  // namespace

Eigen::Vector3d SphereScene::shade(const PluckerRay& ray) const {
  Eigen::Vector3d o0 = ray_canonical_origin(ray);
  double best_t = -1.0;
  Eigen::Vector3d best_center = center;
  double best_radius = radius;
  double best_phase = 0.0;

  auto consider = [&](const Eigen::Vector3d& c, double r, double phase) {
    double t = hit_distance(o0, ray.d, c, r);
    if (t >= 0.0 && (best_t < 0.0 || t < best_t)) {
      best_t = t;
      best_center = c;
      best_radius = r;
      best_phase = phase;
    }
  };
  consider(center, radius, 0.0);
  for (const Satellite& s : satellites) consider(s.center, s.radius, s.phase);

  if (best_t >= 0.0) {
    Eigen::Vector3d n = (o0 + best_t * ray.d - best_center) / best_radius;
    return texture_at(n, best_phase);
  }
  return 0.5 * (ray.d + Eigen::Vector3d::Ones());
}

std::vector<SE3> make_trajectory(std::size_t n, std::uint64_t seed) {
  if (n < 2) throw ConfigError("trajectory needs at least 2 frames");
  std::mt19937_64 rng(seed);
  auto phase = [&rng] {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 * M_PI;
  };
  double p_az = phase(), p_el = phase(), p_rho = phase();
  double p_jx = phase(), p_jy = phase(), p_jz = phase();

  const Eigen::Vector3d center(0.0, 0.0, 2.0);
  const double rho0 = 2.0, a_rho = 0.15;
  const double a_az = 0.70, a_el = 0.21;  // radians

  std::vector<SE3> poses;
  poses.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    double kk = static_cast<double>(k);
    double az = a_az * std::sin(2.0 * M_PI * kk / 193.0 + p_az);
    double el = a_el * std::sin(2.0 * M_PI * kk / 157.0 + p_el);
    double rho = rho0 + a_rho * std::sin(2.0 * M_PI * kk / 101.0 + p_rho);
    // unit vector from the sphere center toward the camera; y is down, so
    // positive elevation lifts the camera toward -y
    Eigen::Vector3d u(std::sin(az) * std::cos(el), -std::sin(el),
                      -std::cos(az) * std::cos(el));
    Eigen::Vector3d eye = center + rho * u;
    // decoupled look-at jitter: rotational flow is depth-independent, which
    // helps make the focal length observable from image pairs
    Eigen::Vector3d jitter(
        0.03 * std::sin(2.0 * M_PI * kk / 47.0 + p_jx),
        0.03 * std::sin(2.0 * M_PI * kk / 61.0 + p_jy),
        0.03 * std::sin(2.0 * M_PI * kk / 83.0 + p_jz));
    SE3 pose;
    pose.R = look_at(eye, center + jitter);
    pose.t = eye;
    poses.push_back(pose);
  }
  return poses;
}

Image render_view(const SphereScene& scene, const SE3& cam_to_world,
                  const CameraTruth& cam) {
  if (cam.width == 0 || cam.height == 0 || cam.f <= 0.0) {
    throw ConfigError("render_view: camera has empty geometry");
  }
  Image img(cam.width, cam.height);
  for (std::size_t v = 0; v < cam.height; ++v) {
    for (std::size_t u = 0; u < cam.width; ++u) {
      double x = (static_cast<double>(u) - cam.cx) / cam.f;
      double y = (static_cast<double>(v) - cam.cy) / cam.f;
      double r2 = x * x + y * y;
      double s = 1.0 + cam.k1 * r2 + cam.k2 * r2 * r2;
      Eigen::Vector3d dir_cam(x * s, y * s, 1.0);
      PluckerRay ray = plucker_from_point_dir(
          cam_to_world.t, cam_to_world.R * dir_cam);
      Eigen::Vector3d c = scene.shade(ray);
      for (int ch = 0; ch < 3; ++ch)
        img.at(v, u, ch) = static_cast<float>(c(ch));
    }
  }
  return img;
}

Dataset generate_dataset(const SimConfig& cfg, const std::string& out_dir) {
  namespace fs = std::filesystem;
  if (cfg.frames < 2) throw ConfigError("dataset needs at least 2 frames");
  fs::create_directories(out_dir);

  CameraTruth cam;
  cam.width = cfg.width;
  cam.height = cfg.height;
  cam.f = cfg.f;
  cam.cx = (static_cast<double>(cfg.width) - 1.0) / 2.0;
  cam.cy = (static_cast<double>(cfg.height) - 1.0) / 2.0;
  cam.k1 = cfg.k1;
  cam.k2 = cfg.k2;

  std::vector<SE3> poses = make_trajectory(cfg.frames, cfg.seed);
  std::vector<FrameRecord> frames;
  frames.reserve(cfg.frames);
  for (std::size_t k = 0; k < cfg.frames; ++k) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%04zu.ppm", k);
    Image img = render_view(cfg.scene, poses[k], cam);
    fs::path ppm = fs::path(out_dir) / name;
    save_ppm(img, ppm.string());
    save_f32(img, sidecar_path(ppm.string()));
    frames.push_back({k, name, poses[k]});
  }
  write_manifest((fs::path(out_dir) / "manifest.tsv").string(), frames);
  write_camera_file((fs::path(out_dir) / "camera.txt").string(), cam);

  Dataset ds;
  ds.root = out_dir;
  ds.frames = std::move(frames);
  ds.camera = cam;
  return ds;
}

}  // namespace lucid
