#include "lucid/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "lucid/errors.hpp"

namespace lucid {

using ad::Tensor;

Stats aggregate(const std::vector<double>& xs) {
  if (xs.empty()) throw ContractError("aggregate needs at least one sample");
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size());
  Stats s;
  s.mean = mean;
  s.stddev = std::sqrt(var);
  s.rmse = std::sqrt(mean * mean + var);
  return s;
}

double median(std::vector<double> xs) {
  if (xs.empty()) throw ContractError("median needs at least one sample");
  std::sort(xs.begin(), xs.end());
  std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

OdometryReport odometry_metrics(const std::vector<SE3>& predicted,
                                const std::vector<SE3>& truth) {
  if (predicted.size() != truth.size()) {
    throw ContractError("odometry_metrics: " + std::to_string(predicted.size()) +
                        " predictions vs " + std::to_string(truth.size()) +
                        " references");
  }
  OdometryReport rep;
  rep.translation_err.reserve(predicted.size());
  rep.rotation_err.reserve(predicted.size());
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    rep.translation_err.push_back((predicted[i].t - truth[i].t).norm());
    rep.rotation_err.push_back(rotation_angle_deg(predicted[i].R, truth[i].R));
  }
  rep.translation = aggregate(rep.translation_err);
  rep.rotation = aggregate(rep.rotation_err);
  return rep;
}

std::vector<SE3> predict_pair_poses(const Model& model,
                                    const std::vector<Image>& frames) {
  if (frames.size() < 2) {
    throw ContractError("pose prediction needs at least two frames");
  }
  std::vector<SE3> out;
  out.reserve(frames.size() - 1);
  for (std::size_t i = 0; i + 1 < frames.size(); ++i) {
    out.push_back(model.encode_pair(frames[i], frames[i + 1]).pose);
  }
  return out;
}

std::vector<SE3> dataset_pair_poses(const Dataset& ds) {
  std::vector<SE3> out;
  out.reserve(ds.pair_count());
  for (std::size_t i = 0; i < ds.pair_count(); ++i) {
    out.push_back(ds.pair_pose(i));
  }
  return out;
}

std::vector<Image> load_all_frames(const Dataset& ds) {
  std::vector<Image> out;
  out.reserve(ds.frames.size());
  for (std::size_t i = 0; i < ds.frames.size(); ++i) {
    out.push_back(load_frame(ds.frame_path(i)));
  }
  return out;
}

std::vector<double> translation_ratios(const std::vector<SE3>& predicted,
                                       const std::vector<SE3>& truth) {
  if (predicted.size() != truth.size()) {
    throw ContractError("translation_ratios: sequence length mismatch");
  }
  std::vector<double> out;
  out.reserve(predicted.size());
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    double denom = truth[i].t.norm();
    if (denom <= 0.0) {
      throw DegeneracyError("translation_ratios: reference motion " +
                            std::to_string(i) + " has zero length");
    }
    out.push_back(predicted[i].t.norm() / denom);
  }
  return out;
}

double radial_shift_error(const CameraModel& learned, const CameraTruth& truth,
                          std::size_t stride) {
  if (learned.width != truth.width || learned.height != truth.height) {
    throw ContractError("radial_shift_error: image dimensions differ");
  }
  Tensor grid = make_pixel_grid(learned.width, learned.height, stride);
  Tensor plane = learned.plane_points(grid);
  std::size_t n = grid.shape()[0];
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double tx, ty;
    truth_plane_point(truth, grid.at(i * 2), grid.at(i * 2 + 1), tx, ty);
    sum += std::hypot(plane.at(i * 2) - tx, plane.at(i * 2 + 1) - ty);
  }
  return sum / static_cast<double>(n);
}

Image render_novel_view(const Model& model, const Image& a, const Image& b,
                        const SE3& query) {
  Model::PairCode code = model.encode_pair(a, b);
  std::size_t w = model.camera.width, h = model.camera.height;
  Tensor pixels = make_pixel_grid(w, h, 1);
  Tensor dirs = model.camera.pixels_to_unit_dirs(pixels);

  std::vector<double> rv(9), tv(3);
  for (int i = 0; i < 3; ++i) {
    tv[i] = query.t(i);
    for (int j = 0; j < 3; ++j) rv[i * 3 + j] = query.R(i, j);
  }
  Tensor rays = plucker_rows(Tensor::from(rv, {3, 3}), Tensor::from(tv, {3}),
                             dirs);
  Tensor colors = nn::light_field_forward(model.net, rays, code.psi);

  Image img(w, h);
  for (std::size_t i = 0; i < w * h; ++i) {
    for (int c = 0; c < 3; ++c) {
      double v = std::clamp(colors.at(i * 3 + c), 0.0, 1.0);
      img.rgb[i * 3 + c] = static_cast<float>(v);
    }
  }
  return img;
}

Image difference_image(const Image& x, const Image& y) {
  if (x.width != y.width || x.height != y.height) {
    throw DimensionError("difference_image: size mismatch");
  }
  Image out(x.width, x.height);
  for (std::size_t i = 0; i < out.rgb.size(); ++i) {
    out.rgb[i] = std::fabs(x.rgb[i] - y.rgb[i]);
  }
  return out;
}

double mean_squared_color_error(const Image& x, const Image& y) {
  if (x.width != y.width || x.height != y.height) {
    throw DimensionError("mean_squared_color_error: size mismatch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < x.rgb.size(); ++i) {
    double d = static_cast<double>(x.rgb[i]) - static_cast<double>(y.rgb[i]);
    sum += d * d;
  }
  return sum / static_cast<double>(x.rgb.size());
}

void write_odometry_tsv(const std::string& path, const OdometryReport& rep) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for write");
  out << "trans_mean\ttrans_std\ttrans_rmse\trot_mean\trot_std\trot_rmse\n";
  char buf[200];
  std::snprintf(buf, sizeof(buf), "%.17g\t%.17g\t%.17g\t%.17g\t%.17g\t%.17g\n",
                rep.translation.mean, rep.translation.stddev,
                rep.translation.rmse, rep.rotation.mean, rep.rotation.stddev,
                rep.rotation.rmse);
  out << buf;
  if (!out) throw IoError("write failed for " + path);
}

void write_calib_report(const std::string& path, const CameraModel& cam,
                        const CameraTruth* truth, std::size_t grid_stride) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for write");
  char buf[160];
  auto kv = [&](const char* key, double v) {
    std::snprintf(buf, sizeof(buf), "%s\t%.17g\n", key, v);
    out << buf;
  };
  kv("f", cam.k.f.item());
  kv("cx", cam.k.cx.item());
  kv("cy", cam.k.cy.item());
  if (truth != nullptr) {
    kv("f_true", truth->f);
    kv("delta_r_mean", radial_shift_error(cam, *truth, grid_stride));
  }

  Tensor grid = make_pixel_grid(cam.width, cam.height, grid_stride);
  Tensor with = cam.plane_points(grid, true);
  Tensor without = cam.plane_points(grid, false);
  out << "# u\tv\tdx\tdy\n";
  for (std::size_t i = 0; i < grid.shape()[0]; ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g\t%.17g\t%.17g\t%.17g\n",
                  grid.at(i * 2), grid.at(i * 2 + 1),
                  with.at(i * 2) - without.at(i * 2),
                  with.at(i * 2 + 1) - without.at(i * 2 + 1));
    out << buf;
  }
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace lucid
