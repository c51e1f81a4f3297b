#pragma once

// Evaluation utilities: relative-pose error statistics, calibration error
// against the generating camera, and novel-view rendering from a trained
// model. Everything here is read-only and runs without a tape.

#include <cstddef>
#include <string>
#include <vector>

#include "lucid/camera.hpp"
#include "lucid/dataset.hpp"
#include "lucid/geometry.hpp"
#include "lucid/image.hpp"
#include "lucid/trainer.hpp"

namespace lucid {

// Population statistics, so rmse^2 == mean^2 + stddev^2 holds exactly.
struct Stats {
  double mean = 0.0;
  double stddev = 0.0;
  double rmse = 0.0;
};

Stats aggregate(const std::vector<double>& xs);
double median(std::vector<double> xs);

struct OdometryReport {
  std::vector<double> translation_err;  // per pair, metres
  std::vector<double> rotation_err;     // per pair, degrees
  Stats translation;
  Stats rotation;
};

// Per-pair translation gap |t_pred - t_gt| and geodesic rotation angle.
OdometryReport odometry_metrics(const std::vector<SE3>& predicted,
                                const std::vector<SE3>& truth);

// Encoder-predicted pose for every consecutive frame pair.
std::vector<SE3> predict_pair_poses(const Model& model,
                                    const std::vector<Image>& frames);
std::vector<SE3> dataset_pair_poses(const Dataset& ds);
std::vector<Image> load_all_frames(const Dataset& ds);

// |t_pred| / |t_gt| per pair; the metric-scale health check.
std::vector<double> translation_ratios(const std::vector<SE3>& predicted,
                                       const std::vector<SE3>& truth);

// Mean radial shift between the learned pixel-to-plane map and the
// generating camera, sampled on a pixel grid with the given stride.
double radial_shift_error(const CameraModel& learned, const CameraTruth& truth,
                          std::size_t stride = 4);

// Renders the scene encoded from pair (a,b) out of `query`, a camera pose
// relative to frame a; the identity reproduces frame a's viewpoint.
Image render_novel_view(const Model& model, const Image& a, const Image& b,
                        const SE3& query);
Image difference_image(const Image& x, const Image& y);
double mean_squared_color_error(const Image& x, const Image& y);

// One header line and one row with the six aggregate fields.
void write_odometry_tsv(const std::string& path, const OdometryReport& rep);

// key<TAB>value lines (f, cx, cy, optionally delta_r_mean) followed by a
// sampled distortion grid, one "u v dx dy" row per grid pixel.
void write_calib_report(const std::string& path, const CameraModel& cam,
                        const CameraTruth* truth, std::size_t grid_stride = 4);

}  // namespace lucid
