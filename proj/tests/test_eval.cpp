#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "lucid/eval.hpp"
#include "lucid/simscene.hpp"

using namespace lucid;
namespace fs = std::filesystem;

namespace {

// Independent oracle: Welford's streaming mean/variance.
struct Streaming {
  std::size_t n = 0;
  double mean = 0.0, m2 = 0.0, sumsq = 0.0;
  void push(double x) {
    ++n;
    double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
    sumsq += x * x;
  }
  double var_pop() const { return m2 / static_cast<double>(n); }
  double rms() const { return std::sqrt(sumsq / static_cast<double>(n)); }
};

SE3 make_pose(double angle, const Eigen::Vector3d& axis,
              const Eigen::Vector3d& t) {
  SE3 p;
  p.R = Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
  p.t = t;
  return p;
}

fs::path temp_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

nn::NetConfig tiny_net() {
  nn::NetConfig net;
  net.trunk_widths = {4, 8};
  net.trunk_strides = {2, 2};
  net.scene_dim = 8;
  net.hyper_depth = 2;
  net.lfn_width = 8;
  net.lfn_depth = 2;
  return net;
}

}  // namespace

TEST_CASE("aggregate matches a streaming second implementation") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> d(-3.0, 7.0);
  std::vector<double> xs;
  Streaming oracle;
  for (int i = 0; i < 501; ++i) {
    double x = d(rng);
    xs.push_back(x);
    oracle.push(x);
  }
  Stats s = aggregate(xs);
  CHECK(s.mean == doctest::Approx(oracle.mean).epsilon(1e-12));
  CHECK(s.stddev == doctest::Approx(std::sqrt(oracle.var_pop())).epsilon(1e-12));
  CHECK(s.rmse == doctest::Approx(oracle.rms()).epsilon(1e-12));
  // the population identity the report format relies on
  CHECK(s.rmse * s.rmse ==
        doctest::Approx(s.mean * s.mean + s.stddev * s.stddev).epsilon(1e-9));
  CHECK_THROWS_AS(aggregate({}), ContractError);
}

TEST_CASE("median handles odd, even and degenerate inputs") {
  CHECK(median({3.0}) == 3.0);
  CHECK(median({5.0, 1.0, 2.0}) == 2.0);
  CHECK(median({4.0, 1.0, 2.0, 8.0}) == 3.0);
  CHECK_THROWS_AS(median({}), ContractError);
}

TEST_CASE("perfect odometry predictions give all-zero errors") {
  std::vector<SE3> gt;
  for (int i = 0; i < 5; ++i) {
    gt.push_back(make_pose(0.1 * i, {1, 2, 3}, {0.01 * i, 0.0, 0.02}));
  }
  OdometryReport rep = odometry_metrics(gt, gt);
  CHECK(rep.translation.mean == 0.0);
  CHECK(rep.translation.rmse == 0.0);
  CHECK(rep.rotation.mean == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("constant translation offset gives mean=rmse and zero std") {
  std::vector<SE3> gt(4), pred(4);
  for (int i = 0; i < 4; ++i) {
    gt[i] = make_pose(0.0, {0, 0, 1}, {0.1 * i, 0.2, 0.0});
    pred[i] = gt[i];
    pred[i].t += Eigen::Vector3d(0.0, 0.0, 0.02);
  }
  OdometryReport rep = odometry_metrics(pred, gt);
  CHECK(rep.translation.mean == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(rep.translation.stddev == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(rep.translation.rmse == doctest::Approx(0.02).epsilon(1e-12));
}

TEST_CASE("rotation errors are geodesic angles in degrees") {
  std::vector<SE3> gt, pred;
  std::vector<double> degs{0.5, 3.0, 11.0};
  for (double deg : degs) {
    SE3 base = make_pose(0.7, {1, 0, 2}, {0.1, 0.0, 0.0});
    SE3 off = base;
    off.R = base.R *
            Eigen::AngleAxisd(deg * M_PI / 180.0, Eigen::Vector3d(0, 1, 0))
                .toRotationMatrix();
    gt.push_back(base);
    pred.push_back(off);
  }
  OdometryReport rep = odometry_metrics(pred, gt);
  for (std::size_t i = 0; i < degs.size(); ++i) {
    CHECK(rep.rotation_err[i] == doctest::Approx(degs[i]).epsilon(1e-9));
  }
  CHECK_THROWS_AS(odometry_metrics(pred, std::vector<SE3>(2)), ContractError);
}

TEST_CASE("translation ratios compare magnitudes pair by pair") {
  std::vector<SE3> gt{make_pose(0, {0, 0, 1}, {0.0, 0.0, 0.04}),
                      make_pose(0, {0, 0, 1}, {0.03, 0.04, 0.0})};
  std::vector<SE3> pred{make_pose(0, {0, 0, 1}, {0.0, 0.0, 0.05}),
                        make_pose(0, {0, 0, 1}, {0.06, 0.08, 0.0})};
  std::vector<double> r = translation_ratios(pred, gt);
  CHECK(r[0] == doctest::Approx(1.25).epsilon(1e-12));
  CHECK(r[1] == doctest::Approx(2.0).epsilon(1e-12));

  std::vector<SE3> zero{make_pose(0, {0, 0, 1}, {0, 0, 0})};
  std::vector<SE3> one{make_pose(0, {0, 0, 1}, {0, 0, 0.1})};
  CHECK_THROWS_AS(translation_ratios(one, zero), DegeneracyError);
}

TEST_CASE("identical cameras have zero radial shift") {
  CameraModel cam = CameraModel::init(16, 16, 5);
  cam.k.f.data_mut()[0] = 15.0;
  CameraTruth truth{16, 16, 15.0, 7.5, 7.5, 0.0, 0.0};
  CHECK(radial_shift_error(cam, truth, 4) <= 1e-15);

  CameraTruth wrong = truth;
  wrong.width = 32;
  CHECK_THROWS_AS(radial_shift_error(cam, wrong, 4), ContractError);
}

TEST_CASE("constant plane displacement reports its euclidean length") {
  CameraModel cam = CameraModel::init(16, 16, 5);
  cam.k.f.data_mut()[0] = 15.0;
  // zero final weights, so the bias is the whole correction
  cam.distortion.layers.back().b.data_mut()[0] = 3e-4;
  cam.distortion.layers.back().b.data_mut()[1] = 4e-4;
  CameraTruth truth{16, 16, 15.0, 7.5, 7.5, 0.0, 0.0};
  CHECK(radial_shift_error(cam, truth, 4) ==
        doctest::Approx(5e-4).epsilon(1e-12));
}

TEST_CASE("pinhole focal gap matches the closed-form mean shift") {
  CameraModel cam = CameraModel::init(16, 16, 5);  // f starts at 16
  CameraTruth truth{16, 16, 15.0, 7.5, 7.5, 0.0, 0.0};

  double gap = std::fabs(1.0 / 16.0 - 1.0 / 15.0);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t v = 0; v < 16; v += 4) {
    for (std::size_t u = 0; u < 16; u += 4) {
      sum += std::hypot((u - 7.5) * gap, (v - 7.5) * gap);
      ++n;
    }
  }
  double oracle = sum / static_cast<double>(n);
  CHECK(radial_shift_error(cam, truth, 4) ==
        doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("radial shift is symmetric in which camera is which") {
  CameraModel cam_a = CameraModel::init(16, 16, 5);
  cam_a.k.f.data_mut()[0] = 14.0;
  CameraModel cam_b = CameraModel::init(16, 16, 5);
  cam_b.k.f.data_mut()[0] = 17.0;
  CameraTruth truth_a{16, 16, 14.0, 7.5, 7.5, 0.0, 0.0};
  CameraTruth truth_b{16, 16, 17.0, 7.5, 7.5, 0.0, 0.0};
  CHECK(radial_shift_error(cam_a, truth_b) ==
        doctest::Approx(radial_shift_error(cam_b, truth_a)).epsilon(1e-12));
}

TEST_CASE("novel views have the configured size and zero self-difference") {
  Model m = Model::init(tiny_net(), 16, 16, 11);
  Image a(16, 16), b(16, 16);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<float> d(0.0f, 1.0f);
  for (auto& v : a.rgb) v = d(rng);
  for (auto& v : b.rgb) v = d(rng);

  SE3 ident;
  Image r1 = render_novel_view(m, a, b, ident);
  CHECK(r1.width == 16);
  CHECK(r1.height == 16);

  Image r2 = render_novel_view(m, a, b, ident);
  Image diff = difference_image(r1, r2);
  for (float v : diff.rgb) CHECK(v == 0.0f);
  CHECK(mean_squared_color_error(r1, r2) == 0.0);

  SE3 moved = ident;
  moved.t = Eigen::Vector3d(0.05, 0.0, 0.0);
  Image r3 = render_novel_view(m, a, b, moved);
  CHECK(r3.rgb.size() == r1.rgb.size());
  for (float v : r3.rgb) {
    CHECK(std::isfinite(v));
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
}

TEST_CASE("report files round trip through plain parsers") {
  fs::path dir = temp_dir("lucid_test_eval_reports");

  std::vector<SE3> gt(3), pred(3);
  for (int i = 0; i < 3; ++i) {
    gt[i] = make_pose(0.1, {0, 0, 1}, {0.05, 0.0, 0.0});
    pred[i] = make_pose(0.1 + 0.01 * i, {0, 0, 1}, {0.05, 0.01, 0.0});
  }
  OdometryReport rep = odometry_metrics(pred, gt);
  std::string opath = (dir / "odom.tsv").string();
  write_odometry_tsv(opath, rep);

  std::ifstream in(opath);
  std::string header, row;
  REQUIRE(std::getline(in, header));
  REQUIRE(std::getline(in, row));
  std::istringstream rs(row);
  double vals[6];
  for (double& v : vals) REQUIRE(static_cast<bool>(rs >> v));
  CHECK(vals[0] == doctest::Approx(rep.translation.mean).epsilon(1e-15));
  CHECK(vals[5] == doctest::Approx(rep.rotation.rmse).epsilon(1e-15));

  CameraModel cam = CameraModel::init(16, 16, 5);
  CameraTruth truth{16, 16, 15.0, 7.5, 7.5, 0.1, 0.01};
  std::string cpath = (dir / "calib.txt").string();
  write_calib_report(cpath, cam, &truth, 4);

  std::ifstream cin_(cpath);
  std::string line;
  std::size_t kv = 0, grid = 0;
  bool saw_f = false;
  while (std::getline(cin_, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string first;
    ls >> first;
    if (first == "f") {
      double v;
      REQUIRE(static_cast<bool>(ls >> v));
      CHECK(v == 16.0);
      saw_f = true;
    }
    double a, b2, c, d;
    std::istringstream ls2(line);
    if (ls2 >> a >> b2 >> c >> d) {
      ++grid;
    } else {
      ++kv;
    }
  }
  CHECK(saw_f);
  CHECK(kv == 5);     // f, cx, cy, f_true, delta_r_mean
  CHECK(grid == 16);  // 4x4 grid at stride 4 on a 16x16 image
}

TEST_CASE("dataset pair poses match the stored trajectory") {
  fs::path dir = temp_dir("lucid_test_eval_ds");
  SimConfig sim;
  sim.width = 16;
  sim.height = 16;
  sim.frames = 5;
  sim.f = 15.0;
  sim.seed = 21;
  Dataset ds = generate_dataset(sim, dir.string());

  std::vector<SE3> pairs = dataset_pair_poses(ds);
  REQUIRE(pairs.size() == 4);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    SE3 direct = ds.frames[i].pose.inverse() * ds.frames[i + 1].pose;
    CHECK((pairs[i].R - direct.R).norm() == doctest::Approx(0.0));
    CHECK((pairs[i].t - direct.t).norm() == doctest::Approx(0.0));
  }

  std::vector<Image> frames = load_all_frames(ds);
  REQUIRE(frames.size() == 5);
  Model m = Model::init(tiny_net(), 16, 16, 4);
  std::vector<SE3> pred = predict_pair_poses(m, frames);
  CHECK(pred.size() == 4);
  OdometryReport rep = odometry_metrics(pred, pairs);
  CHECK(std::isfinite(rep.rotation.rmse));
  CHECK(rep.rotation.rmse * rep.rotation.rmse ==
        doctest::Approx(rep.rotation.mean * rep.rotation.mean +
                        rep.rotation.stddev * rep.rotation.stddev)
            .epsilon(1e-9));
}
