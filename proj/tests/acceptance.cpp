// Acceptance gate. Groups of criteria run as separate invocations:
//   acceptance props [--readme PATH]   fast property checks    (A6, A7)
//   acceptance cam                     calibration pipeline    (A1, A2)
//   acceptance odom                    ablations + label study (A3, A4, A5)
// Every criterion prints exactly one "Axx PASS/FAIL detail" line. The
// process exits 0 only if all requested criteria pass. Trained runs are
// cached under the work directory and reused when the exact configuration
// matches; delete the directory to retrain from scratch.

#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lucid/eval.hpp"
#include "lucid/simscene.hpp"
#include "lucid/trainer.hpp"

using namespace lucid;
namespace fs = std::filesystem;

namespace {

// ---- pinned tolerances -----------------------------------------------------

constexpr double kFocalTolerance = 0.02;        // A1: 2% of f_true
constexpr double kCleanShiftRatioMax = 0.1;     // A2, undistorted camera
constexpr double kDistortedShiftRatioMax = 0.5; // A2, radial camera
constexpr double kScaleRatioLo = 0.8;           // A5
constexpr double kScaleRatioHi = 1.25;          // A5
constexpr double kGradTolerance = 1e-4;         // A6
constexpr double kGeomTolerance = 1e-9;         // A6
const std::vector<std::uint64_t> kSeeds{1, 2, 3};

// ---- reporting -------------------------------------------------------------

bool g_all_pass = true;

void report(const char* id, bool pass, const std::string& detail) {
  std::printf("%s %s %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  g_all_pass = g_all_pass && pass;
}

std::string fmt(const char* spec, ...) {
  char buf[512];
  va_list args;
  va_start(args, spec);
  std::vsnprintf(buf, sizeof(buf), spec, args);
  va_end(args);
  return buf;
}

// ---- cached datasets and runs ----------------------------------------------

fs::path g_work = "acceptance_work";

Dataset cached_dataset(const std::string& name, const SimConfig& cfg) {
  fs::path dir = g_work / name;
  if (fs::exists(dir / "manifest.tsv")) {
    Dataset ds = Dataset::load(dir.string());
    if (ds.frames.size() == cfg.frames && ds.camera.width == cfg.width &&
        ds.camera.f == cfg.f && ds.camera.k1 == cfg.k1 &&
        ds.camera.k2 == cfg.k2) {
      return ds;
    }
    fs::remove_all(dir);
  }
  return generate_dataset(cfg, dir.string());
}

std::string fingerprint(const std::string& dataset, const TrainConfig& c) {
  std::ostringstream os;
  os << dataset << '|' << c.epochs << ',' << c.stage2_epoch << ','
     << c.stage3_epoch << ',' << c.rays_per_step << '|' << c.lr_encoder << ','
     << c.lr_hyper << ',' << c.lr_distortion << ',' << c.lr_intrinsics << ','
     << c.grad_clip << '|' << c.weights.photometric << ','
     << c.weights.translation << ',' << c.weights.rotation << ','
     << c.weights.encoding << '|' << static_cast<int>(c.enc_mode) << '|'
     << c.labelled_fraction << ',' << c.label_seed << '|';
  for (std::size_t w : c.net.trunk_widths) os << w << ' ';
  os << '/';
  for (std::size_t s : c.net.trunk_strides) os << s << ' ';
  os << '|' << c.net.scene_dim << ',' << c.net.hyper_depth << ','
     << c.net.lfn_width << ',' << c.net.lfn_depth << '|'
     << camera_mode_name(c.camera_mode) << '|' << c.train_center << '|'
     << c.seed;
  return os.str();
}

// Trains (or reuses) one run and returns the final model.
Model trained_model(const std::string& run_name, const Dataset& ds,
                    TrainConfig cfg) {
  fs::path dir = g_work / run_name;
  fs::create_directories(dir);
  std::string ckpt = (dir / "model.ckpt").string();
  std::string stamp_path = (dir / "config.txt").string();
  std::string stamp = fingerprint(ds.root, cfg);

  std::ifstream stamp_in(stamp_path);
  std::string prev((std::istreambuf_iterator<char>(stamp_in)), {});
  if (prev == stamp && fs::exists(ckpt)) {
    try {
      return load_model(ckpt, cfg.net);
    } catch (const Error&) {
      // stale artifact; fall through and retrain
    }
  }

  cfg.history_path = (dir / "history.tsv").string();
  Trainer trainer(ds, cfg);
  std::printf("# training %s (%zu epochs, %zu pairs)\n", run_name.c_str(),
              cfg.epochs, ds.pair_count());
  std::fflush(stdout);
  while (trainer.epoch() < cfg.epochs) {
    trainer.run_epochs(1);
    trainer.save_checkpoint(ckpt);
  }
  std::ofstream(stamp_path, std::ios::trunc) << stamp;
  return load_model(ckpt, cfg.net);
}

double rotation_rmse(const Model& model, const Dataset& ds) {
  std::vector<Image> frames = load_all_frames(ds);
  OdometryReport rep = odometry_metrics(predict_pair_poses(model, frames),
                                        dataset_pair_poses(ds));
  return rep.rotation.rmse;
}

// ---- cam group: A1, A2 -----------------------------------------------------

SimConfig cam_scene(double k1, double k2, std::uint64_t seed) {
  SimConfig sim;
  sim.width = 64;
  sim.height = 64;
  sim.frames = 40;
  sim.f = 60.0;
  sim.k1 = k1;
  sim.k2 = k2;
  sim.seed = seed;
  return sim;
}

TrainConfig cam_train_config(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.seed = seed;
  // Calibration at this image scale wants the light field capacity matched to
  // the scene: an oversized head absorbs the focal error instead of exposing
  // it to the optimizer, so the focal never converges. The smaller head also
  // makes the three-seed battery cheap. An earlier focal stage and a longer
  // run give the focal time to settle; the intrinsics lr stays at a step size
  // small relative to f_true = 60 so it lands instead of dithering.
  cfg.epochs = 24;
  cfg.stage2_epoch = 3;
  cfg.stage3_epoch = 21;
  cfg.lr_intrinsics = 0.2;
  cfg.net.lfn_width = 64;
  cfg.net.scene_dim = 128;
  return cfg;
}

void run_cam_group() {
  Dataset clean = cached_dataset("ds_clean", cam_scene(0.0, 0.0, 101));
  Dataset dist = cached_dataset("ds_dist", cam_scene(0.1, 0.01, 101));

  // the untrained camera is the same for every seed: f = width and an
  // exactly zero distortion correction
  double clean_dr0 = radial_shift_error(
      Model::init(TrainConfig{}.net, 64, 64, 1).camera, clean.camera);
  double dist_dr0 = radial_shift_error(
      Model::init(TrainConfig{}.net, 64, 64, 1).camera, dist.camera);

  std::vector<double> f_errs, clean_ratios, dist_ratios;
  for (std::uint64_t seed : kSeeds) {
    TrainConfig cfg = cam_train_config(seed);
    Model mc = trained_model("cam_clean_s" + std::to_string(seed), clean, cfg);
    double f = mc.camera.k.f.item();
    f_errs.push_back(std::fabs(f - clean.camera.f) / clean.camera.f);
    clean_ratios.push_back(radial_shift_error(mc.camera, clean.camera) /
                           clean_dr0);

    Model md = trained_model("cam_dist_s" + std::to_string(seed), dist, cfg);
    dist_ratios.push_back(radial_shift_error(md.camera, dist.camera) /
                          dist_dr0);

    std::printf("# seed %llu: f %.4f, shift ratio clean %.4f dist %.4f\n",
                static_cast<unsigned long long>(seed), f, clean_ratios.back(),
                dist_ratios.back());
  }

  double f_med = median(f_errs);
  report("A1", f_med <= kFocalTolerance,
         fmt("median focal error %.3f%% (tolerance %.1f%%), per seed %.3f%% "
             "%.3f%% %.3f%%",
             100 * f_med, 100 * kFocalTolerance, 100 * f_errs[0],
             100 * f_errs[1], 100 * f_errs[2]));

  double cr = median(clean_ratios), dr = median(dist_ratios);
  report("A2",
         cr <= kCleanShiftRatioMax && dr <= kDistortedShiftRatioMax,
         fmt("median radial-shift ratio: clean %.4f (max %.2f), distorted "
             "%.4f (max %.2f)",
             cr, kCleanShiftRatioMax, dr, kDistortedShiftRatioMax));
}

// ---- odom group: A3, A4, A5 ------------------------------------------------

TrainConfig odom_train_config(std::uint64_t seed, CameraMode mode,
                              bool photometric) {
  TrainConfig cfg;
  cfg.epochs = 6;
  cfg.stage2_epoch = 1;
  cfg.stage3_epoch = 5;
  cfg.rays_per_step = 512;
  // at ~1000 steps per epoch the focal march needs a much smaller step than
  // on a 40-frame set, or it slams past the optimum in the first epoch
  cfg.lr_intrinsics = 0.03;
  cfg.labelled_fraction = 0.1;  // 100 of 1000 frames carry poses
  cfg.label_seed = 17;
  cfg.camera_mode = mode;
  cfg.seed = seed;
  // leaner heads keep the twelve runs tractable on one core; the encoder
  // (the part measured by A3/A4) stays at full size
  cfg.net.scene_dim = 128;
  cfg.net.lfn_width = 64;
  if (!photometric) cfg.weights.photometric = 0.0;
  return cfg;
}

void run_odom_group() {
  SimConfig sim;
  sim.width = 64;
  sim.height = 64;
  sim.frames = 1000;
  sim.f = 60.0;
  sim.k1 = 0.1;
  sim.k2 = 0.01;
  sim.seed = 303;
  Dataset ds = cached_dataset("ds_odom", sim);

  // fresh trajectory under the same camera: pairs never seen in training,
  // for the metric-scale check
  SimConfig held_sim = sim;
  held_sim.frames = 100;
  held_sim.seed = 404;
  Dataset held = cached_dataset("ds_held", held_sim);

  auto mode_rmses = [&](CameraMode mode, bool photometric,
                        const char* tag) {
    std::vector<double> rmses;
    for (std::uint64_t seed : kSeeds) {
      TrainConfig cfg = odom_train_config(seed, mode, photometric);
      Model m = trained_model(
          std::string("odom_") + tag + "_s" + std::to_string(seed), ds, cfg);
      rmses.push_back(rotation_rmse(m, ds));
      std::printf("# %s seed %llu rotation rmse %.4f deg\n", tag,
                  static_cast<unsigned long long>(seed), rmses.back());
      std::fflush(stdout);
    }
    return rmses;
  };

  std::vector<double> full = mode_rmses(CameraMode::kFull, true, "full");
  std::vector<double> nodist =
      mode_rmses(CameraMode::kNoDistortion, true, "no_distortion");
  std::vector<double> noint =
      mode_rmses(CameraMode::kNoIntrinsics, true, "no_intrinsics");
  std::vector<double> base = mode_rmses(CameraMode::kFull, false, "baseline");

  double m_full = median(full), m_nd = median(nodist), m_ni = median(noint);
  report("A3", m_full <= m_nd && m_nd <= m_ni,
         fmt("rotation RMSE ordering: full %.4f <= no_distortion %.4f <= "
             "no_intrinsics %.4f",
             m_full, m_nd, m_ni));

  double m_base = median(base);
  report("A4", m_full <= m_base,
         fmt("rotation RMSE: semi-supervised %.4f <= supervised-only %.4f "
             "(same 10%% labels)",
             m_full, m_base));

  // the full-mode models are the ones whose labelled subset anchors scale;
  // trained_model() only reloads their cached checkpoints here
  std::vector<Image> held_frames = load_all_frames(held);
  std::vector<SE3> held_truth = dataset_pair_poses(held);
  std::vector<double> scale_medians;
  for (std::uint64_t seed : kSeeds) {
    TrainConfig cfg = odom_train_config(seed, CameraMode::kFull, true);
    Model m = trained_model("odom_full_s" + std::to_string(seed), ds, cfg);
    scale_medians.push_back(median(
        translation_ratios(predict_pair_poses(m, held_frames), held_truth)));
  }
  double sm = median(scale_medians);
  report("A5", sm >= kScaleRatioLo && sm <= kScaleRatioHi,
         fmt("median held-out |t_pred|/|t_gt| %.4f (range [%.2f, %.2f]), per "
             "seed %.4f %.4f %.4f",
             sm, kScaleRatioLo, kScaleRatioHi, scale_medians[0],
             scale_medians[1], scale_medians[2]));
}

// ---- props group: A6, A7 ---------------------------------------------------

bool check_gradients(std::string& detail) {
  using ad::Tensor;
  double worst = 0.0;
  bool ok = true;
  auto probe = [&](const ad::GradCheckReport& rep) {
    worst = std::max(worst, rep.max_rel_dev);
    ok = ok && rep.ok;
  };

  nn::Mlp mlp = nn::make_mlp({3, 6, 2}, 5);
  probe(ad::grad_check(
      [&](const Tensor& x) { return ad::reduce_sum(ad::square(mlp.forward(x))); },
      ad::xavier_uniform({4, 3}, 6), 1e-5, kGradTolerance));

  Tensor kernels = ad::xavier_uniform({3, 2, 3, 3}, 7);
  probe(ad::grad_check(
      [&](const Tensor& x) {
        return ad::reduce_mean(ad::square(ad::conv2d(x, kernels, 2, 1)));
      },
      ad::xavier_uniform({2, 5, 5}, 8), 1e-5, kGradTolerance));

  Tensor dirs = rows_normalize(ad::xavier_uniform({5, 3}, 9));
  Tensor t = Tensor::from({0.2, -0.1, 0.3}, {3});
  probe(ad::grad_check(
      [&](const Tensor& p6) {
        return ad::reduce_sum(
            ad::square(plucker_rows(rot6d_to_matrix(p6), t, dirs)));
      },
      Tensor::from({0.9, 0.1, -0.2, 0.3, 1.1, 0.2}, {6}), 1e-6,
      kGradTolerance));

  Tensor px = make_pixel_grid(16, 16, 5);
  CameraModel cam = CameraModel::init(16, 16, 10);
  for (double& w : cam.distortion.layers.back().W.data_mut()) w = 0.05;
  probe(ad::grad_check(
      [&](const Tensor& focal) {
        CameraModel probe_cam = cam;
        probe_cam.k.f = focal;
        return ad::reduce_sum(ad::square(probe_cam.pixels_to_unit_dirs(px)));
      },
      Tensor::from({15.0}, {1}), 1e-5, kGradTolerance));

  Tensor target = ad::xavier_uniform({6, 3}, 11);
  probe(ad::grad_check(
      [&](const Tensor& pred) { return photometric_loss(pred, target); },
      ad::xavier_uniform({6, 3}, 12), 1e-5, kGradTolerance));

  detail = fmt("gradient checks max_rel_dev %.3e (tol %.0e)", worst,
               kGradTolerance);
  return ok;
}

bool check_rotations(std::string& detail) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    std::vector<double> v(6);
    for (double& x : v) x = d(rng);
    ad::Tensor r = rot6d_to_matrix(ad::Tensor::from(v, {6}));
    Eigen::Matrix3d R;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) R(a, b) = r.at(a * 3 + b);
    worst = std::max(worst,
                     (R.transpose() * R - Eigen::Matrix3d::Identity()).norm());
    worst = std::max(worst, std::fabs(R.determinant() - 1.0));
  }
  detail = fmt("rot6d orthonormality worst %.3e (tol %.0e)", worst,
               kGeomTolerance);
  return worst <= kGeomTolerance;
}

bool check_plucker(std::string& detail) {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> d(-3.0, 3.0);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    Eigen::Vector3d o(d(rng), d(rng), d(rng));
    Eigen::Vector3d dir(d(rng), d(rng), d(rng));
    if (dir.norm() < 1e-3) continue;
    PluckerRay ray = plucker_from_point_dir(o, dir);
    worst = std::max(worst, std::fabs(ray.d.norm() - 1.0));
    worst = std::max(worst, std::fabs(ray.d.dot(ray.m)));

    // sliding the anchor point along the line must not change the ray
    PluckerRay slid = plucker_from_point_dir(o + 2.7 * dir, dir);
    worst = std::max(worst, (slid.d - ray.d).norm());
    worst = std::max(worst, (slid.m - ray.m).norm());

    // a transformed point on the line stays on the transformed line
    SE3 T;
    T.R = Eigen::AngleAxisd(d(rng), Eigen::Vector3d(d(rng), d(rng), d(rng))
                                        .normalized())
              .toRotationMatrix();
    T.t = Eigen::Vector3d(d(rng), d(rng), d(rng));
    PluckerRay moved = transform_ray(T, ray);
    Eigen::Vector3d p = ray_canonical_origin(ray) + 1.3 * ray.d;
    worst = std::max(worst,
                     (T.apply(p).cross(moved.d) - moved.m).norm());
  }
  detail = fmt("plucker invariants worst %.3e (tol %.0e)", worst,
               kGeomTolerance);
  return worst <= kGeomTolerance;
}

bool check_loss_identities(std::string& detail) {
  using ad::Tensor;
  Tensor x = ad::xavier_uniform({5, 3}, 20);
  Tensor t3 = Tensor::from({0.1, -0.2, 0.3}, {3});
  Tensor r = rot6d_to_matrix(Tensor::from({1.0, 0.1, 0.0, -0.1, 1.0, 0.2}, {6}));
  bool zero_ok = photometric_loss(x, x).item() == 0.0 &&
                 translation_loss(t3, t3).item() == 0.0 &&
                 rotation_loss(r, r).item() == 0.0;

  // with a single nonzero weight the total must equal that scaled term
  LossTerms terms;
  terms.photometric = photometric_loss(x, ad::scale(x, 0.5));
  terms.translation = translation_loss(t3, Tensor::from({0.0, 0.0, 0.0}, {3}));
  terms.rotation = rotation_loss(r, rot6d_to_matrix(Tensor::from(
                                        {1.0, 0.0, 0.0, 0.0, 1.0, 0.0}, {6})));
  terms.encoding = encoding_loss(Tensor::from({0.3, -0.4}, {2}),
                                 EncodingLossMode::kMeanSquare);
  bool linear_ok = true;
  const double scales[] = {0.5, 1.0, 2.0, 4.0};
  const Tensor* parts[] = {&terms.photometric, &terms.translation,
                           &terms.rotation, &terms.encoding};
  for (int which = 0; which < 4; ++which) {
    for (double s : scales) {
      LossWeights w{0.0, 0.0, 0.0, 0.0};
      (which == 0   ? w.photometric
       : which == 1 ? w.translation
       : which == 2 ? w.rotation
                    : w.encoding) = s;
      double got = total_loss(terms, w).item();
      double want = s * parts[which]->item();
      linear_ok = linear_ok && got == want;
    }
  }
  detail = fmt("zero-at-equality %s, weight linearity %s (exact)",
               zero_ok ? "exact" : "violated", linear_ok ? "exact" : "violated");
  return zero_ok && linear_ok;
}

bool check_frozen_and_determinism(std::string& detail) {
  SimConfig sim;
  sim.width = 16;
  sim.height = 16;
  sim.frames = 8;
  sim.f = 15.0;
  sim.seed = 3;
  Dataset ds = cached_dataset("ds_props", sim);

  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.stage2_epoch = 1;
  cfg.stage3_epoch = 2;
  cfg.rays_per_step = 16;
  cfg.labelled_fraction = 0.5;
  cfg.net.trunk_widths = {4, 8};
  cfg.net.trunk_strides = {2, 2};
  cfg.net.scene_dim = 8;
  cfg.net.hyper_depth = 2;
  cfg.net.lfn_width = 8;
  cfg.net.lfn_depth = 2;

  // frozen groups: geometry-only epoch must leave camera bytes untouched
  TrainConfig frozen_cfg = cfg;
  frozen_cfg.epochs = 1;
  frozen_cfg.stage2_epoch = 5;
  frozen_cfg.stage3_epoch = 6;
  Trainer frozen(ds, frozen_cfg);
  std::vector<double> f0(frozen.model().camera.k.f.data().begin(),
                         frozen.model().camera.k.f.data().end());
  std::vector<std::vector<double>> d0;
  for (ad::Tensor* t : frozen.model().camera.distortion_params())
    d0.emplace_back(t->data().begin(), t->data().end());
  frozen.run_epochs(1);
  bool frozen_ok =
      std::memcmp(f0.data(), frozen.model().camera.k.f.data().data(),
                  f0.size() * sizeof(double)) == 0;
  auto dist_now = frozen.model().camera.distortion_params();
  for (std::size_t i = 0; i < dist_now.size(); ++i) {
    frozen_ok = frozen_ok &&
                d0[i].size() == dist_now[i]->size() &&
                std::memcmp(d0[i].data(), dist_now[i]->data().data(),
                            d0[i].size() * sizeof(double)) == 0;
  }

  // determinism: identical configs, bitwise identical weights
  Trainer a(ds, cfg), b(ds, cfg);
  a.run();
  b.run();
  bool det_ok = true;
  auto pa = a.model().all_params();
  auto pb = b.model().all_params();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    det_ok = det_ok && pa[i]->size() == pb[i]->size() &&
             std::memcmp(pa[i]->data().data(), pb[i]->data().data(),
                         pa[i]->size() * sizeof(double)) == 0;
  }
  detail = fmt("frozen groups %s, two-run determinism %s (bitwise)",
               frozen_ok ? "stable" : "drifted",
               det_ok ? "identical" : "diverged");
  return frozen_ok && det_ok;
}

bool check_hypernet_width(std::string& detail) {
  nn::NetConfig net;  // shipping defaults
  std::size_t expect = 67331;
  bool count_ok = net.lfn_param_count() == expect;
  nn::HyperNet hyper = nn::make_hypernet(net, 77);
  ad::Tensor z = ad::xavier_uniform({1, net.scene_dim}, 78);
  ad::Tensor psi = hyper.forward(z);
  bool forward_ok = psi.size() == expect;
  detail = fmt("light-field weight count %zu (want %zu), hypernet emits %zu",
               net.lfn_param_count(), expect, psi.size());
  return count_ok && forward_ok;
}

bool check_manifest_roundtrip(std::string& detail) {
  fs::path dir = g_work / "manifest_prop";
  fs::create_directories(dir);
  std::string path = (dir / "manifest.tsv").string();

  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<FrameRecord> frames;
  for (std::size_t i = 0; i < 7; ++i) {
    FrameRecord fr;
    fr.index = i;
    fr.image = "frame_" + std::to_string(i) + ".ppm";
    fr.pose.R = Eigen::AngleAxisd(d(rng), Eigen::Vector3d(d(rng), d(rng),
                                                          d(rng))
                                              .normalized())
                    .toRotationMatrix();
    fr.pose.t = Eigen::Vector3d(d(rng), d(rng), d(rng));
    frames.push_back(fr);
  }
  write_manifest(path, frames);
  std::vector<FrameRecord> back = read_manifest(path);
  bool ok = back.size() == frames.size();
  for (std::size_t i = 0; ok && i < frames.size(); ++i) {
    ok = back[i].index == frames[i].index && back[i].image == frames[i].image;
    for (int a = 0; a < 3 && ok; ++a) {
      ok = std::memcmp(&back[i].pose.t(a), &frames[i].pose.t(a),
                       sizeof(double)) == 0;
      for (int b = 0; b < 3 && ok; ++b) {
        ok = std::memcmp(&back[i].pose.R(a, b), &frames[i].pose.R(a, b),
                         sizeof(double)) == 0;
      }
    }
  }
  detail = fmt("manifest pose round trip over %zu frames %s", frames.size(),
               ok ? "bitwise" : "lossy");
  return ok;
}

void run_props_group(const std::string& readme) {
  std::string detail;
  bool ok = check_gradients(detail);
  std::string all = detail;
  bool ok2 = check_rotations(detail);
  all += "; " + detail;
  bool ok3 = check_plucker(detail);
  all += "; " + detail;
  bool ok4 = check_loss_identities(detail);
  all += "; " + detail;
  bool ok5 = check_frozen_and_determinism(detail);
  all += "; " + detail;
  bool ok6 = check_hypernet_width(detail);
  all += "; " + detail;
  bool ok7 = check_manifest_roundtrip(detail);
  all += "; " + detail;
  report("A6", ok && ok2 && ok3 && ok4 && ok5 && ok6 && ok7, all);

  // the desk-scale exclusions must be written down where users see them
  std::ifstream in(readme);
  std::string text((std::istreambuf_iterator<char>(in)), {});
  bool has_captured = text.find("captured") != std::string::npos;
  bool has_colmap = text.find("COLMAP") != std::string::npos;
  bool has_timing = text.find("timing") != std::string::npos;
  report("A7", in.good() && has_captured && has_colmap && has_timing,
         fmt("documented exclusions in %s: captured-imagery %s, COLMAP %s, "
             "timings %s",
             readme.c_str(), has_captured ? "yes" : "no",
             has_colmap ? "yes" : "no", has_timing ? "yes" : "no"));
}

}  // namespace

int main(int argc, char** argv) {
  std::string group = argc > 1 ? argv[1] : "";
  std::string readme = "README.md";
  for (int i = 2; i + 1 < argc; i += 2) {
    std::string flag = argv[i];
    if (flag == "--readme") readme = argv[i + 1];
    else if (flag == "--work") g_work = argv[i + 1];
    else {
      std::fprintf(stderr, "unknown flag %s\n", flag.c_str());
      return 1;
    }
  }

  try {
    fs::create_directories(g_work);
    if (group == "props") run_props_group(readme);
    else if (group == "cam") run_cam_group();
    else if (group == "odom") run_odom_group();
    else {
      std::fprintf(stderr, "usage: acceptance props|cam|odom "
                           "[--readme PATH] [--work DIR]\n");
      return 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "acceptance run failed: %s\n", e.what());
    return 2;
  }
  return g_all_pass ? 0 : 1;
}
