// Command-line surface: dataset synthesis, curriculum training, odometry
// and calibration evaluation, novel-view rendering and a gradient check.
// Exit codes: 0 success, 1 bad usage or invalid input, 2 runtime failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lucid/eval.hpp"
#include "lucid/simscene.hpp"
#include "lucid/trainer.hpp"

namespace fs = std::filesystem;
using namespace lucid;

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::pair<std::string, std::string>> read_kv_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw lucid::ParseError(path + ":" + std::to_string(lineno) +
                              ": expected key=value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw lucid::ParseError(path + ":" + std::to_string(lineno) +
                              ": empty key");
    }
    out.emplace_back(key, value);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ValidationError("config key " + key + ": bad number '" + v + "'");
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    unsigned long long d = std::stoull(v, &pos);
    if (pos == v.size() && v[0] != '-') return d;
  } catch (const std::exception&) {
  }
  throw ValidationError("config key " + key + ": bad integer '" + v + "'");
}

std::size_t parse_size(const std::string& key, const std::string& v) {
  return static_cast<std::size_t>(parse_u64(key, v));
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw ValidationError("config key " + key + ": bad boolean '" + v + "'");
}

std::vector<std::size_t> parse_size_list(const std::string& key,
                                         const std::string& v) {
  std::vector<std::size_t> out;
  std::string item;
  std::istringstream ss(v);
  while (std::getline(ss, item, ',')) {
    out.push_back(parse_size(key, trim(item)));
  }
  if (out.empty()) {
    throw ValidationError("config key " + key + ": empty list");
  }
  return out;
}

void apply_train_key(TrainConfig& cfg, const std::string& key,
                     const std::string& v) {
  if (key == "epochs") cfg.epochs = parse_size(key, v);
  else if (key == "stage2_epoch") cfg.stage2_epoch = parse_size(key, v);
  else if (key == "stage3_epoch") cfg.stage3_epoch = parse_size(key, v);
  else if (key == "rays_per_step") cfg.rays_per_step = parse_size(key, v);
  else if (key == "lr_encoder") cfg.lr_encoder = parse_double(key, v);
  else if (key == "lr_hyper") cfg.lr_hyper = parse_double(key, v);
  else if (key == "lr_distortion") cfg.lr_distortion = parse_double(key, v);
  else if (key == "lr_intrinsics") cfg.lr_intrinsics = parse_double(key, v);
  else if (key == "grad_clip") cfg.grad_clip = parse_double(key, v);
  else if (key == "weights.photometric")
    cfg.weights.photometric = parse_double(key, v);
  else if (key == "weights.translation")
    cfg.weights.translation = parse_double(key, v);
  else if (key == "weights.rotation")
    cfg.weights.rotation = parse_double(key, v);
  else if (key == "weights.encoding")
    cfg.weights.encoding = parse_double(key, v);
  else if (key == "enc_mode") {
    if (v == "mean_square") cfg.enc_mode = EncodingLossMode::kMeanSquare;
    else if (v == "signed_mean") cfg.enc_mode = EncodingLossMode::kSignedMean;
    else throw ValidationError("config key enc_mode: unknown value " + v);
  } else if (key == "labelled_fraction")
    cfg.labelled_fraction = parse_double(key, v);
  else if (key == "label_seed") cfg.label_seed = parse_u64(key, v);
  else if (key == "net.trunk_widths")
    cfg.net.trunk_widths = parse_size_list(key, v);
  else if (key == "net.trunk_strides")
    cfg.net.trunk_strides = parse_size_list(key, v);
  else if (key == "net.scene_dim") cfg.net.scene_dim = parse_size(key, v);
  else if (key == "net.hyper_depth") cfg.net.hyper_depth = parse_size(key, v);
  else if (key == "net.lfn_width") cfg.net.lfn_width = parse_size(key, v);
  else if (key == "net.lfn_depth") cfg.net.lfn_depth = parse_size(key, v);
  else if (key == "camera_mode") cfg.camera_mode = camera_mode_from_name(v);
  else if (key == "train_center") cfg.train_center = parse_bool(key, v);
  else if (key == "seed") cfg.seed = parse_u64(key, v);
  else if (key == "history_path") cfg.history_path = v;
  else throw ValidationError("unknown config key: " + key);
}

TrainConfig make_train_config(const std::string& path) {
  TrainConfig cfg;
  if (path.empty()) return cfg;
  for (const auto& [k, v] : read_kv_file(path)) apply_train_key(cfg, k, v);
  return cfg;
}

SimConfig make_sim_config(const std::string& path) {
  SimConfig cfg;
  if (path.empty()) return cfg;
  for (const auto& [k, v] : read_kv_file(path)) {
    if (k == "width") cfg.width = parse_size(k, v);
    else if (k == "height") cfg.height = parse_size(k, v);
    else if (k == "frames") cfg.frames = parse_size(k, v);
    else if (k == "f") cfg.f = parse_double(k, v);
    else if (k == "k1") cfg.k1 = parse_double(k, v);
    else if (k == "k2") cfg.k2 = parse_double(k, v);
    else if (k == "seed") cfg.seed = parse_u64(k, v);
    else throw ValidationError("unknown sim config key: " + k);
  }
  return cfg;
}

struct Options {
  std::string config;
  std::string dataset;
  std::string checkpoint;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::size_t pair = 0;
};

int cmd_sim(const Options& opt) {
  SimConfig cfg = make_sim_config(opt.config);
  if (opt.seed_set) cfg.seed = opt.seed;
  Dataset ds = generate_dataset(cfg, opt.out);
  std::printf("dataset %s frames %zu size %zux%zu f %.17g\n", opt.out.c_str(),
              ds.frames.size(), ds.camera.width, ds.camera.height,
              ds.camera.f);
  return 0;
}

int cmd_train(const Options& opt) {
  TrainConfig cfg = make_train_config(opt.config);
  if (opt.seed_set) cfg.seed = opt.seed;
  fs::create_directories(opt.out);
  if (cfg.history_path.empty()) {
    cfg.history_path = (fs::path(opt.out) / "history.tsv").string();
  }
  Dataset ds = Dataset::load(opt.dataset);
  Trainer trainer(std::move(ds), cfg);
  if (!opt.checkpoint.empty()) trainer.load_checkpoint(opt.checkpoint);

  std::string ckpt = (fs::path(opt.out) / "model.ckpt").string();
  while (trainer.epoch() < cfg.epochs) {
    trainer.run_epochs(1);
    trainer.save_checkpoint(ckpt);
    std::printf("epoch %zu/%zu stage %s mean_total %.6g f %.6g\n",
                trainer.epoch(), cfg.epochs, stage_name(trainer.stage()),
                trainer.last_epoch_mean_total(),
                trainer.model().camera.k.f.item());
    std::fflush(stdout);
  }
  std::printf("checkpoint %s\n", ckpt.c_str());
  return 0;
}

int cmd_eval_odom(const Options& opt) {
  TrainConfig cfg = make_train_config(opt.config);
  Model model = load_model(opt.checkpoint, cfg.net);
  Dataset ds = Dataset::load(opt.dataset);
  std::vector<Image> frames = load_all_frames(ds);
  std::vector<SE3> pred = predict_pair_poses(model, frames);
  std::vector<SE3> truth = dataset_pair_poses(ds);
  OdometryReport rep = odometry_metrics(pred, truth);
  std::printf(
      "trans_mean %.17g\ntrans_std %.17g\ntrans_rmse %.17g\n"
      "rot_mean %.17g\nrot_std %.17g\nrot_rmse %.17g\n"
      "scale_median %.17g\n",
      rep.translation.mean, rep.translation.stddev, rep.translation.rmse,
      rep.rotation.mean, rep.rotation.stddev, rep.rotation.rmse,
      median(translation_ratios(pred, truth)));
  if (!opt.out.empty()) {
    fs::create_directories(opt.out);
    write_odometry_tsv((fs::path(opt.out) / "odom.tsv").string(), rep);
  }
  return 0;
}

int cmd_eval_calib(const Options& opt) {
  TrainConfig cfg = make_train_config(opt.config);
  Model model = load_model(opt.checkpoint, cfg.net);
  Dataset ds = Dataset::load(opt.dataset);
  double dr = radial_shift_error(model.camera, ds.camera);
  std::printf("f %.17g\nf_true %.17g\ndelta_r_mean %.17g\n",
              model.camera.k.f.item(), ds.camera.f, dr);
  if (!opt.out.empty()) {
    fs::create_directories(opt.out);
    write_calib_report((fs::path(opt.out) / "calib.txt").string(),
                       model.camera, &ds.camera);
  }
  return 0;
}

int cmd_render(const Options& opt) {
  TrainConfig cfg = make_train_config(opt.config);
  Model model = load_model(opt.checkpoint, cfg.net);
  Dataset ds = Dataset::load(opt.dataset);
  if (opt.pair + 1 >= ds.frames.size()) {
    throw ValidationError("pair index " + std::to_string(opt.pair) +
                          " out of range for " +
                          std::to_string(ds.frames.size()) + " frames");
  }
  Image a = load_frame(ds.frame_path(opt.pair));
  Image b = load_frame(ds.frame_path(opt.pair + 1));

  Image view_a = render_novel_view(model, a, b, SE3::identity());
  Image view_b = render_novel_view(model, a, b, ds.pair_pose(opt.pair));
  Image diff = difference_image(view_a, view_b);

  fs::create_directories(opt.out);
  save_ppm(view_a, (fs::path(opt.out) / "view_a.ppm").string());
  save_ppm(view_b, (fs::path(opt.out) / "view_b.ppm").string());
  save_ppm(diff, (fs::path(opt.out) / "view_diff.ppm").string());
  std::printf("mse_a %.17g\nmse_b %.17g\n", mean_squared_color_error(view_a, a),
              mean_squared_color_error(view_b, b));
  return 0;
}

ad::Tensor random_flat(std::size_t n, std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-scale, scale);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return ad::Tensor::from(std::move(v), {n});
}

int cmd_gradcheck(const Options& opt) {
  using ad::Tensor;
  std::uint64_t seed = opt.seed_set ? opt.seed : 5;
  double worst = 0.0;
  bool all_ok = true;
  auto report = [&](const char* name, const ad::GradCheckReport& rep) {
    std::printf("%-18s checked %4zu kinks %2zu max_rel_dev %.3e %s\n", name,
                rep.checked, rep.skipped_kinks, rep.max_rel_dev,
                rep.ok ? "ok" : "FAIL");
    worst = std::max(worst, rep.max_rel_dev);
    all_ok = all_ok && rep.ok;
  };

  {
    nn::Mlp mlp = nn::make_mlp({3, 6, 2}, seed);
    auto f = [&](const Tensor& x) {
      return ad::reduce_sum(ad::square(mlp.forward(x)));
    };
    report("mlp_input", ad::grad_check(f, ad::xavier_uniform({4, 3}, seed + 1)));
  }
  {
    Tensor kernels = ad::xavier_uniform({3, 2, 3, 3}, seed + 2);
    auto f = [&](const Tensor& x) {
      return ad::reduce_mean(ad::square(ad::conv2d(x, kernels, 2, 1)));
    };
    report("conv_input", ad::grad_check(f, ad::xavier_uniform({2, 5, 5}, seed + 3)));
  }
  {
    Tensor dirs = rows_normalize(ad::xavier_uniform({5, 3}, seed + 4));
    Tensor t = random_flat(3, seed + 5, 0.3);
    auto f = [&](const Tensor& p6) {
      Tensor r = rot6d_to_matrix(p6);
      return ad::reduce_sum(ad::square(plucker_rows(r, t, dirs)));
    };
    report("pose_to_rays", ad::grad_check(f, random_flat(6, seed + 6, 1.0), 1e-6));
  }
  {
    CameraModel cam = CameraModel::init(16, 16, seed + 7);
    for (double& w : cam.distortion.layers.back().W.data_mut()) w = 0.05;
    Tensor px = make_pixel_grid(16, 16, 5);
    auto f = [&](const Tensor& focal) {
      CameraModel probe = cam;
      probe.k.f = focal;
      return ad::reduce_sum(ad::square(probe.pixels_to_unit_dirs(px)));
    };
    report("camera_focal", ad::grad_check(f, Tensor::from({15.0}, {1})));
  }
  {
    Tensor target = ad::xavier_uniform({6, 3}, seed + 8);
    auto f = [&](const Tensor& pred) {
      return photometric_loss(pred, target);
    };
    report("photometric", ad::grad_check(f, ad::xavier_uniform({6, 3}, seed + 9)));
  }

  std::printf("max_rel_dev %.17g\n", worst);
  if (!all_ok) throw DomainError("gradient check failed");
  std::printf("ok\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semi-supervised odometry, calibration and light fields"};
  app.require_subcommand(1);
  Options opt;

  CLI::App* sim = app.add_subcommand("sim", "render a synthetic dataset");
  sim->add_option("--out", opt.out, "output directory")->required();
  sim->add_option("--config", opt.config, "key=value config file");
  CLI::Option* sim_seed = sim->add_option("--seed", opt.seed, "trajectory seed");

  CLI::App* train = app.add_subcommand("train", "run the training curriculum");
  train->add_option("--dataset", opt.dataset, "dataset directory")->required();
  train->add_option("--out", opt.out, "output directory")->required();
  train->add_option("--config", opt.config, "key=value config file");
  train->add_option("--checkpoint", opt.checkpoint, "resume from checkpoint");
  CLI::Option* train_seed = train->add_option("--seed", opt.seed, "model seed");

  CLI::App* eo = app.add_subcommand("eval-odom", "relative-pose error report");
  eo->add_option("--dataset", opt.dataset)->required();
  eo->add_option("--checkpoint", opt.checkpoint)->required();
  eo->add_option("--config", opt.config);
  eo->add_option("--out", opt.out);

  CLI::App* ec = app.add_subcommand("eval-calib", "calibration error report");
  ec->add_option("--dataset", opt.dataset)->required();
  ec->add_option("--checkpoint", opt.checkpoint)->required();
  ec->add_option("--config", opt.config);
  ec->add_option("--out", opt.out);

  CLI::App* rn = app.add_subcommand("render", "novel views plus difference");
  rn->add_option("--dataset", opt.dataset)->required();
  rn->add_option("--checkpoint", opt.checkpoint)->required();
  rn->add_option("--config", opt.config);
  rn->add_option("--out", opt.out)->required();
  rn->add_option("--pair", opt.pair, "frame pair index");

  CLI::App* gc = app.add_subcommand("gradcheck", "finite-difference audit");
  CLI::Option* gc_seed = gc->add_option("--seed", opt.seed, "probe seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  opt.seed_set = sim_seed->count() > 0 || train_seed->count() > 0 ||
                 gc_seed->count() > 0;

  try {
    if (sim->parsed()) return cmd_sim(opt);
    if (train->parsed()) return cmd_train(opt);
    if (eo->parsed()) return cmd_eval_odom(opt);
    if (ec->parsed()) return cmd_eval_calib(opt);
    if (rn->parsed()) return cmd_render(opt);
    if (gc->parsed()) return cmd_gradcheck(opt);
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const lucid::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "failure: %s\n", e.what());
    return 2;
  }
  return 0;
}
