#include "lucid/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include "lucid/checkpoint.hpp"
#include "lucid/geometry.hpp"

namespace lucid {

using ad::Tensor;

const char* stage_name(Stage s) {
  switch (s) {
    case Stage::kGeometryOnly: return "geometry";
    case Stage::kPlusFocal: return "focal";
    case Stage::kPlusDistortion: return "distortion";
  }
  return "?";
}

Stage stage_from_name(const std::string& name) {
  if (name == "geometry") return Stage::kGeometryOnly;
  if (name == "focal") return Stage::kPlusFocal;
  if (name == "distortion") return Stage::kPlusDistortion;
  throw ValidationError("unknown stage name: " + name);
}

const char* camera_mode_name(CameraMode m) {
  switch (m) {
    case CameraMode::kFull: return "full";
    case CameraMode::kNoDistortion: return "no_distortion";
    case CameraMode::kNoIntrinsics: return "no_intrinsics";
  }
  return "?";
}

CameraMode camera_mode_from_name(const std::string& name) {
  if (name == "full") return CameraMode::kFull;
  if (name == "no_distortion") return CameraMode::kNoDistortion;
  if (name == "no_intrinsics") return CameraMode::kNoIntrinsics;
  throw ValidationError("unknown camera mode: " + name);
}

// ---- Model ----------------------------------------------------------------

Model Model::init(const nn::NetConfig& net, std::size_t width,
                  std::size_t height, std::uint64_t seed) {
  Model m;
  m.net = net;
  m.encoder = nn::make_encoder(net, seed);
  m.hyper = nn::make_hypernet(net, seed + 1000);
  m.camera = CameraModel::init(width, height, seed + 2000);
  return m;
}

Model::PairCode Model::encode_pair(const Image& a, const Image& b) const {
  if (a.width != camera.width || a.height != camera.height ||
      b.width != a.width || b.height != a.height) {
    throw DimensionError("encode_pair: frame size does not match the camera");
  }
  Tensor pair = nn::stack_pair(a.rgb, b.rgb, a.width, a.height);
  auto out = encoder.forward(pair);
  auto [r, t] = nn::pose_to_rt(out.pose9);

  PairCode code;
  code.pose9 = out.pose9;
  for (int i = 0; i < 3; ++i) {
    code.pose.t(i) = t.at(i);
    for (int j = 0; j < 3; ++j) code.pose.R(i, j) = r.at(i * 3 + j);
  }
  code.psi = hyper.forward(ad::reshape(out.z, {1, out.z.size()}));
  return code;
}

std::vector<Tensor*> Model::all_params() {
  std::vector<Tensor*> out = encoder.params();
  for (Tensor* t : hyper.params()) out.push_back(t);
  out.push_back(&camera.k.f);
  out.push_back(&camera.k.cx);
  out.push_back(&camera.k.cy);
  for (Tensor* t : camera.distortion_params()) out.push_back(t);
  return out;
}

// ---- Trainer ----------------------------------------------------------------

Trainer::Trainer(Dataset ds, TrainConfig cfg)
    : ds_(std::move(ds)),
      cfg_(std::move(cfg)),
      model_(Model::init(cfg_.net, ds_.camera.width, ds_.camera.height,
                         cfg_.seed)),
      rng_(cfg_.seed ^ 0x9e3779b97f4a7c15ull) {
  if (cfg_.epochs == 0) throw ConfigError("epochs must be >= 1");
  if (cfg_.rays_per_step < 2) throw ConfigError("rays_per_step must be >= 2");
  if (cfg_.stage2_epoch > cfg_.stage3_epoch) {
    throw ConfigError("stage2_epoch must not exceed stage3_epoch");
  }
  images_.reserve(ds_.frames.size());
  for (std::size_t i = 0; i < ds_.frames.size(); ++i) {
    images_.push_back(load_frame(ds_.frame_path(i)));
    if (images_.back().width != ds_.camera.width ||
        images_.back().height != ds_.camera.height) {
      throw ValidationError("frame " + std::to_string(i) +
                            " does not match the dataset camera size");
    }
  }
  labelled_ = labelled_mask(ds_.frames.size(), cfg_.labelled_fraction,
                            cfg_.label_seed);
  build_groups();
  if (!cfg_.history_path.empty()) {
    history_.open(cfg_.history_path, std::ios::trunc);
    if (!history_) {
      throw IoError("cannot open history log " + cfg_.history_path);
    }
    history_ << "# epoch\tstep\tstage\tl_ph\tl_trans\tl_rot\tl_enc\ttotal\tf\n";
  }
}

void Trainer::build_groups() {
  auto mk = [](std::string name, std::vector<Tensor*> params, double lr) {
    Group g;
    g.name = std::move(name);
    g.params = std::move(params);
    g.lr = lr;
    for (Tensor* p : g.params) g.states.emplace_back(p->size(), lr);
    return g;
  };
  groups_.clear();
  groups_.push_back(mk("enc", model_.encoder.params(), cfg_.lr_encoder));
  groups_.push_back(mk("hyp", model_.hyper.params(), cfg_.lr_hyper));
  groups_.push_back(
      mk("dist", model_.camera.distortion_params(), cfg_.lr_distortion));
  std::vector<Tensor*> intr = model_.camera.intrinsic_params();
  if (cfg_.train_center) {
    for (Tensor* t : model_.camera.center_params()) intr.push_back(t);
  }
  groups_.push_back(mk("intr", std::move(intr), cfg_.lr_intrinsics));
}

Stage Trainer::stage() const {
  Stage s = epoch_ < cfg_.stage2_epoch
                ? Stage::kGeometryOnly
                : (epoch_ < cfg_.stage3_epoch ? Stage::kPlusFocal
                                              : Stage::kPlusDistortion);
  // ablations cap how far the schedule advances
  if (cfg_.camera_mode == CameraMode::kNoIntrinsics) {
    return Stage::kGeometryOnly;
  }
  if (cfg_.camera_mode == CameraMode::kNoDistortion &&
      s == Stage::kPlusDistortion) {
    return Stage::kPlusFocal;
  }
  return s;
}

bool Trainer::group_active(const Group& g) const {
  Stage s = stage();
  if (g.name == "intr") return s >= Stage::kPlusFocal;
  if (g.name == "dist") return s >= Stage::kPlusDistortion;
  return true;
}

bool Trainer::pair_labelled(std::size_t pair_idx) const {
  if (pair_idx + 1 >= labelled_.size()) {
    throw ContractError("pair index out of range");
  }
  return labelled_[pair_idx] && labelled_[pair_idx + 1];
}

StepStats Trainer::train_pair(std::size_t pair_idx) {
  bool labelled = pair_labelled(pair_idx);
  bool use_photo = cfg_.weights.photometric != 0.0;
  StepStats stats;
  if (!use_photo && !labelled) {
    stats.skipped = true;  // pure supervised run has nothing to learn here
    return stats;
  }

  const Image& img_a = images_[pair_idx];
  const Image& img_b = images_[pair_idx + 1];

  ad::Tape tape;
  ad::Tape::Scope scope(tape);

  Tensor pair = nn::stack_pair(img_a.rgb, img_b.rgb, img_a.width,
                               img_a.height);
  auto enc_out = model_.encoder.forward(pair);
  auto [r_hat, t_hat] = nn::pose_to_rt(enc_out.pose9);

  LossTerms terms;
  terms.encoding = encoding_loss(enc_out.z, cfg_.enc_mode);

  if (use_photo) {
    Tensor psi =
        model_.hyper.forward(ad::reshape(enc_out.z, {1, enc_out.z.size()}));
    std::size_t half = cfg_.rays_per_step / 2;
    auto sample = [&](const Image& img, Tensor& pixels, Tensor& targets) {
      std::vector<double> px, tg;
      px.reserve(half * 2);
      tg.reserve(half * 3);
      for (std::size_t k = 0; k < half; ++k) {
        std::size_t idx = rng_() % (img.width * img.height);
        std::size_t u = idx % img.width, v = idx / img.width;
        px.push_back(static_cast<double>(u));
        px.push_back(static_cast<double>(v));
        for (int c = 0; c < 3; ++c)
          tg.push_back(static_cast<double>(img.rgb[idx * 3 + c]));
      }
      pixels = Tensor::from(std::move(px), {half, 2});
      targets = Tensor::from(std::move(tg), {half, 3});
    };
    Tensor px_a, tg_a, px_b, tg_b;
    sample(img_a, px_a, tg_a);
    sample(img_b, px_b, tg_b);

    Tensor dirs_a = model_.camera.pixels_to_unit_dirs(px_a);
    Tensor dirs_b = model_.camera.pixels_to_unit_dirs(px_b);
    Tensor rays_a = plucker_rows_identity(dirs_a);
    Tensor rays_b = plucker_rows(r_hat, t_hat, dirs_b);

    Tensor pred_a = nn::light_field_forward(model_.net, rays_a, psi);
    Tensor pred_b = nn::light_field_forward(model_.net, rays_b, psi);
    terms.photometric = ad::add(photometric_loss(pred_a, tg_a),
                                photometric_loss(pred_b, tg_b));
  } else {
    terms.photometric = Tensor::scalar(0.0);
  }

  if (labelled) {
    SE3 gt = ds_.pair_pose(pair_idx);
    std::vector<double> rv(9), tv(3);
    for (int i = 0; i < 3; ++i) {
      tv[i] = gt.t(i);
      for (int j = 0; j < 3; ++j) rv[i * 3 + j] = gt.R(i, j);
    }
    terms.translation = translation_loss(t_hat, Tensor::from(tv, {3}));
    terms.rotation = rotation_loss(r_hat, Tensor::from(rv, {3, 3}));
  } else {
    terms.translation = Tensor::scalar(0.0);
    terms.rotation = Tensor::scalar(0.0);
  }

  Tensor total = total_loss(terms, cfg_.weights);
  if (!std::isfinite(total.item())) {
    std::string op = tape.first_nonfinite_op();
    throw DomainError("training loss is not finite; first bad op: " +
                      (op.empty() ? std::string("(input)") : op));
  }
  tape.backward(total);

  for (Group& g : groups_) {
    if (!group_active(g)) continue;
    ad::clip_grad_norm(g.params, cfg_.grad_clip);
    for (std::size_t i = 0; i < g.params.size(); ++i) {
      if (g.params[i]->has_grad()) ad::adam_step(*g.params[i], g.states[i]);
    }
  }
  for (Group& g : groups_) ad::zero_grads(g.params);

  stats.photometric = terms.photometric.item();
  stats.translation = terms.translation.item();
  stats.rotation = terms.rotation.item();
  stats.encoding = terms.encoding.item();
  stats.total = total.item();
  return stats;
}

void Trainer::log_step(std::size_t pair_idx, const StepStats& s) {
  (void)pair_idx;
  if (!history_.is_open()) return;
  char buf[360];
  std::snprintf(buf, sizeof(buf),
                "%zu\t%zu\t%s\t%.17g\t%.17g\t%.17g\t%.17g\t%.17g\t%.17g\n",
                epoch_, step_, stage_name(stage()), s.photometric,
                s.translation, s.rotation, s.encoding, s.total,
                model_.camera.k.f.item());
  history_ << buf;
}

void Trainer::run_epochs(std::size_t n) {
  std::size_t end = std::min(cfg_.epochs, epoch_ + n);
  for (; epoch_ < end; ++epoch_) {
    std::vector<std::size_t> order(ds_.pair_count());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng_);
    double total_sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t idx : order) {
      StepStats s = train_pair(idx);
      if (!s.skipped) {
        ++step_;
        total_sum += s.total;
        ++counted;
        log_step(idx, s);
      }
    }
    if (counted > 0) last_epoch_mean_ = total_sum / static_cast<double>(counted);
    history_.flush();
  }
}

void Trainer::run() {
  if (epoch_ < cfg_.epochs) run_epochs(cfg_.epochs - epoch_);
}

// ---- checkpointing -----------------------------------------------------------

void Trainer::save_checkpoint(const std::string& path) const {
  std::vector<NamedBuffer> buffers;
  auto push_tensor = [&buffers](const std::string& name, const Tensor& t) {
    buffers.push_back(
        {name, t.shape(), {t.data().begin(), t.data().end()}});
  };

  // const_cast: params() walks mutable pointers but we only read here
  Model& m = const_cast<Model&>(model_);
  std::size_t i = 0;
  for (Tensor* t : m.all_params())
    push_tensor("model." + std::to_string(i++), *t);

  for (const Group& g : groups_) {
    for (std::size_t j = 0; j < g.states.size(); ++j) {
      const ad::AdamState& st = g.states[j];
      buffers.push_back({"adam." + g.name + ".m." + std::to_string(j),
                         {st.m.size()},
                         st.m});
      buffers.push_back({"adam." + g.name + ".v." + std::to_string(j),
                         {st.v.size()},
                         st.v});
      buffers.push_back({"adam." + g.name + ".t." + std::to_string(j),
                         {1},
                         {static_cast<double>(st.step_count)}});
    }
  }

  std::map<std::string, std::string> strings;
  strings["epoch"] = std::to_string(epoch_);
  strings["step"] = std::to_string(step_);
  strings["stage"] = stage_name(stage());
  strings["camera_mode"] = camera_mode_name(cfg_.camera_mode);
  strings["width"] = std::to_string(model_.camera.width);
  strings["height"] = std::to_string(model_.camera.height);
  std::ostringstream rng_text;
  rng_text << rng_;
  strings["rng"] = rng_text.str();

  write_checkpoint(path, buffers, strings);
}

namespace {

using BufferIndex = std::map<std::string, NamedBuffer*>;

BufferIndex index_buffers(std::vector<NamedBuffer>& buffers) {
  BufferIndex by_name;
  for (NamedBuffer& b : buffers) by_name[b.name] = &b;
  return by_name;
}

NamedBuffer& want_buffer(const BufferIndex& by_name, const std::string& name) {
  auto it = by_name.find(name);
  if (it == by_name.end()) {
    throw ValidationError("checkpoint is missing buffer " + name);
  }
  return *it->second;
}

void copy_model_buffers(const BufferIndex& by_name, Model& model) {
  std::size_t i = 0;
  for (Tensor* t : model.all_params()) {
    NamedBuffer& b = want_buffer(by_name, "model." + std::to_string(i++));
    if (b.shape != t->shape()) {
      throw ValidationError("checkpoint buffer " + b.name + " has shape " +
                            ad::shape_str(b.shape) + ", model wants " +
                            ad::shape_str(t->shape()));
    }
    std::copy(b.data.begin(), b.data.end(), t->data_mut().begin());
  }
}

}  // namespace

void Trainer::load_checkpoint(const std::string& path) {
  std::vector<NamedBuffer> buffers;
  std::map<std::string, std::string> strings;
  read_checkpoint(path, buffers, strings);

  BufferIndex by_name = index_buffers(buffers);
  auto want = [&](const std::string& name) -> NamedBuffer& {
    return want_buffer(by_name, name);
  };
  copy_model_buffers(by_name, model_);

  for (Group& g : groups_) {
    for (std::size_t j = 0; j < g.states.size(); ++j) {
      ad::AdamState& st = g.states[j];
      NamedBuffer& m = want("adam." + g.name + ".m." + std::to_string(j));
      NamedBuffer& v = want("adam." + g.name + ".v." + std::to_string(j));
      if (m.data.size() != st.m.size() || v.data.size() != st.v.size()) {
        throw ValidationError("checkpoint optimizer state mismatch in " +
                              g.name);
      }
      st.m = m.data;
      st.v = v.data;
      st.step_count = static_cast<std::int64_t>(
          want("adam." + g.name + ".t." + std::to_string(j)).data.at(0));
    }
  }

  auto want_string = [&strings](const char* key) -> const std::string& {
    auto it = strings.find(key);
    if (it == strings.end()) {
      throw ValidationError(std::string("checkpoint is missing field ") + key);
    }
    return it->second;
  };
  try {
    epoch_ = std::stoul(want_string("epoch"));
    step_ = std::stoul(want_string("step"));
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception&) {
    throw ValidationError("checkpoint progress fields are corrupt");
  }
  std::istringstream rng_text(want_string("rng"));
  rng_text >> rng_;
  if (!rng_text) throw ValidationError("checkpoint rng state is corrupt");
  if (strings.count("camera_mode") &&
      strings["camera_mode"] != camera_mode_name(cfg_.camera_mode)) {
    throw ValidationError("checkpoint camera mode " +
                          strings["camera_mode"] +
                          " does not match configured " +
                          camera_mode_name(cfg_.camera_mode));
  }
}

Model load_model(const std::string& path, const nn::NetConfig& net) {
  std::vector<NamedBuffer> buffers;
  std::map<std::string, std::string> strings;
  read_checkpoint(path, buffers, strings);

  auto dim = [&strings, &path](const char* key) -> std::size_t {
    auto it = strings.find(key);
    if (it == strings.end()) {
      throw ValidationError("checkpoint " + path + " lacks field " + key);
    }
    try {
      return std::stoul(it->second);
    } catch (const std::exception&) {
      throw ValidationError("checkpoint field " + std::string(key) +
                            " is corrupt");
    }
  };
  Model m = Model::init(net, dim("width"), dim("height"), 0);
  copy_model_buffers(index_buffers(buffers), m);
  return m;
}

}  // namespace lucid
