#pragma once

// Staged trainer. Geometry (encoder + hypernetwork) always trains;
// the focal length joins at stage2_epoch and the freeform distortion at
// stage3_epoch. Ablation modes cap how far that progression goes. Training
// is single threaded and fully deterministic in (dataset, config).

#include <cstdint>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "lucid/camera.hpp"
#include "lucid/dataset.hpp"
#include "lucid/image.hpp"
#include "lucid/losses.hpp"
#include "lucid/nets.hpp"

namespace lucid {

enum class Stage { kGeometryOnly = 0, kPlusFocal = 1, kPlusDistortion = 2 };
const char* stage_name(Stage s);
Stage stage_from_name(const std::string& name);

enum class CameraMode { kFull, kNoDistortion, kNoIntrinsics };
const char* camera_mode_name(CameraMode m);
CameraMode camera_mode_from_name(const std::string& name);

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t stage2_epoch = 5;   // first epoch that trains the focal
  std::size_t stage3_epoch = 15;  // first epoch that trains distortion
  std::size_t rays_per_step = 1024;

  double lr_encoder = 5e-5;
  double lr_hyper = 8e-5;
  double lr_distortion = 5e-6;
  double lr_intrinsics = 5e-1;
  double grad_clip = 10.0;

  LossWeights weights;
  EncodingLossMode enc_mode = EncodingLossMode::kMeanSquare;

  double labelled_fraction = 0.1;
  std::uint64_t label_seed = 17;

  nn::NetConfig net;
  CameraMode camera_mode = CameraMode::kFull;
  bool train_center = false;
  std::uint64_t seed = 1;
  std::string history_path;  // per-step TSV log when non-empty
};

// The learned state: encoder, hypernetwork and camera. Value-mode helpers
// run without a tape and never touch gradients.
struct Model {
  nn::NetConfig net;
  nn::Encoder encoder;
  nn::HyperNet hyper;
  CameraModel camera;

  static Model init(const nn::NetConfig& net, std::size_t width,
                    std::size_t height, std::uint64_t seed);

  struct PairCode {
    SE3 pose;         // frame i+1 camera expressed in frame i
    ad::Tensor psi;   // light field weights for the pair
    ad::Tensor pose9;
  };
  PairCode encode_pair(const Image& a, const Image& b) const;

  std::vector<ad::Tensor*> all_params();
};

struct StepStats {
  double photometric = 0.0;
  double translation = 0.0;
  double rotation = 0.0;
  double encoding = 0.0;
  double total = 0.0;
  bool skipped = false;
};

class Trainer {
 public:
  Trainer(Dataset ds, TrainConfig cfg);
  Trainer(const Trainer&) = delete;
  Trainer& operator=(const Trainer&) = delete;

  void run();                       // epochs from the current one to the end
  void run_epochs(std::size_t n);   // at most n more epochs
  StepStats train_pair(std::size_t pair_idx);

  Stage stage() const;
  std::size_t epoch() const { return epoch_; }
  // mean total loss over the steps of the most recent finished epoch
  double last_epoch_mean_total() const { return last_epoch_mean_; }
  const Model& model() const { return model_; }
  Model& model() { return model_; }
  const Dataset& dataset() const { return ds_; }
  const std::vector<Image>& frames() const { return images_; }
  bool pair_labelled(std::size_t pair_idx) const;

  // Epoch-boundary checkpointing; resume reproduces the uninterrupted run
  // bit for bit.
  void save_checkpoint(const std::string& path) const;
  void load_checkpoint(const std::string& path);

 private:
  struct Group {
    std::string name;
    std::vector<ad::Tensor*> params;
    std::vector<ad::AdamState> states;
    double lr = 0.0;
  };

  void build_groups();
  bool group_active(const Group& g) const;
  void log_step(std::size_t pair_idx, const StepStats& s);

  Dataset ds_;
  TrainConfig cfg_;
  Model model_;
  std::vector<Image> images_;
  std::vector<bool> labelled_;
  std::vector<Group> groups_;
  std::mt19937_64 rng_;
  std::size_t epoch_ = 0;
  std::size_t step_ = 0;  // global step counter, for the log
  double last_epoch_mean_ = 0.0;
  std::ofstream history_;
};

// Rebuilds just the model from a trainer checkpoint. The architecture comes
// from `net`, the image size from the checkpoint's own metadata.
Model load_model(const std::string& path, const nn::NetConfig& net);

}  // namespace lucid
