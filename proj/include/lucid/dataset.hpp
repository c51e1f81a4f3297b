#pragma once

// On-disk dataset layout: a directory of frame PPMs (+ float sidecars),
// a manifest.tsv with per-frame camera-to-world poses, and camera.txt
// with the intrinsics the generator used.

#include <cstdint>
#include <string>
#include <vector>

#include "lucid/geometry.hpp"

namespace lucid {

struct FrameRecord {
  std::size_t index = 0;
  std::string image;  // ppm filename relative to the dataset root
  SE3 pose;           // camera to world
};

struct CameraTruth {
  std::size_t width = 0;
  std::size_t height = 0;
  double f = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  double k1 = 0.0;
  double k2 = 0.0;
};

struct Dataset {
  std::string root;
  std::vector<FrameRecord> frames;
  CameraTruth camera;

  std::string frame_path(std::size_t i) const;
  std::size_t pair_count() const {
    return frames.size() < 2 ? 0 : frames.size() - 1;
  }

  // Relative pose of frame i+1 in the camera frame of frame i.
  SE3 pair_pose(std::size_t i) const;

  static Dataset load(const std::string& dir);
};

void write_manifest(const std::string& path,
                    const std::vector<FrameRecord>& frames);
std::vector<FrameRecord> read_manifest(const std::string& path);

void write_camera_file(const std::string& path, const CameraTruth& cam);
CameraTruth read_camera_file(const std::string& path);

// Contiguous block of ~fraction*n frames, placed by the seed. A frame pair
// counts as labelled only when both endpoints fall inside the block.
std::vector<bool> labelled_mask(std::size_t n, double fraction,
                                std::uint64_t seed);

}  // namespace lucid
