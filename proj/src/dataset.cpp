#include "lucid/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "lucid/errors.hpp"

namespace lucid {

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string Dataset::frame_path(std::size_t i) const {
  if (i >= frames.size()) {
    throw ContractError("frame index " + std::to_string(i) +
                        " out of range for dataset of " +
                        std::to_string(frames.size()));
  }
  return (std::filesystem::path(root) / frames[i].image).string();
}

SE3 Dataset::pair_pose(std::size_t i) const {
  if (i + 1 >= frames.size()) {
    throw ContractError("pair index " + std::to_string(i) +
                        " out of range for dataset of " +
                        std::to_string(frames.size()));
  }
  return frames[i].pose.inverse() * frames[i + 1].pose;
}

Dataset Dataset::load(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    throw ValidationError("dataset directory not found: " + dir);
  }
  fs::path root(dir);
  if (!fs::exists(root / "manifest.tsv")) {
    throw ValidationError("missing manifest.tsv in " + dir);
  }
  if (!fs::exists(root / "camera.txt")) {
    throw ValidationError("missing camera.txt in " + dir);
  }
  Dataset ds;
  ds.root = dir;
  ds.frames = read_manifest((root / "manifest.tsv").string());
  ds.camera = read_camera_file((root / "camera.txt").string());
  if (ds.frames.size() < 2) {
    throw ValidationError("dataset needs at least 2 frames, found " +
                          std::to_string(ds.frames.size()));
  }
  return ds;
}

void write_manifest(const std::string& path,
                    const std::vector<FrameRecord>& frames) {
  std::ofstream out(path);
  if (!out) throw IoError("write_manifest: cannot open " + path);
  out << "# index\timage\tr00 r01 r02 r10 r11 r12 r20 r21 r22\ttx ty tz\n";
  for (const FrameRecord& f : frames) {
    out << f.index << "\t" << f.image;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) out << "\t" << fmt_double(f.pose.R(i, j));
    for (int i = 0; i < 3; ++i) out << "\t" << fmt_double(f.pose.t(i));
    out << "\n";
  }
  if (!out) throw IoError("write_manifest: write failed for " + path);
}

std::vector<FrameRecord> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("read_manifest: cannot open " + path);
  std::vector<FrameRecord> frames;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    FrameRecord f;
    ss >> f.index >> f.image;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) ss >> f.pose.R(i, j);
    for (int i = 0; i < 3; ++i) ss >> f.pose.t(i);
    if (!ss) {
      throw ParseError("read_manifest: bad record at " + path + ":" +
                       std::to_string(lineno));
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

void write_camera_file(const std::string& path, const CameraTruth& cam) {
  std::ofstream out(path);
  if (!out) throw IoError("write_camera_file: cannot open " + path);
  out << "width " << cam.width << "\n"
      << "height " << cam.height << "\n"
      << "f " << fmt_double(cam.f) << "\n"
      << "cx " << fmt_double(cam.cx) << "\n"
      << "cy " << fmt_double(cam.cy) << "\n"
      << "k1 " << fmt_double(cam.k1) << "\n"
      << "k2 " << fmt_double(cam.k2) << "\n";
  if (!out) throw IoError("write_camera_file: write failed for " + path);
}

CameraTruth read_camera_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("read_camera_file: cannot open " + path);
  std::map<std::string, std::string> kv;
  std::string key, value;
  while (in >> key >> value) kv[key] = value;
  CameraTruth cam;
  try {
    cam.width = std::stoul(kv.at("width"));
    cam.height = std::stoul(kv.at("height"));
    cam.f = std::stod(kv.at("f"));
    cam.cx = std::stod(kv.at("cx"));
    cam.cy = std::stod(kv.at("cy"));
    cam.k1 = std::stod(kv.at("k1"));
    cam.k2 = std::stod(kv.at("k2"));
  } catch (const std::exception&) {
    throw ParseError("read_camera_file: missing or bad key in " + path);
  }
  if (cam.width == 0 || cam.height == 0 || cam.f <= 0.0) {
    throw ValidationError("read_camera_file: nonsensical camera in " + path);
  }
  return cam;
}

std::vector<bool> labelled_mask(std::size_t n, double fraction,
                                std::uint64_t seed) {
  if (fraction < 0.0 || fraction > 1.0) {
    throw ConfigError("labelled fraction must be in [0,1], got " +
                      std::to_string(fraction));
  }
  std::vector<bool> mask(n, false);
  std::size_t count =
      static_cast<std::size_t>(std::lround(fraction * static_cast<double>(n)));
  if (count == 0) return mask;
  if (count > n) count = n;
  std::mt19937_64 rng(seed);
  std::size_t start = rng() % (n - count + 1);
  for (std::size_t i = start; i < start + count; ++i) mask[i] = true;
  return mask;
}

}  // namespace lucid
