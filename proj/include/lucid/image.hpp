#pragma once

// RGB images with 8-bit PPM storage plus a raw float32 sidecar.
// The sidecar keeps full precision for training; the PPM is for eyeballs.

#include <cstddef>
#include <string>
#include <vector>

namespace lucid {

struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<float> rgb;  // row-major, interleaved, [0,1]

  Image() = default;
  Image(std::size_t w, std::size_t h)
      : width(w), height(h), rgb(w * h * 3, 0.0f) {}

  float& at(std::size_t y, std::size_t x, std::size_t c) {
    return rgb[(y * width + x) * 3 + c];
  }
  float at(std::size_t y, std::size_t x, std::size_t c) const {
    return rgb[(y * width + x) * 3 + c];
  }
};

// Binary PPM (P6, maxval 255). Values are clamped to [0,1] and rounded.
void save_ppm(const Image& img, const std::string& path);
Image load_ppm(const std::string& path);

// Raw little-endian float32 triplets, same layout as Image::rgb. The file
// carries no dimensions; they come from the paired PPM.
void save_f32(const Image& img, const std::string& path);
void load_f32_into(Image& img, const std::string& path);

// Loads the PPM and, when a sibling .f32 exists, replaces the pixel data
// with the full-precision version.
Image load_frame(const std::string& ppm_path);

// foo/bar.ppm -> foo/bar.f32
std::string sidecar_path(const std::string& ppm_path);

}  // namespace lucid
