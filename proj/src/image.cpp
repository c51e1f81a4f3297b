#include "lucid/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>

#include "lucid/errors.hpp"

namespace lucid {

namespace {

void check_dims(const Image& img, const char* who) {
  if (img.width == 0 || img.height == 0 ||
      img.rgb.size() != img.width * img.height * 3) {
    throw ContractError(std::string(who) + ": image buffer does not match " +
                        std::to_string(img.width) + "x" +
                        std::to_string(img.height));
  }
}

// Skips whitespace and '#' comments between PPM header tokens.
std::string next_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (!std::isspace(c)) {
      tok.push_back(static_cast<char>(c));
      break;
    }
  }
  while ((c = in.get()) != EOF && !std::isspace(c))
    tok.push_back(static_cast<char>(c));
  return tok;
}

}  // namespace

void save_ppm(const Image& img, const std::string& path) {
  check_dims(img, "save_ppm");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_ppm: cannot open " + path);
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> bytes(img.rgb.size());
  for (std::size_t i = 0; i < img.rgb.size(); ++i) {
    float v = std::clamp(img.rgb[i], 0.0f, 1.0f);
    bytes[i] = static_cast<unsigned char>(std::lround(v * 255.0f));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("save_ppm: write failed for " + path);
}

Image load_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_ppm: cannot open " + path);
  if (next_token(in) != "P6") {
    throw ParseError("load_ppm: " + path + " is not a binary PPM");
  }
  auto parse_num = [&](const char* what) -> std::size_t {
    std::string tok = next_token(in);
    try {
      long v = std::stol(tok);
      if (v <= 0) throw std::out_of_range("");
      return static_cast<std::size_t>(v);
    } catch (...) {
      throw ParseError(std::string("load_ppm: bad ") + what + " in " + path);
    }
  };
  std::size_t w = parse_num("width");
  std::size_t h = parse_num("height");
  std::size_t maxval = parse_num("maxval");
  if (maxval != 255) {
    throw ParseError("load_ppm: only maxval 255 is supported, got " +
                     std::to_string(maxval));
  }
  // the single whitespace byte after maxval was already consumed by
  // next_token's trailing read
  Image img(w, h);
  std::vector<unsigned char> bytes(w * h * 3);
  in.read(reinterpret_cast<char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw ParseError("load_ppm: truncated pixel data in " + path);
  }
  for (std::size_t i = 0; i < bytes.size(); ++i)
    img.rgb[i] = static_cast<float>(bytes[i]) / 255.0f;
  return img;
}

void save_f32(const Image& img, const std::string& path) {
  check_dims(img, "save_f32");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("save_f32: cannot open " + path);
  out.write(reinterpret_cast<const char*>(img.rgb.data()),
            static_cast<std::streamsize>(img.rgb.size() * sizeof(float)));
  if (!out) throw IoError("save_f32: write failed for " + path);
}

void load_f32_into(Image& img, const std::string& path) {
  check_dims(img, "load_f32_into");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_f32_into: cannot open " + path);
  in.seekg(0, std::ios::end);
  auto bytes = in.tellg();
  in.seekg(0);
  if (static_cast<std::size_t>(bytes) != img.rgb.size() * sizeof(float)) {
    throw ParseError("load_f32_into: " + path + " holds " +
                     std::to_string(bytes) + " bytes, expected " +
                     std::to_string(img.rgb.size() * sizeof(float)));
  }
  in.read(reinterpret_cast<char*>(img.rgb.data()), bytes);
  if (!in) throw IoError("load_f32_into: read failed for " + path);
}

std::string sidecar_path(const std::string& ppm_path) {
  std::filesystem::path p(ppm_path);
  p.replace_extension(".f32");
  return p.string();
}

Image load_frame(const std::string& ppm_path) {
  Image img = load_ppm(ppm_path);
  std::string f32 = sidecar_path(ppm_path);
  if (std::filesystem::exists(f32)) load_f32_into(img, f32);
  return img;
}

}  // namespace lucid
