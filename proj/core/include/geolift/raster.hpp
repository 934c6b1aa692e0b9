#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "geolift/error.hpp"

namespace geolift {

// Row-major single-channel raster.
template <typename T>
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<T> data;

  Raster() = default;
  Raster(int w, int h, T fill = T{})
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  T& operator()(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  const T& operator()(int x, int y) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
  bool same_shape(int w, int h) const { return width == w && height == h; }
  template <typename U>
  bool same_shape(const Raster<U>& o) const { return width == o.width && height == o.height; }
};

using DepthRaster = Raster<double>;
using CodeRaster = Raster<std::uint8_t>;

// Multi-channel float raster, pixel-interleaved: data[(y * width + x) * channels + c].
struct FeatureStack {
  int width = 0;
  int height = 0;
  std::vector<std::string> names;
  std::vector<float> data;

  FeatureStack() = default;
  FeatureStack(int w, int h, std::vector<std::string> channel_names);

  int channels() const { return static_cast<int>(names.size()); }
  float& at(int x, int y, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * names.size() + c];
  }
  float at(int x, int y, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * names.size() + c];
  }
  const float* pixel(int x, int y) const {
    return data.data() + (static_cast<std::size_t>(y) * width + x) * names.size();
  }
  // Channel-wise concatenation; shapes must match.
  static FeatureStack concat(const std::vector<const FeatureStack*>& parts);
};

// Grayscale PFM ("Pf"), little-endian (negative scale), rows bottom to top as
// the format prescribes. Values are written as float32; +inf survives.
std::string encode_pfm(const DepthRaster& raster);
DepthRaster decode_pfm(std::string_view bytes);

// Binary PGM (P5), maxval 255.
std::string encode_pgm(const CodeRaster& raster);
CodeRaster decode_pgm(std::string_view bytes);

// "GLFEAT1\n" + one-line JSON header {width,height,channels,names} + "\n",
// then row-major little-endian float32 samples.
std::string encode_feature_stack(const FeatureStack& stack);
FeatureStack decode_feature_stack(std::string_view bytes);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view bytes);

}  // namespace geolift
