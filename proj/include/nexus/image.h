#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace nexus {

// Plain 8-bit RGB raster, row-major, interleaved channels.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 0) {}

  bool InBounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }

  std::size_t Index(int x, int y) const {
    return (static_cast<std::size_t>(y) * width + x) * 3;
  }

  const std::uint8_t* Pixel(int x, int y) const { return rgb.data() + Index(x, y); }
  std::uint8_t* Pixel(int x, int y) { return rgb.data() + Index(x, y); }

  bool operator==(const Image&) const = default;
};

Image ReadPng(const std::string& path);
void WritePng(const Image& image, const std::string& path);

}  // namespace nexus
