#pragma once

#include <cstdint>
#include <vector>

namespace nexus {

// Per-view depth grid with a validity mask. Valid pixels carry finite,
// positive z-depth in the owning camera's frame.
struct DepthMap {
  int view_id = -1;
  int width = 0;
  int height = 0;
  std::vector<double> depth;
  std::vector<std::uint8_t> mask;

  DepthMap() = default;
  DepthMap(int view, int w, int h)
      : view_id(view),
        width(w),
        height(h),
        depth(static_cast<std::size_t>(w) * h, 0.0),
        mask(static_cast<std::size_t>(w) * h, 0) {}

  bool InBounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
  std::size_t Index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }

  bool ValidAt(int x, int y) const { return mask[Index(x, y)] != 0; }
  double At(int x, int y) const { return depth[Index(x, y)]; }

  void Set(int x, int y, double d) {
    depth[Index(x, y)] = d;
    mask[Index(x, y)] = 1;
  }

  std::size_t ValidCount() const {
    std::size_t n = 0;
    for (auto m : mask) n += m != 0;
    return n;
  }

  bool operator==(const DepthMap&) const = default;
};

}  // namespace nexus
