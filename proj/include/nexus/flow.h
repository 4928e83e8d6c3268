#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nexus/depth_map.h"
#include "nexus/errors.h"
#include "nexus/geometry.h"

namespace nexus {

// Dense displacement field from a source view to a target view. Stored at the
// source resolution and evaluated at integer source pixels only. Values are
// kept in double precision; the .flo container quantizes to float32.
struct FlowField {
  int src_id = -1;
  int dst_id = -1;
  int width = 0;
  int height = 0;
  std::vector<double> u, v;
  std::vector<std::uint8_t> valid;

  FlowField() = default;
  FlowField(int src, int dst, int w, int h)
      : src_id(src),
        dst_id(dst),
        width(w),
        height(h),
        u(static_cast<std::size_t>(w) * h, 0.0),
        v(static_cast<std::size_t>(w) * h, 0.0),
        valid(static_cast<std::size_t>(w) * h, 0) {}

  bool InBounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
  std::size_t Index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }

  bool operator==(const FlowField&) const = default;
};

// Synthetic corruption model for flow fields: iid Gaussian jitter plus a
// seeded subset of outliers displaced uniformly within a disk.
struct FlowNoiseSpec {
  double gaussian_sigma = 0.0;   // pixels
  double outlier_fraction = 0.0; // in [0, 1]
  double outlier_max = 0.0;      // pixels
  std::uint64_t seed = 0;

  void Validate() const;
};

// Returns true when a matched point is within the target image, allowing the
// common half-pixel margin around the border pixel centers.
inline bool InsideWithMargin(const Eigen::Vector2d& p, int width, int height) {
  return p.x() >= -0.5 && p.x() <= width - 0.5 && p.y() >= -0.5 && p.y() <= height - 0.5;
}

// p_hat = p + flow(p). Empty when the pixel is masked or the displaced point
// falls outside the target bounds by more than half a pixel. The overloads
// differ in where the target bounds come from; the two-argument form assumes
// the target has the same resolution as the flow grid.
// Throws OutOfBoundsPixel when (x, y) is outside the flow grid itself.
std::optional<Eigen::Vector2d> MatchedPoint(const FlowField& flow, int x, int y, int dst_width,
                                            int dst_height);
std::optional<Eigen::Vector2d> MatchedPoint(const FlowField& flow, int x, int y);

// Middlebury .flo container. Layout: float32 magic 202021.25 ("PIEH"), int32
// width, int32 height, then row-major interleaved (u, v) float32 pairs,
// little-endian. Components with magnitude above 1e9 mark invalid pixels;
// writing emits 1e10 for them.
FlowField ReadFlo(std::istream& in);
void WriteFlo(const FlowField& flow, std::ostream& out);
FlowField ReadFloFile(const std::string& path);
void WriteFloFile(const FlowField& flow, const std::string& path);

// Exact correspondence field induced by a ground-truth depth map: backproject
// each source pixel at its depth and project into dst. Pixels whose depth is
// masked, whose projection lies behind the target camera, or whose match
// falls out of bounds are invalid.
FlowField SynthFlow(const CameraView& src, const CameraView& dst, const DepthMap& gt_depth);

// Pure, seed-deterministic corruption of a flow field.
FlowField PerturbFlow(const FlowField& flow, const FlowNoiseSpec& spec);

}  // namespace nexus
