#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nexus/blending.h"
#include "nexus/depth_map.h"
#include "nexus/flow.h"
#include "nexus/geometry.h"
#include "nexus/triangulation.h"

namespace nexus {

struct CloudPoint {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  std::array<std::uint8_t, 3> color = {255, 255, 255};
  int src_view = -1;
  int row = -1;
  int col = -1;
};

// World-space points in canonical (src_view, row-major pixel) order.
struct PointCloud {
  std::vector<CloudPoint> points;
};

// Calibrated views plus the ordered-pair flow fields between them.
struct Scene {
  std::vector<CameraView> views;
  std::map<std::pair<int, int>, FlowField> flows;

  const CameraView* FindView(int id) const;
  const FlowField* FindFlow(int src_id, int dst_id) const;
  void AddFlow(FlowField flow);

  // Checks view count, ids, camera invariants and flow dimensions.
  void Validate() const;
};

// Keeps exactly the valid candidates with residual strictly below epsilon_d,
// preserving order.
std::vector<DepthCandidate> Prune(std::span<const DepthCandidate> candidates, double epsilon_d);

struct DensifyOptions {
  BlendStrategy strategy = BlendStrategy::kFrdb;
  double epsilon_d = 1.0;
  bool prune = true;
  int stride = 1;
  std::optional<std::pair<double, double>> depth_bounds;
  int threads = 0;  // 0 = all hardware threads

  void Validate() const;
};

struct DensifyStats {
  std::size_t pixels_sampled = 0;
  std::size_t pixels_valid = 0;
  std::size_t candidates_total = 0;   // one per sampled pixel and target view
  std::size_t candidates_valid = 0;   // status kValid before pruning
  std::size_t candidates_pruned = 0;  // valid candidates removed by the residual filter
  std::vector<std::pair<int, double>> per_view_valid_fraction;
};

struct DensifyResult {
  std::vector<DepthMap> depth_maps;  // one per view, ascending id
  PointCloud cloud;
  DensifyStats stats;
};

// Full pipeline over a scene: per stride-th pixel of every view, gather the
// N-1 candidates, prune, blend, and lift valid depths to colored world
// points. Deterministic for any thread count. Throws MissingFlow when an
// ordered pair has no flow field and InconsistentScene for malformed input.
DensifyResult DensifyScene(const Scene& scene, const DensifyOptions& options);

// Binary little-endian PLY with float positions and uchar colors, vertices in
// canonical order. The reader accepts exactly this layout.
std::string WritePly(const PointCloud& cloud);
PointCloud ReadPly(std::istream& in);
void WritePlyFile(const PointCloud& cloud, const std::string& path);
PointCloud ReadPlyFile(const std::string& path);

// PFM ("Pf", scale -1.0, float32 rows bottom-to-top). Invalid pixels are
// encoded as 0.0 and masked out again on read.
std::string WritePfm(const DepthMap& depth);
DepthMap ReadPfm(std::istream& in);
void WritePfmFile(const DepthMap& depth, const std::string& path);
DepthMap ReadPfmFile(const std::string& path);

}  // namespace nexus
