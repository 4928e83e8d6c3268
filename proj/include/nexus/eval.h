#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "nexus/fusion.h"
#include "nexus/synth.h"

namespace nexus {

struct DepthErrorStats {
  double mae = 0;
  double rmse = 0;
  double rel_mae = 0;   // MAE over the valid ground-truth depth range
  double coverage = 0;  // valid(pred and gt) / valid(gt)
};

// Metrics over pixels valid in both maps. Throws DimensionMismatch and
// NoOverlap (no commonly valid pixel).
DepthErrorStats DepthError(const DepthMap& pred, const DepthMap& gt);

// Pixel-weighted metrics across several views; maps are matched to ground
// truth by view id.
DepthErrorStats AggregateDepthError(std::span<const DepthMap> pred, std::span<const DepthMap> gt);

struct ReprojectionStats {
  double median_depth_err = 0;
  double coverage = 0;
  std::size_t covered_pixels = 0;
  std::size_t covisible_pixels = 0;
};

// Z-buffer splat of the cloud into the holdout view: every point covers one
// source-pixel footprint (its 3x3 pixel neighborhood) and the nearest depth
// wins per pixel. Each winner is compared against the ground truth sampled at
// its exact subpixel projection. `covisible`, when given, restricts coverage
// accounting to that mask; by default every valid gt pixel counts. Throws
// EmptyCloud.
ReprojectionStats ReprojectionEval(const PointCloud& cloud, const CameraView& holdout,
                                   const DepthMap& gt_depth,
                                   const std::vector<std::uint8_t>* covisible = nullptr);

// Holdout pixels whose ground-truth surface point is seen, unoccluded and in
// bounds, by at least one of the given source views.
std::vector<std::uint8_t> CoVisibleMask(const SceneBundle& bundle, int holdout_id,
                                        std::span<const int> source_ids);

struct ViewDepthReport {
  int view_id = -1;
  DepthErrorStats stats;
  double valid_fraction = 0;
};

struct AblationRow {
  std::string name;
  BlendStrategy strategy = BlendStrategy::kAverage;
  bool ffdp = false;
  DepthErrorStats depth;
  double pruned_fraction = 0;
  std::size_t point_count = 0;
};

struct EvalReport {
  std::vector<ViewDepthReport> per_view;
  std::optional<DepthErrorStats> aggregate;
  std::size_t point_count = 0;
  double pruned_fraction = 0;
  std::optional<ReprojectionStats> reprojection;
  std::vector<AblationRow> ablation;

  nlohmann::ordered_json ToJson() const;
  std::string ToTable() const;
};

// The four blending strategies with and without pruning (eight rows, paper
// ordering A..H) on a bundle whose flows are corrupted by `noise`. Every
// configuration sees the same corrupted flows. Deterministic per seed.
EvalReport AblationRun(const SceneBundle& bundle, const FlowNoiseSpec& noise, double epsilon_d,
                       int stride = 1, int threads = 0);

}  // namespace nexus
