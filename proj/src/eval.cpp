#include "nexus/eval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace nexus {

namespace {

struct ErrorAccumulator {
  double abs_sum = 0;
  double sq_sum = 0;
  std::size_t compared = 0;
  std::size_t gt_valid = 0;
  double gt_min = std::numeric_limits<double>::infinity();
  double gt_max = -std::numeric_limits<double>::infinity();

  void Add(const DepthMap& pred, const DepthMap& gt) {
    if (pred.width != gt.width || pred.height != gt.height) {
      throw DimensionMismatch("depth map dimensions differ");
    }
    for (std::size_t i = 0; i < gt.mask.size(); ++i) {
      if (!gt.mask[i]) continue;
      ++gt_valid;
      gt_min = std::min(gt_min, gt.depth[i]);
      gt_max = std::max(gt_max, gt.depth[i]);
      if (!pred.mask[i]) continue;
      const double err = pred.depth[i] - gt.depth[i];
      abs_sum += std::abs(err);
      sq_sum += err * err;
      ++compared;
    }
  }

  DepthErrorStats Finish() const {
    if (gt_valid == 0 || compared == 0) {
      throw NoOverlap("no commonly valid pixels between prediction and ground truth");
    }
    DepthErrorStats stats;
    stats.mae = abs_sum / compared;
    stats.rmse = std::sqrt(sq_sum / compared);
    const double range = gt_max - gt_min;
    stats.rel_mae = range > 0 ? stats.mae / range : 0.0;
    stats.coverage = static_cast<double>(compared) / gt_valid;
    return stats;
  }
};

}  // namespace

DepthErrorStats DepthError(const DepthMap& pred, const DepthMap& gt) {
  ErrorAccumulator acc;
  acc.Add(pred, gt);
  return acc.Finish();
}

DepthErrorStats AggregateDepthError(std::span<const DepthMap> pred, std::span<const DepthMap> gt) {
  ErrorAccumulator acc;
  for (const auto& p : pred) {
    for (const auto& g : gt) {
      if (g.view_id == p.view_id) {
        acc.Add(p, g);
        break;
      }
    }
  }
  return acc.Finish();
}

namespace {

// Bilinear ground-truth depth at a subpixel location; falls back to the
// nearest valid sample when a corner is masked and fails only if none is.
bool SampleGtDepth(const DepthMap& gt, const Eigen::Vector2d& p, double* out) {
  const int x0 = static_cast<int>(std::floor(p.x()));
  const int y0 = static_cast<int>(std::floor(p.y()));
  const double tx = p.x() - x0;
  const double ty = p.y() - y0;
  double weight_sum = 0, value_sum = 0;
  bool all_corners = true;
  for (int dy = 0; dy < 2; ++dy) {
    for (int dx = 0; dx < 2; ++dx) {
      const int x = x0 + dx, y = y0 + dy;
      const double w = (dx ? tx : 1 - tx) * (dy ? ty : 1 - ty);
      if (gt.InBounds(x, y) && gt.ValidAt(x, y)) {
        weight_sum += w;
        value_sum += w * gt.At(x, y);
      } else {
        all_corners = false;
      }
    }
  }
  if (all_corners) {
    *out = value_sum;
    return true;
  }
  const int xn = std::clamp(static_cast<int>(std::lround(p.x())), 0, gt.width - 1);
  const int yn = std::clamp(static_cast<int>(std::lround(p.y())), 0, gt.height - 1);
  if (!gt.ValidAt(xn, yn)) return false;
  *out = gt.At(xn, yn);
  return true;
}

}  // namespace

ReprojectionStats ReprojectionEval(const PointCloud& cloud, const CameraView& holdout,
                                   const DepthMap& gt_depth,
                                   const std::vector<std::uint8_t>* covisible) {
  if (cloud.points.empty()) throw EmptyCloud("cannot reproject an empty cloud");
  if (gt_depth.width != holdout.width || gt_depth.height != holdout.height) {
    throw DimensionMismatch("holdout ground truth does not match the view");
  }
  if (covisible && covisible->size() != gt_depth.mask.size()) {
    throw DimensionMismatch("co-visibility mask does not match the view");
  }

  struct Splat {
    double depth = std::numeric_limits<double>::infinity();
    Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
  };
  std::vector<Splat> zbuffer(gt_depth.mask.size());

  // Each point stands for one source-pixel footprint, so it covers its 3x3
  // pixel neighborhood; the nearest depth wins per pixel.
  for (const auto& point : cloud.points) {
    Projection proj;
    if (!TryProject(holdout, point.position, &proj) || proj.depth <= 0) continue;
    const int cx = static_cast<int>(std::lround(proj.pixel.x()));
    const int cy = static_cast<int>(std::lround(proj.pixel.y()));
    for (int y = cy - 1; y <= cy + 1; ++y) {
      for (int x = cx - 1; x <= cx + 1; ++x) {
        if (x < 0 || x >= holdout.width || y < 0 || y >= holdout.height) continue;
        Splat& slot = zbuffer[gt_depth.Index(x, y)];
        if (proj.depth < slot.depth) {
          slot.depth = proj.depth;
          slot.pixel = proj.pixel;
        }
      }
    }
  }

  ReprojectionStats stats;
  std::vector<double> errors;
  errors.reserve(zbuffer.size() / 4);
  for (std::size_t i = 0; i < zbuffer.size(); ++i) {
    const bool in_region = covisible ? (*covisible)[i] != 0 : gt_depth.mask[i] != 0;
    if (!in_region) continue;
    ++stats.covisible_pixels;
    if (!std::isfinite(zbuffer[i].depth)) continue;
    ++stats.covered_pixels;
    double gt_value;
    if (SampleGtDepth(gt_depth, zbuffer[i].pixel, &gt_value)) {
      errors.push_back(std::abs(zbuffer[i].depth - gt_value));
    }
  }
  if (stats.covisible_pixels == 0) throw NoOverlap("empty co-visible region");
  stats.coverage = static_cast<double>(stats.covered_pixels) / stats.covisible_pixels;
  if (!errors.empty()) {
    auto mid = errors.begin() + errors.size() / 2;
    std::nth_element(errors.begin(), mid, errors.end());
    stats.median_depth_err = *mid;
  }
  return stats;
}

std::vector<std::uint8_t> CoVisibleMask(const SceneBundle& bundle, int holdout_id,
                                        std::span<const int> source_ids) {
  const CameraView* holdout = bundle.scene.FindView(holdout_id);
  const DepthMap* holdout_gt = bundle.FindGtDepth(holdout_id);
  if (!holdout || !holdout_gt) throw InconsistentScene("holdout view missing from bundle");

  std::vector<const CameraView*> sources;
  std::vector<const DepthMap*> source_gts;
  for (int id : source_ids) {
    const CameraView* view = bundle.scene.FindView(id);
    const DepthMap* gt = bundle.FindGtDepth(id);
    if (!view || !gt) throw InconsistentScene("source view missing from bundle");
    sources.push_back(view);
    source_gts.push_back(gt);
  }

  std::vector<std::uint8_t> mask(holdout_gt->mask.size(), 0);
  for (int y = 0; y < holdout->height; ++y) {
    for (int x = 0; x < holdout->width; ++x) {
      const std::size_t i = holdout_gt->Index(x, y);
      if (!holdout_gt->mask[i]) continue;
      const Eigen::Vector3d world =
          Backproject(*holdout, {double(x), double(y)}, holdout_gt->depth[i]);
      for (std::size_t s = 0; s < sources.size(); ++s) {
        Projection proj;
        if (!TryProject(*sources[s], world, &proj) || proj.depth <= 0) continue;
        if (!InsideWithMargin(proj.pixel, sources[s]->width, sources[s]->height)) continue;
        const int sx = std::clamp(static_cast<int>(std::lround(proj.pixel.x())), 0,
                                  sources[s]->width - 1);
        const int sy = std::clamp(static_cast<int>(std::lround(proj.pixel.y())), 0,
                                  sources[s]->height - 1);
        if (!source_gts[s]->ValidAt(sx, sy)) continue;
        // Occlusion test against the source's own ground truth.
        const double srcp_depth = source_gts[s]->At(sx, sy);
        if (proj.depth <= srcp_depth + 0.01 * proj.depth + 0.01) {
          mask[i] = 1;
          break;
        }
      }
    }
  }
  return mask;
}

namespace {

nlohmann::ordered_json StatsToJson(const DepthErrorStats& stats) {
  nlohmann::ordered_json j;
  j["mae"] = stats.mae;
  j["rmse"] = stats.rmse;
  j["rel_mae"] = stats.rel_mae;
  j["coverage"] = stats.coverage;
  return j;
}

}  // namespace

nlohmann::ordered_json EvalReport::ToJson() const {
  nlohmann::ordered_json j;
  if (!per_view.empty()) {
    nlohmann::ordered_json views = nlohmann::ordered_json::array();
    for (const auto& view : per_view) {
      nlohmann::ordered_json v;
      v["view_id"] = view.view_id;
      v["mae"] = view.stats.mae;
      v["rmse"] = view.stats.rmse;
      v["rel_mae"] = view.stats.rel_mae;
      v["coverage"] = view.stats.coverage;
      v["valid_fraction"] = view.valid_fraction;
      views.push_back(std::move(v));
    }
    j["per_view"] = std::move(views);
  }
  if (aggregate) j["aggregate"] = StatsToJson(*aggregate);
  j["point_count"] = point_count;
  j["pruned_fraction"] = pruned_fraction;
  if (reprojection) {
    nlohmann::ordered_json r;
    r["median_depth_err"] = reprojection->median_depth_err;
    r["coverage"] = reprojection->coverage;
    r["covered_pixels"] = reprojection->covered_pixels;
    r["covisible_pixels"] = reprojection->covisible_pixels;
    j["reprojection"] = std::move(r);
  }
  if (!ablation.empty()) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : ablation) {
      nlohmann::ordered_json r;
      r["name"] = row.name;
      r["strategy"] = ToString(row.strategy);
      r["ffdp"] = row.ffdp;
      r["mae"] = row.depth.mae;
      r["rmse"] = row.depth.rmse;
      r["rel_mae"] = row.depth.rel_mae;
      r["coverage"] = row.depth.coverage;
      r["pruned_fraction"] = row.pruned_fraction;
      r["point_count"] = row.point_count;
      rows.push_back(std::move(r));
    }
    j["ablation"] = std::move(rows);
  }
  return j;
}

std::string EvalReport::ToTable() const {
  std::string out;
  char line[256];
  if (!per_view.empty()) {
    out += "view        mae       rmse    rel_mae   coverage\n";
    for (const auto& view : per_view) {
      std::snprintf(line, sizeof(line), "%4d %10.6f %10.6f %10.6f %10.6f\n", view.view_id,
                    view.stats.mae, view.stats.rmse, view.stats.rel_mae, view.stats.coverage);
      out += line;
    }
  }
  if (aggregate) {
    std::snprintf(line, sizeof(line), "all  %10.6f %10.6f %10.6f %10.6f\n", aggregate->mae,
                  aggregate->rmse, aggregate->rel_mae, aggregate->coverage);
    out += line;
  }
  if (reprojection) {
    std::snprintf(line, sizeof(line), "reprojection: median_err %.6f coverage %.4f\n",
                  reprojection->median_depth_err, reprojection->coverage);
    out += line;
  }
  if (!ablation.empty()) {
    out += "config                    mae       rmse     points     pruned\n";
    for (const auto& row : ablation) {
      std::snprintf(line, sizeof(line), "%-20s %10.6f %10.6f %10zu %10.4f\n", row.name.c_str(),
                    row.depth.mae, row.depth.rmse, row.point_count, row.pruned_fraction);
      out += line;
    }
  }
  return out;
}

EvalReport AblationRun(const SceneBundle& bundle, const FlowNoiseSpec& noise, double epsilon_d,
                       int stride, int threads) {
  noise.Validate();

  // One corrupted scene shared by every configuration. Each ordered pair gets
  // its own derived seed so per-pair noise is independent.
  Scene corrupted = bundle.scene;
  for (auto& [key, flow] : corrupted.flows) {
    FlowNoiseSpec pair_noise = noise;
    pair_noise.seed = noise.seed ^ (0x9e3779b97f4a7c15ULL * (1000003ULL * (key.first + 7) +
                                                             static_cast<std::uint64_t>(key.second + 13)));
    flow = PerturbFlow(flow, pair_noise);
  }

  static constexpr const char* kRowLetters = "ABCDEFGH";
  static constexpr BlendStrategy kOrder[4] = {
      BlendStrategy::kAverage, BlendStrategy::kNearest, BlendStrategy::kWeightedInverseResidual,
      BlendStrategy::kFrdb};

  EvalReport report;
  int row_index = 0;
  for (bool ffdp : {false, true}) {
    for (BlendStrategy strategy : kOrder) {
      DensifyOptions options;
      options.strategy = strategy;
      options.epsilon_d = epsilon_d;
      options.prune = ffdp;
      options.stride = stride;
      options.threads = threads;
      const DensifyResult result = DensifyScene(corrupted, options);

      AblationRow row;
      row.name = std::string(1, kRowLetters[row_index]) + ". " + ToString(strategy) +
                 (ffdp ? " + ffdp" : "");
      row.strategy = strategy;
      row.ffdp = ffdp;
      row.depth = AggregateDepthError(result.depth_maps, bundle.gt_depth);
      row.point_count = result.cloud.points.size();
      row.pruned_fraction = result.stats.candidates_valid == 0
                                ? 0.0
                                : static_cast<double>(result.stats.candidates_pruned) /
                                      result.stats.candidates_valid;
      report.ablation.push_back(std::move(row));
      ++row_index;
    }
  }
  return report;
}

}  // namespace nexus
