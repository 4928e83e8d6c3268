#include "nexus/blending.h"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>

namespace nexus {

namespace {

constexpr double kSineFloor = 1e-9;
constexpr double kEpipoleInfinityRatio = 1e-9;  // |W.z| relative to the baseline
constexpr double kWeightRegularizer = 1e-6;     // pixels, strategy C

double AngleBetween(const Eigen::Vector3d& u, const Eigen::Vector3d& w) {
  return std::atan2(u.cross(w).norm(), u.dot(w));
}

}  // namespace

PairGeometry ComputePairGeometry(const ViewPair& pair, const Eigen::Vector2d& src_pixel,
                                 const Eigen::Vector2d& foot) {
  const CameraView& src = pair.src();
  const CameraView& dst = pair.dst();

  PairGeometry geom;
  geom.t = pair.baseline_length();

  // Angle at the source center between the baseline and the viewing ray.
  const Eigen::Vector3d src_ray_world = src.rotation.transpose() * pair.SrcRay(src_pixel);
  const Eigen::Vector3d baseline_world = dst.Center() - src.Center();
  geom.beta = AngleBetween(src_ray_world, baseline_world);

  // Everything else lives in the target camera frame. The epipole point is
  // the intersection of the baseline with the normalized plane z = 1.
  const Eigen::Vector3d w = pair.SrcCenterInDst();
  const Eigen::Vector3d foot_ray = dst.RayCam(foot);
  geom.alpha = AngleBetween(w, foot_ray);
  geom.epipole_finite = std::abs(w.z()) >= kEpipoleInfinityRatio * geom.t;
  if (!geom.epipole_finite) return geom;

  const Eigen::Vector3d epipole_point = w / w.z();
  geom.m = epipole_point.norm();
  geom.alpha_plane = AngleBetween(epipole_point, foot_ray);

  const Eigen::Vector3d along_line = foot_ray - epipole_point;  // in-plane, z = 0
  geom.dis_pro = along_line.norm();
  geom.theta = AngleBetween(-epipole_point, along_line);

  // Pixel parameterization of the line direction: a unit pixel step (ux, uy)
  // moves (ux / fx, uy / fy) on the normalized plane.
  Eigen::Vector2d pixel_dir(dst.fx * along_line.x(), dst.fy * along_line.y());
  const double pixel_dir_norm = pixel_dir.norm();
  if (pixel_dir_norm > 0) {
    pixel_dir /= pixel_dir_norm;
    geom.pixel_scale =
        std::hypot(pixel_dir.x() / dst.fx, pixel_dir.y() / dst.fy);
  }
  return geom;
}

PairGeometry ComputePairGeometry(const CameraView& src, const CameraView& dst,
                                 const Eigen::Vector2d& src_pixel, const Eigen::Vector2d& foot) {
  return ComputePairGeometry(ViewPair(src, dst), src_pixel, foot);
}

double SensitivityGradientClosedForm(const PairGeometry& geom) {
  if (!geom.epipole_finite) {
    throw DegenerateGeometry("closed form undefined for an epipole at infinity");
  }
  if (geom.dis_pro < 1e-12 || geom.pixel_scale <= 0) {
    throw DegenerateGeometry("foot coincides with the epipole");
  }
  const double sin_beta = std::sin(geom.beta);
  const double sin_theta = std::sin(geom.theta);
  const double sin_alpha_beta = std::sin(geom.alpha + geom.beta);
  const double sin_alpha_theta = std::sin(geom.alpha_plane + geom.theta);
  if (std::abs(sin_beta) < kSineFloor || std::abs(sin_theta) < kSineFloor ||
      std::abs(sin_alpha_beta) < kSineFloor || std::abs(sin_alpha_theta) < kSineFloor) {
    throw DegenerateGeometry("angle sine below threshold");
  }
  const double per_plane_unit = geom.t * std::abs(sin_beta) * sin_alpha_theta * sin_alpha_theta /
                                (geom.m * std::abs(sin_theta) * sin_alpha_beta * sin_alpha_beta);
  return per_plane_unit * geom.pixel_scale;
}

double SensitivityGradientNumeric(const ViewPair& pair, const Eigen::Vector2d& src_pixel,
                                  const Eigen::Vector2d& foot, double delta) {
  const EpipolarLine line = pair.LineThrough(src_pixel);
  const double norm = std::hypot(line.a, line.b);
  const Eigen::Vector2d dir(line.b / norm, -line.a / norm);

  // dis_ref = D * |K^-1 (p, 1)|: the source-ray norm converts ray-coefficient
  // depth into the camera-to-point distance.
  const double ray_norm = pair.SrcRay(src_pixel).norm();
  const TriangulatedDepth plus = pair.Triangulate(src_pixel, foot + delta * dir);
  const TriangulatedDepth minus = pair.Triangulate(src_pixel, foot - delta * dir);
  if (plus.status == TriangulationStatus::kNumericBlowup ||
      minus.status == TriangulationStatus::kNumericBlowup) {
    throw NumericBlowup("finite-difference probe hit the triangulation singularity");
  }
  return std::abs(plus.depth - minus.depth) * ray_norm / (2.0 * delta);
}

double SensitivityGradientNumeric(const CameraView& src, const CameraView& dst,
                                  const Eigen::Vector2d& src_pixel, const Eigen::Vector2d& foot,
                                  double delta) {
  return SensitivityGradientNumeric(ViewPair(src, dst), src_pixel, foot, delta);
}

double SensitivityGradient(const ViewPair& pair, const Eigen::Vector2d& src_pixel,
                           const Eigen::Vector2d& foot) {
  const PairGeometry geom = ComputePairGeometry(pair, src_pixel, foot);
  try {
    return SensitivityGradientClosedForm(geom);
  } catch (const DegenerateGeometry&) {
  }
  try {
    return SensitivityGradientNumeric(pair, src_pixel, foot);
  } catch (const Error&) {
    throw DegenerateGeometry("sensitivity undefined: closed form and numeric probe both failed");
  }
}

double SensitivityGradient(const CameraView& src, const CameraView& dst,
                           const Eigen::Vector2d& src_pixel, const Eigen::Vector2d& foot) {
  return SensitivityGradient(ViewPair(src, dst), src_pixel, foot);
}

std::optional<BlendStrategy> BlendStrategyFromString(const std::string& name) {
  if (name == "average") return BlendStrategy::kAverage;
  if (name == "nearest") return BlendStrategy::kNearest;
  if (name == "weighted") return BlendStrategy::kWeightedInverseResidual;
  if (name == "frdb") return BlendStrategy::kFrdb;
  return std::nullopt;
}

std::string ToString(BlendStrategy strategy) {
  switch (strategy) {
    case BlendStrategy::kAverage:
      return "average";
    case BlendStrategy::kNearest:
      return "nearest";
    case BlendStrategy::kWeightedInverseResidual:
      return "weighted";
    case BlendStrategy::kFrdb:
      return "frdb";
  }
  return "unknown";
}

BlendResult BlendDepth(std::span<const DepthCandidate> candidates, BlendStrategy strategy,
                       std::span<const CameraView> views) {
  if (candidates.empty()) throw NoCandidates("blend called with no candidates");

  auto center_of = [&views](int id) -> Eigen::Vector3d {
    for (const auto& view : views) {
      if (view.id == id) return view.Center();
    }
    throw InconsistentScene("view " + std::to_string(id) + " not found while blending");
  };

  BlendResult result;
  switch (strategy) {
    case BlendStrategy::kAverage: {
      double sum = 0;
      for (const auto& c : candidates) sum += c.depth;
      result.depth = sum / static_cast<double>(candidates.size());
      break;
    }
    case BlendStrategy::kNearest: {
      const Eigen::Vector3d src_center = center_of(candidates.front().src_id);
      const DepthCandidate* best = nullptr;
      double best_dist = std::numeric_limits<double>::infinity();
      for (const auto& c : candidates) {
        const double dist = (center_of(c.dst_id) - src_center).norm();
        if (dist < best_dist || (dist == best_dist && best && c.dst_id < best->dst_id)) {
          best = &c;
          best_dist = dist;
        }
      }
      result.depth = best->depth;
      result.chosen_dst = best->dst_id;
      break;
    }
    case BlendStrategy::kWeightedInverseResidual: {
      double weight_sum = 0, value_sum = 0;
      for (const auto& c : candidates) {
        const double w = 1.0 / (c.residual + kWeightRegularizer);
        weight_sum += w;
        value_sum += w * c.depth;
      }
      result.depth = value_sum / weight_sum;
      break;
    }
    case BlendStrategy::kFrdb: {
      const DepthCandidate* best = nullptr;
      for (const auto& c : candidates) {
        if (!best || c.sensitivity < best->sensitivity ||
            (c.sensitivity == best->sensitivity && c.dst_id < best->dst_id)) {
          best = &c;
        }
      }
      result.depth = best->depth;
      result.chosen_dst = best->dst_id;
      break;
    }
  }
  return result;
}

}  // namespace nexus
