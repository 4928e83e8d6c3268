#include "nexus/triangulation.h"

#include <Eigen/Geometry>

#include <cmath>

#include "nexus/blending.h"

namespace nexus {

namespace {

constexpr double kLineDegeneracy = 1e-18;  // on a^2 + b^2
constexpr double kRayDegeneracy = 1e-14;   // on |r x H|

}  // namespace

Eigen::Vector2d PerpendicularFoot(const EpipolarLine& line, const Eigen::Vector2d& match) {
  const double a = line.a, b = line.b, c = line.c;
  const double n2 = a * a + b * b;
  if (n2 < kLineDegeneracy) throw DegenerateLine("cannot project onto a degenerate line");
  return {(b * b * match.x() - a * b * match.y() - a * c) / n2,
          (a * a * match.y() - a * b * match.x() - b * c) / n2};
}

double EpipolarResidual(const EpipolarLine& line, const Eigen::Vector2d& match) {
  const double n2 = line.a * line.a + line.b * line.b;
  if (n2 < kLineDegeneracy) throw DegenerateLine("residual undefined for a degenerate line");
  return std::abs(line.a * match.x() + line.b * match.y() + line.c) / std::sqrt(n2);
}

ViewPair::ViewPair(const CameraView& src, const CameraView& dst) : src_(&src), dst_(&dst) {
  F_ = FundamentalMatrix(src, dst);  // also rejects coincident centers
  kinv_src_ = src.Kinv();
  kinv_dst_ = dst.Kinv();
  target_to_src_rot_ = src.rotation * dst.rotation.transpose();
  h_transform_ = target_to_src_rot_ * kinv_dst_;
  const Eigen::Vector3d src_center = src.Center();
  const Eigen::Vector3d dst_center = dst.Center();
  baseline_src_ = src.rotation * (dst_center - src_center);
  src_center_in_dst_ = dst.rotation * src_center + dst.translation;
  baseline_length_ = (dst_center - src_center).norm();
}

EpipolarLine ViewPair::LineThrough(const Eigen::Vector2d& src_pixel) const {
  return ComputeEpipolarLine(F_, src_pixel);
}

Eigen::Vector3d ViewPair::SrcRay(const Eigen::Vector2d& src_pixel) const {
  return kinv_src_ * Eigen::Vector3d(src_pixel.x(), src_pixel.y(), 1.0);
}

Eigen::Vector3d ViewPair::TargetRayInSrc(const Eigen::Vector2d& dst_pixel) const {
  return h_transform_ * Eigen::Vector3d(dst_pixel.x(), dst_pixel.y(), 1.0);
}

TriangulatedDepth ViewPair::Triangulate(const Eigen::Vector2d& src_pixel,
                                        const Eigen::Vector2d& foot) const {
  const Eigen::Vector3d r = SrcRay(src_pixel);
  const Eigen::Vector3d h = TargetRayInSrc(foot);
  const Eigen::Vector3d& b = baseline_src_;

  const Eigen::Vector3d r_cross_h = r.cross(h);
  const double denom2 = r_cross_h.squaredNorm();
  if (std::sqrt(denom2) < kRayDegeneracy) {
    return {TriangulationStatus::kNumericBlowup, 0.0};
  }

  const Eigen::Vector3d b_cross_h = b.cross(h);
  TriangulatedDepth result;
  result.depth = b_cross_h.norm() / std::sqrt(denom2);

  // Signed depths along both rays decide cheirality; the quotient above is
  // blind to the side of the camera the intersection falls on.
  const double d_signed = b_cross_h.dot(r_cross_h) / denom2;
  const Eigen::Vector3d h_cross_r = -r_cross_h;
  const double s_signed = -b.cross(r).dot(h_cross_r) / denom2;
  result.status = (d_signed > 0 && s_signed > 0) ? TriangulationStatus::kOk
                                                 : TriangulationStatus::kBehindCamera;
  return result;
}

DepthCandidate ViewPair::Candidate(int x, int y, const FlowField& flow) const {
  DepthCandidate cand;
  cand.src_id = src_->id;
  cand.dst_id = dst_->id;
  cand.x = x;
  cand.y = y;

  const auto matched = MatchedPoint(flow, x, y, dst_->width, dst_->height);
  if (!matched) {
    cand.status = CandidateStatus::kOffImage;
    return cand;
  }

  const Eigen::Vector2d src_pixel(x, y);
  const Eigen::Vector3d line_vec = F_ * Eigen::Vector3d(src_pixel.x(), src_pixel.y(), 1.0);
  const EpipolarLine line{line_vec.x(), line_vec.y(), line_vec.z()};
  if (line.a * line.a + line.b * line.b < kLineDegeneracy) {
    cand.status = CandidateStatus::kDegenerateLine;
    return cand;
  }

  cand.foot = PerpendicularFoot(line, *matched);
  cand.residual = EpipolarResidual(line, *matched);

  const TriangulatedDepth tri = Triangulate(src_pixel, cand.foot);
  if (tri.status == TriangulationStatus::kNumericBlowup) {
    cand.status = CandidateStatus::kDegenerateLine;
    return cand;
  }
  cand.depth = tri.depth;
  if (tri.status == TriangulationStatus::kBehindCamera) {
    cand.status = CandidateStatus::kBehindCamera;
    return cand;
  }

  try {
    cand.sensitivity = SensitivityGradient(*this, src_pixel, cand.foot);
  } catch (const Error&) {
    cand.status = CandidateStatus::kDegenerateLine;
    return cand;
  }
  cand.status = CandidateStatus::kValid;
  return cand;
}

TriangulatedDepth TriangulateDepth(const CameraView& src, const CameraView& dst,
                                   const Eigen::Vector2d& src_pixel, const Eigen::Vector2d& foot) {
  return ViewPair(src, dst).Triangulate(src_pixel, foot);
}

double EpipolarDepth(const CameraView& src, const CameraView& dst, const Eigen::Vector2d& src_pixel,
                     const Eigen::Vector2d& foot) {
  const TriangulatedDepth tri = TriangulateDepth(src, dst, src_pixel, foot);
  if (tri.status == TriangulationStatus::kNumericBlowup) {
    throw NumericBlowup("rays are numerically parallel; match at or near the epipole");
  }
  return tri.depth;
}

DepthCandidate MakeDepthCandidate(const CameraView& src, const CameraView& dst,
                                  const FlowField& flow, int x, int y) {
  return ViewPair(src, dst).Candidate(x, y, flow);
}

}  // namespace nexus
