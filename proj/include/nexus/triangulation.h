#pragma once

#include <Eigen/Core>

#include "nexus/flow.h"
#include "nexus/geometry.h"

namespace nexus {

enum class CandidateStatus {
  kValid,
  kBehindCamera,   // triangulated point has non-positive depth in either view
  kOffImage,       // flow invalid or match outside the target image
  kDegenerateLine, // epipolar line vanishes or rays are numerically parallel
};

// One per-pixel, per-view-pair depth hypothesis.
struct DepthCandidate {
  int src_id = -1;
  int dst_id = -1;
  int x = 0, y = 0;                              // source pixel
  Eigen::Vector2d foot = Eigen::Vector2d::Zero();// match relaxed onto the epipolar line
  double depth = 0;                              // scene units along the source ray
  double residual = 0;                           // pixel distance of the raw match to the line
  double sensitivity = 0;                        // scene units per pixel of match drift
  CandidateStatus status = CandidateStatus::kOffImage;

  bool IsValid() const { return status == CandidateStatus::kValid; }
};

// Closest point on the line to `match`; satisfies the line equation and is
// invariant to rescaling of the coefficients. Throws DegenerateLine.
Eigen::Vector2d PerpendicularFoot(const EpipolarLine& line, const Eigen::Vector2d& match);

// |a x + b y + c| / sqrt(a^2 + b^2), in pixels. Throws DegenerateLine.
double EpipolarResidual(const EpipolarLine& line, const Eigen::Vector2d& match);

enum class TriangulationStatus { kOk, kBehindCamera, kNumericBlowup };

struct TriangulatedDepth {
  TriangulationStatus status = TriangulationStatus::kNumericBlowup;
  // |H x B| / |r x H| with H the target ray rotated into the source frame,
  // B the baseline and r the source ray. Populated whenever the denominator
  // is non-degenerate, including behind-camera configurations.
  double depth = 0;
};

// Precomputed two-view quantities shared by every pixel of an ordered pair.
// Holds non-owning pointers to the views; keep them alive while in use.
class ViewPair {
 public:
  ViewPair(const CameraView& src, const CameraView& dst);  // throws DegenerateBaseline

  const CameraView& src() const { return *src_; }
  const CameraView& dst() const { return *dst_; }
  const Eigen::Matrix3d& F() const { return F_; }
  double baseline_length() const { return baseline_length_; }

  // Line of the src pixel in dst pixel coordinates. Throws DegenerateLine.
  EpipolarLine LineThrough(const Eigen::Vector2d& src_pixel) const;

  // Closed-form two-ray depth for a match already relaxed onto the line.
  TriangulatedDepth Triangulate(const Eigen::Vector2d& src_pixel,
                                const Eigen::Vector2d& foot) const;

  // Full per-pixel assembly: matched point, line, foot, depth, residual and
  // sensitivity; non-valid outcomes are reported through the status field.
  DepthCandidate Candidate(int x, int y, const FlowField& flow) const;

  // Source ray K_src^-1 (p, 1) in the source camera frame.
  Eigen::Vector3d SrcRay(const Eigen::Vector2d& src_pixel) const;
  // Target ray of a dst pixel rotated into the source camera orientation.
  Eigen::Vector3d TargetRayInSrc(const Eigen::Vector2d& dst_pixel) const;
  // Vector from the source to the target camera center, source orientation.
  const Eigen::Vector3d& BaselineInSrc() const { return baseline_src_; }
  // Source camera center expressed in the target camera frame.
  const Eigen::Vector3d& SrcCenterInDst() const { return src_center_in_dst_; }

 private:
  const CameraView* src_;
  const CameraView* dst_;
  Eigen::Matrix3d F_;
  Eigen::Matrix3d kinv_src_;
  Eigen::Matrix3d kinv_dst_;
  Eigen::Matrix3d target_to_src_rot_;  // R_src * R_dst^T
  Eigen::Matrix3d h_transform_;        // target_to_src_rot_ * K_dst^-1
  Eigen::Vector3d baseline_src_;
  Eigen::Vector3d src_center_in_dst_;
  double baseline_length_ = 0;
};

// Convenience wrappers mirroring the per-operation surface.
double EpipolarDepth(const CameraView& src, const CameraView& dst, const Eigen::Vector2d& src_pixel,
                     const Eigen::Vector2d& foot);  // throws NumericBlowup on parallel rays
TriangulatedDepth TriangulateDepth(const CameraView& src, const CameraView& dst,
                                   const Eigen::Vector2d& src_pixel, const Eigen::Vector2d& foot);
DepthCandidate MakeDepthCandidate(const CameraView& src, const CameraView& dst,
                                  const FlowField& flow, int x, int y);

}  // namespace nexus
