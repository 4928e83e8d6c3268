#pragma once

#include <Eigen/Core>
#include <optional>

#include "nexus/errors.h"
#include "nexus/image.h"

namespace nexus {

// Pinhole camera with world-to-camera extrinsics: X_cam = rotation * X_world + translation.
// The camera center in world coordinates is -rotation^T * translation.
struct CameraView {
  int id = -1;
  int width = 0;
  int height = 0;
  double fx = 0, fy = 0;
  double cx = 0, cy = 0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  std::optional<Image> image;

  Eigen::Matrix3d K() const;
  Eigen::Matrix3d Kinv() const;
  Eigen::Vector3d Center() const { return -rotation.transpose() * translation; }

  // Normalized ray K^-1 (u, v, 1) in camera coordinates (z component is 1).
  Eigen::Vector3d RayCam(const Eigen::Vector2d& pixel) const;
  // Same ray rotated into world orientation.
  Eigen::Vector3d RayWorld(const Eigen::Vector2d& pixel) const;

  // Throws InvalidCamera unless the rotation is orthonormal with det +1
  // (tolerance 1e-9 on R^T R - I), fx, fy > 0 and dimensions are >= 1.
  void Validate() const;
};

// Line a*x + b*y + c = 0 in target pixel coordinates. All consumers are
// invariant to rescaling of the coefficients.
struct EpipolarLine {
  double a = 0, b = 0, c = 0;
};

// Projection of one camera center into another view. When the center lies
// (numerically) on the target principal plane the epipole is at infinity and
// `position` holds the direction of the pencil of parallel epipolar lines,
// sign-normalized so the first nonzero component is positive.
struct Epipole {
  bool at_infinity = false;
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
};

// F such that the dst-view match of src pixel p lies on line F * (p, 1).
// Computed analytically from the calibrated poses; rank 2 by construction.
// Throws DegenerateBaseline for coincident camera centers.
Eigen::Matrix3d FundamentalMatrix(const CameraView& src, const CameraView& dst);

// (a,b,c) = F * (x, y, 1). Throws DegenerateLine when a^2 + b^2 vanishes,
// i.e. the source pixel is the epipole of the pair.
EpipolarLine ComputeEpipolarLine(const Eigen::Matrix3d& F, const Eigen::Vector2d& src_pixel);

// Projection of src's camera center into dst.
Epipole ComputeEpipole(const CameraView& src, const CameraView& dst);

struct Projection {
  Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
  double depth = 0;  // z in camera frame; may be negative for points behind.
};

// Returns false when the point lies on the camera principal plane (|z| < 1e-12).
bool TryProject(const CameraView& view, const Eigen::Vector3d& world, Projection* out);

// Throwing wrapper around TryProject (PointAtCameraPlane).
Projection Project(const CameraView& view, const Eigen::Vector3d& world);

// World point at `depth` along the normalized ray of `pixel`; depth equals the
// z-coordinate in the camera frame. Throws NonPositiveDepth for depth <= 0.
Eigen::Vector3d Backproject(const CameraView& view, const Eigen::Vector2d& pixel, double depth);

}  // namespace nexus
