#include "nexus/geometry.h"

#include <Eigen/LU>

#include <cmath>

namespace nexus {

namespace {

Eigen::Matrix3d CrossMatrix(const Eigen::Vector3d& t) {
  Eigen::Matrix3d m;
  m << 0, -t.z(), t.y(), t.z(), 0, -t.x(), -t.y(), t.x(), 0;
  return m;
}

}  // namespace

Eigen::Matrix3d CameraView::K() const {
  Eigen::Matrix3d k;
  k << fx, 0, cx, 0, fy, cy, 0, 0, 1;
  return k;
}

Eigen::Matrix3d CameraView::Kinv() const {
  Eigen::Matrix3d k;
  k << 1.0 / fx, 0, -cx / fx, 0, 1.0 / fy, -cy / fy, 0, 0, 1;
  return k;
}

Eigen::Vector3d CameraView::RayCam(const Eigen::Vector2d& pixel) const {
  return {(pixel.x() - cx) / fx, (pixel.y() - cy) / fy, 1.0};
}

Eigen::Vector3d CameraView::RayWorld(const Eigen::Vector2d& pixel) const {
  return rotation.transpose() * RayCam(pixel);
}

void CameraView::Validate() const {
  if (width < 1 || height < 1) {
    throw InvalidCamera("view " + std::to_string(id) + ": non-positive image size");
  }
  if (!(fx > 0) || !(fy > 0)) {
    throw InvalidCamera("view " + std::to_string(id) + ": focal lengths must be positive");
  }
  const Eigen::Matrix3d gram = rotation.transpose() * rotation;
  if ((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-9) {
    throw InvalidCamera("view " + std::to_string(id) + ": rotation is not orthonormal");
  }
  if (rotation.determinant() < 0) {
    throw InvalidCamera("view " + std::to_string(id) + ": rotation has negative determinant");
  }
}

Eigen::Matrix3d FundamentalMatrix(const CameraView& src, const CameraView& dst) {
  if ((src.Center() - dst.Center()).norm() < 1e-12) {
    throw DegenerateBaseline("coincident camera centers for views " + std::to_string(src.id) +
                             " and " + std::to_string(dst.id));
  }
  const Eigen::Matrix3d r_rel = dst.rotation * src.rotation.transpose();
  const Eigen::Vector3d t_rel = dst.translation - r_rel * src.translation;
  const Eigen::Matrix3d essential = CrossMatrix(t_rel) * r_rel;
  return dst.Kinv().transpose() * essential * src.Kinv();
}

EpipolarLine ComputeEpipolarLine(const Eigen::Matrix3d& F, const Eigen::Vector2d& src_pixel) {
  const Eigen::Vector3d line = F * Eigen::Vector3d(src_pixel.x(), src_pixel.y(), 1.0);
  if (line.x() * line.x() + line.y() * line.y() < 1e-18) {
    throw DegenerateLine("source pixel coincides with the epipole; no epipolar line");
  }
  return {line.x(), line.y(), line.z()};
}

Epipole ComputeEpipole(const CameraView& src, const CameraView& dst) {
  const Eigen::Vector3d center = src.Center();
  const double baseline = (center - dst.Center()).norm();
  if (baseline < 1e-12) {
    throw DegenerateBaseline("coincident camera centers for views " + std::to_string(src.id) +
                             " and " + std::to_string(dst.id));
  }
  const Eigen::Vector3d in_dst = dst.rotation * center + dst.translation;
  Epipole e;
  if (std::abs(in_dst.z()) < 1e-9 * baseline) {
    e.at_infinity = true;
    Eigen::Vector2d dir(dst.fx * in_dst.x(), dst.fy * in_dst.y());
    dir.normalize();
    // Directions of points at infinity are defined only up to sign.
    if (dir.x() < 0 || (dir.x() == 0 && dir.y() < 0)) dir = -dir;
    e.position = dir;
  } else {
    e.position = {dst.fx * in_dst.x() / in_dst.z() + dst.cx,
                  dst.fy * in_dst.y() / in_dst.z() + dst.cy};
  }
  return e;
}

bool TryProject(const CameraView& view, const Eigen::Vector3d& world, Projection* out) {
  const Eigen::Vector3d cam = view.rotation * world + view.translation;
  if (std::abs(cam.z()) < 1e-12) return false;
  out->pixel = {view.fx * cam.x() / cam.z() + view.cx, view.fy * cam.y() / cam.z() + view.cy};
  out->depth = cam.z();
  return true;
}

Projection Project(const CameraView& view, const Eigen::Vector3d& world) {
  Projection p;
  if (!TryProject(view, world, &p)) {
    throw PointAtCameraPlane("point lies on the principal plane of view " +
                             std::to_string(view.id));
  }
  return p;
}

Eigen::Vector3d Backproject(const CameraView& view, const Eigen::Vector2d& pixel, double depth) {
  if (!(depth > 0)) {
    throw NonPositiveDepth("backproject requires depth > 0, got " + std::to_string(depth));
  }
  const Eigen::Vector3d cam = depth * view.RayCam(pixel);
  return view.rotation.transpose() * (cam - view.translation);
}

}  // namespace nexus
