#pragma once

#include <Eigen/Core>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nexus/triangulation.h"

namespace nexus {

// Two-view angle/distance summary behind the sensitivity gradient. The target
// image plane is taken as the normalized plane z = 1 of the target camera;
// `pixel_scale` converts per-unit rates on that plane into per-pixel rates
// along the epipolar line direction.
struct PairGeometry {
  double t = 0;             // baseline length, scene units
  double beta = 0;          // at the source center: baseline vs. source ray
  double alpha = 0;         // at the target center: baseline vs. ray through the foot
  double alpha_plane = 0;   // same vertex angle measured toward the epipole point
  double theta = 0;         // at the epipole: baseline vs. epipolar line direction
  bool epipole_finite = false;
  double m = 0;             // target center to the epipole point on the plane
  double dis_pro = 0;       // epipole point to the foot point on the plane
  double pixel_scale = 0;   // |d(plane arc length) / d(pixel arc length)|
};

PairGeometry ComputePairGeometry(const CameraView& src, const CameraView& dst,
                                 const Eigen::Vector2d& src_pixel, const Eigen::Vector2d& foot);
PairGeometry ComputePairGeometry(const ViewPair& pair, const Eigen::Vector2d& src_pixel,
                                 const Eigen::Vector2d& foot);

// t sin(beta) sin^2(alpha + theta) / (m sin(theta) sin^2(alpha + beta)),
// rescaled to scene units per pixel. Requires a finite epipole and all
// involved angle sines above 1e-9; throws DegenerateGeometry otherwise.
double SensitivityGradientClosedForm(const PairGeometry& geom);

// Central difference of dis_ref along the epipolar line, probing the
// triangulation at foot +/- delta pixels. Throws NumericBlowup when a probe
// hits the parallel-ray singularity.
double SensitivityGradientNumeric(const ViewPair& pair, const Eigen::Vector2d& src_pixel,
                                  const Eigen::Vector2d& foot, double delta = 1e-3);
double SensitivityGradientNumeric(const CameraView& src, const CameraView& dst,
                                  const Eigen::Vector2d& src_pixel, const Eigen::Vector2d& foot,
                                  double delta = 1e-3);

// Closed form when applicable, numeric fallback otherwise (rectified rigs put
// the epipole at infinity where the closed form is undefined). Throws
// DegenerateGeometry when both paths fail.
double SensitivityGradient(const ViewPair& pair, const Eigen::Vector2d& src_pixel,
                           const Eigen::Vector2d& foot);
double SensitivityGradient(const CameraView& src, const CameraView& dst,
                           const Eigen::Vector2d& src_pixel, const Eigen::Vector2d& foot);

enum class BlendStrategy { kAverage, kNearest, kWeightedInverseResidual, kFrdb };

std::optional<BlendStrategy> BlendStrategyFromString(const std::string& name);
std::string ToString(BlendStrategy strategy);

struct BlendResult {
  double depth = 0;
  std::optional<int> chosen_dst;  // set by the selecting strategies
};

// Combines valid candidates that share a source pixel. `views` is consulted
// only by kNearest for camera centers. Ties in the selecting strategies break
// toward the smallest dst id. Throws NoCandidates on empty input.
BlendResult BlendDepth(std::span<const DepthCandidate> candidates, BlendStrategy strategy,
                       std::span<const CameraView> views);

}  // namespace nexus
