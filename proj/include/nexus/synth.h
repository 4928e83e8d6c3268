#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nexus/depth_map.h"
#include "nexus/fusion.h"

namespace nexus {

// A generated scene: calibrated views with rendered images, per-view
// ground-truth depth, and the exact flow field of every ordered pair.
struct SceneBundle {
  Scene scene;
  std::vector<DepthMap> gt_depth;  // ascending view id, like scene.views
  std::uint64_t seed = 0;
  std::string preset;

  const DepthMap* FindGtDepth(int view_id) const;
};

// Presets: "rectified2" (the two-camera reference rig), "converging3" (the
// converging pair plus an elevated third camera), "ring<k>" for k >= 2
// cameras on a circle facing the scene center. Deterministic per
// (preset, seed). Throws BadPreset for anything else.
SceneBundle GenerateScene(const std::string& preset, std::uint64_t seed);

// Adds uniform noise in [-magnitude, magnitude] to every translation
// component and rotates each view by a random axis and a uniform angle in the
// same interval. Flows and ground truth stay untouched: they describe the
// true scene while the returned poses lie.
SceneBundle PerturbPoses(const SceneBundle& bundle, double magnitude, std::uint64_t seed);

// Restriction of a bundle to a subset of views (flows between them only).
SceneBundle SubBundle(const SceneBundle& bundle, std::span<const int> view_ids);

}  // namespace nexus
