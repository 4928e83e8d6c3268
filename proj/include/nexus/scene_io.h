#pragma once

#include <string>
#include <vector>

#include "nexus/fusion.h"
#include "nexus/synth.h"

namespace nexus {

// On-disk scene layout rooted at one directory:
//   scene.json                     views, intrinsics, poses, file references
//   view_<id>.png                  8-bit RGB renders
//   flow_<src>_<dst>.flo           one per ordered view pair
//   gt_depth_<id>.pfm              optional ground truth, found by convention
// All ids are zero-padded to three digits; paths in scene.json are relative
// to the directory.

std::string ViewImageName(int view_id);
std::string FlowName(int src_id, int dst_id);
std::string GtDepthName(int view_id);

// Writes the bundle (including ground truth) into `dir`, creating it first.
void WriteSceneDir(const SceneBundle& bundle, const std::string& dir);

struct LoadedScene {
  Scene scene;
  std::vector<DepthMap> gt_depth;  // whatever gt_depth_*.pfm files were present
};

// Parses scene.json and loads the referenced images and flows. Throws
// IoFailure for missing files and InconsistentScene for malformed content.
LoadedScene LoadSceneDir(const std::string& dir);

}  // namespace nexus
