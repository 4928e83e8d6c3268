#include "nexus/scene_io.h"

#include <algorithm>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace nexus {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string PaddedId(int id) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%03d", id);
  return buf;
}

}  // namespace

std::string ViewImageName(int view_id) { return "view_" + PaddedId(view_id) + ".png"; }

std::string FlowName(int src_id, int dst_id) {
  return "flow_" + PaddedId(src_id) + "_" + PaddedId(dst_id) + ".flo";
}

std::string GtDepthName(int view_id) { return "gt_depth_" + PaddedId(view_id) + ".pfm"; }

void WriteSceneDir(const SceneBundle& bundle, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoFailure("cannot create directory " + dir);

  ordered_json root;
  ordered_json views = ordered_json::array();
  for (const auto& view : bundle.scene.views) {
    ordered_json v;
    v["id"] = view.id;
    v["width"] = view.width;
    v["height"] = view.height;
    v["fx"] = view.fx;
    v["fy"] = view.fy;
    v["cx"] = view.cx;
    v["cy"] = view.cy;
    ordered_json rotation = ordered_json::array();
    for (int r = 0; r < 3; ++r) {
      rotation.push_back({view.rotation(r, 0), view.rotation(r, 1), view.rotation(r, 2)});
    }
    v["rotation"] = std::move(rotation);
    v["translation"] = {view.translation.x(), view.translation.y(), view.translation.z()};
    if (view.image) {
      const std::string name = ViewImageName(view.id);
      WritePng(*view.image, (fs::path(dir) / name).string());
      v["image"] = name;
    }
    ordered_json flows = ordered_json::object();
    for (const auto& dst : bundle.scene.views) {
      if (dst.id == view.id) continue;
      const FlowField* flow = bundle.scene.FindFlow(view.id, dst.id);
      if (!flow) continue;
      const std::string name = FlowName(view.id, dst.id);
      WriteFloFile(*flow, (fs::path(dir) / name).string());
      flows[std::to_string(dst.id)] = name;
    }
    v["flows"] = std::move(flows);
    views.push_back(std::move(v));
  }
  root["views"] = std::move(views);

  for (const auto& depth : bundle.gt_depth) {
    WritePfmFile(depth, (fs::path(dir) / GtDepthName(depth.view_id)).string());
  }

  std::ofstream out(fs::path(dir) / "scene.json", std::ios::binary);
  if (!out) throw IoFailure("cannot write scene.json in " + dir);
  out << root.dump(2) << "\n";
}

LoadedScene LoadSceneDir(const std::string& dir) {
  const fs::path base(dir);
  std::ifstream in(base / "scene.json", std::ios::binary);
  if (!in) throw IoFailure("cannot open " + (base / "scene.json").string());

  ordered_json root;
  try {
    in >> root;
  } catch (const nlohmann::json::exception& e) {
    throw InconsistentScene(std::string("scene.json parse error: ") + e.what());
  }

  LoadedScene loaded;
  try {
    for (const auto& v : root.at("views")) {
      CameraView view;
      view.id = v.at("id").get<int>();
      view.width = v.at("width").get<int>();
      view.height = v.at("height").get<int>();
      view.fx = v.at("fx").get<double>();
      view.fy = v.at("fy").get<double>();
      view.cx = v.at("cx").get<double>();
      view.cy = v.at("cy").get<double>();
      const auto& rotation = v.at("rotation");
      if (rotation.size() != 3) throw InconsistentScene("rotation must have 3 rows");
      for (int r = 0; r < 3; ++r) {
        if (rotation[r].size() != 3) throw InconsistentScene("rotation rows must have 3 entries");
        for (int c = 0; c < 3; ++c) view.rotation(r, c) = rotation[r][c].get<double>();
      }
      const auto& translation = v.at("translation");
      if (translation.size() != 3) throw InconsistentScene("translation must have 3 entries");
      for (int c = 0; c < 3; ++c) view.translation(c) = translation[c].get<double>();
      if (v.contains("image")) {
        view.image = ReadPng((base / v.at("image").get<std::string>()).string());
        if (view.image->width != view.width || view.image->height != view.height) {
          throw InconsistentScene("image dimensions disagree with view " + std::to_string(view.id));
        }
      }
      loaded.scene.views.push_back(std::move(view));

      if (v.contains("flows")) {
        for (const auto& [dst_key, path] : v.at("flows").items()) {
          FlowField flow = ReadFloFile((base / path.get<std::string>()).string());
          flow.src_id = loaded.scene.views.back().id;
          flow.dst_id = std::stoi(dst_key);
          loaded.scene.AddFlow(std::move(flow));
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw InconsistentScene(std::string("scene.json schema error: ") + e.what());
  }

  std::sort(loaded.scene.views.begin(), loaded.scene.views.end(),
            [](const CameraView& a, const CameraView& b) { return a.id < b.id; });
  loaded.scene.Validate();
  for (const auto& view : loaded.scene.views) {
    const fs::path gt_path = base / GtDepthName(view.id);
    if (fs::exists(gt_path)) {
      DepthMap depth = ReadPfmFile(gt_path.string());
      if (depth.width != view.width || depth.height != view.height) {
        throw InconsistentScene("gt depth dimensions disagree with view " +
                                std::to_string(view.id));
      }
      depth.view_id = view.id;
      loaded.gt_depth.push_back(std::move(depth));
    }
  }
  return loaded;
}

}  // namespace nexus
