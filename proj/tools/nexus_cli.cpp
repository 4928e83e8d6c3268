// Command-line front end over the scene directory layout: generate synthetic
// scenes, densify them into depth maps plus a colored point cloud, evaluate
// against ground truth, and sweep the pruning threshold.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nexus/eval.h"
#include "nexus/fusion.h"
#include "nexus/scene_io.h"
#include "nexus/synth.h"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kExitBadInput = 2;
constexpr int kExitBadConfig = 3;

int ResolveThreads(int flag_value) {
  if (const char* env = std::getenv("NEXUS_THREADS")) {
    try {
      const int value = std::stoi(env);
      if (value > 0) return value;
    } catch (const std::exception&) {
    }
  }
  return flag_value;
}

struct DensifySetup {
  nexus::Scene scene;
  std::vector<nexus::DepthMap> gt_depth;
  nexus::DensifyOptions options;
};

void WriteTextFile(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw nexus::IoFailure("cannot write " + path.string());
  out << content;
}

ordered_json DensifySummary(const nexus::DensifyResult& result) {
  ordered_json summary;
  summary["point_count"] = result.cloud.points.size();
  summary["pixels_sampled"] = result.stats.pixels_sampled;
  summary["pixels_valid"] = result.stats.pixels_valid;
  summary["candidates_total"] = result.stats.candidates_total;
  summary["candidates_valid"] = result.stats.candidates_valid;
  summary["candidates_pruned"] = result.stats.candidates_pruned;
  ordered_json fractions = ordered_json::object();
  for (const auto& [view_id, fraction] : result.stats.per_view_valid_fraction) {
    fractions[std::to_string(view_id)] = fraction;
  }
  summary["per_view_valid_fraction"] = std::move(fractions);
  return summary;
}

void WriteDensifyOutputs(const nexus::DensifyResult& result, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw nexus::IoFailure("cannot create directory " + out_dir.string());
  nexus::WritePlyFile(result.cloud, (out_dir / "cloud.ply").string());
  for (const auto& depth : result.depth_maps) {
    char name[32];
    std::snprintf(name, sizeof(name), "depth_%03d.pfm", depth.view_id);
    nexus::WritePfmFile(depth, (out_dir / name).string());
  }
  WriteTextFile(out_dir / "summary.json", DensifySummary(result).dump(2) + "\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Epipolar depth densification from calibrated views and optical flow"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic scene directory");
  std::string synth_preset = "converging3";
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  synth->add_option("--preset", synth_preset, "rectified2 | converging3 | ring<k>");
  synth->add_option("--seed", synth_seed, "Generation seed");
  synth->add_option("--out", synth_out, "Output directory")->required();

  // Shared pipeline flags.
  std::string scene_dir;
  std::string out_dir;
  std::string strategy_name = "frdb";
  double threshold = 1.0;
  bool no_prune = false;
  int stride = 1;
  std::uint64_t seed = 0;
  int threads = 0;
  std::optional<int> holdout;
  std::vector<double> depth_bounds;
  std::vector<double> thresholds;

  auto add_pipeline_flags = [&](CLI::App* cmd, bool with_strategy) {
    cmd->add_option("--scene", scene_dir, "Scene directory")->required();
    cmd->add_option("--out", out_dir, "Output directory")->required();
    if (with_strategy) {
      cmd->add_option("--strategy", strategy_name, "average | nearest | weighted | frdb");
      cmd->add_option("--threshold", threshold, "Pruning threshold epsilon_d in pixels");
      cmd->add_flag("--no-prune", no_prune, "Disable flow-filtered depth pruning");
    }
    cmd->add_option("--stride", stride, "Pixel sampling stride");
    cmd->add_option("--seed", seed, "Seed for seeded operations");
    cmd->add_option("--threads", threads, "Worker threads (0 = all, NEXUS_THREADS overrides)");
    cmd->add_option("--holdout", holdout, "View id excluded from densify / used for reprojection");
    cmd->add_option("--depth-bounds", depth_bounds, "Min and max accepted depth")->expected(2);
  };

  auto* densify = app.add_subcommand("densify", "Fuse flows into depth maps and a point cloud");
  add_pipeline_flags(densify, true);

  auto* eval = app.add_subcommand("eval", "Evaluate a densified directory against ground truth");
  add_pipeline_flags(eval, false);
  bool eval_ablation = false;
  eval->add_flag("--ablation", eval_ablation, "Also run the 8-configuration ablation table");

  auto* sweep = app.add_subcommand("sweep", "Densify across a list of pruning thresholds");
  add_pipeline_flags(sweep, true);
  sweep->add_option("--thresholds", thresholds, "Threshold list replacing --threshold");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitBadConfig;
  }

  try {
    if (synth->parsed()) {
      const nexus::SceneBundle bundle = nexus::GenerateScene(synth_preset, synth_seed);
      nexus::WriteSceneDir(bundle, synth_out);
      std::cout << "wrote " << bundle.scene.views.size() << " views to " << synth_out << "\n";
      return 0;
    }

    const auto strategy = nexus::BlendStrategyFromString(strategy_name);
    if (!strategy) {
      std::cerr << "unknown strategy: " << strategy_name << "\n";
      return kExitBadConfig;
    }

    nexus::LoadedScene loaded = nexus::LoadSceneDir(scene_dir);
    nexus::DensifyOptions options;
    options.strategy = *strategy;
    options.epsilon_d = threshold;
    options.prune = !no_prune;
    options.stride = stride;
    options.threads = ResolveThreads(threads);
    if (!depth_bounds.empty()) options.depth_bounds = {depth_bounds[0], depth_bounds[1]};
    try {
      options.Validate();
    } catch (const nexus::Error& e) {
      std::cerr << e.what() << "\n";
      return kExitBadConfig;
    }

    if (densify->parsed()) {
      nexus::Scene scene = std::move(loaded.scene);
      if (holdout) {
        std::erase_if(scene.views, [&](const nexus::CameraView& v) { return v.id == *holdout; });
        std::erase_if(scene.flows, [&](const auto& kv) {
          return kv.first.first == *holdout || kv.first.second == *holdout;
        });
      }
      const nexus::DensifyResult result = nexus::DensifyScene(scene, options);
      WriteDensifyOutputs(result, out_dir);
      std::cout << "cloud: " << result.cloud.points.size() << " points\n";
      return 0;
    }

    if (eval->parsed()) {
      if (loaded.gt_depth.empty()) {
        std::cerr << "no gt_depth_*.pfm files in " << scene_dir << "\n";
        return kExitBadInput;
      }
      const fs::path in_dir(out_dir);
      const nexus::PointCloud cloud = nexus::ReadPlyFile((in_dir / "cloud.ply").string());

      nexus::EvalReport report;
      report.point_count = cloud.points.size();
      std::vector<nexus::DepthMap> predictions;
      for (const auto& view : loaded.scene.views) {
        char name[32];
        std::snprintf(name, sizeof(name), "depth_%03d.pfm", view.id);
        const fs::path depth_path = in_dir / name;
        if (!fs::exists(depth_path)) continue;
        nexus::DepthMap pred = nexus::ReadPfmFile(depth_path.string());
        pred.view_id = view.id;
        for (const auto& gt : loaded.gt_depth) {
          if (gt.view_id != view.id) continue;
          nexus::ViewDepthReport view_report;
          view_report.view_id = view.id;
          view_report.stats = nexus::DepthError(pred, gt);
          view_report.valid_fraction =
              static_cast<double>(pred.ValidCount()) / (pred.width * pred.height);
          report.per_view.push_back(view_report);
        }
        predictions.push_back(std::move(pred));
      }
      if (!predictions.empty()) {
        report.aggregate = nexus::AggregateDepthError(predictions, loaded.gt_depth);
      }
      if (holdout) {
        const nexus::CameraView* view = loaded.scene.FindView(*holdout);
        const nexus::DepthMap* gt = nullptr;
        for (const auto& g : loaded.gt_depth) {
          if (g.view_id == *holdout) gt = &g;
        }
        if (!view || !gt) {
          std::cerr << "holdout view " << *holdout << " missing from scene or gt\n";
          return kExitBadInput;
        }
        nexus::SceneBundle bundle;
        bundle.scene = loaded.scene;
        bundle.gt_depth = loaded.gt_depth;
        std::vector<int> sources;
        for (const auto& v : loaded.scene.views) {
          if (v.id != *holdout) sources.push_back(v.id);
        }
        const auto covis = nexus::CoVisibleMask(bundle, *holdout, sources);
        report.reprojection = nexus::ReprojectionEval(cloud, *view, *gt, &covis);
      }
      if (eval_ablation) {
        nexus::SceneBundle bundle;
        bundle.scene = loaded.scene;
        bundle.gt_depth = loaded.gt_depth;
        // The scene's flows are used as-is; the zero spec only reindexes them.
        nexus::FlowNoiseSpec zero;
        zero.seed = seed;
        const nexus::EvalReport ablation =
            nexus::AblationRun(bundle, zero, options.epsilon_d, options.stride, options.threads);
        report.ablation = ablation.ablation;
      }
      WriteTextFile(in_dir / "report.json", report.ToJson().dump(2) + "\n");
      std::cout << report.ToTable();
      return 0;
    }

    if (sweep->parsed()) {
      if (thresholds.empty()) {
        std::cerr << "--thresholds requires at least one value\n";
        return kExitBadConfig;
      }
      for (double eps : thresholds) {
        if (!(eps > 0)) {
          std::cerr << "thresholds must be positive\n";
          return kExitBadConfig;
        }
      }
      std::error_code ec;
      fs::create_directories(out_dir, ec);
      if (ec) throw nexus::IoFailure("cannot create directory " + out_dir);

      ordered_json rows = ordered_json::array();
      std::string table = "epsilon_d    points        mae\n";
      for (double eps : thresholds) {
        nexus::DensifyOptions sweep_options = options;
        sweep_options.epsilon_d = eps;
        sweep_options.prune = true;
        const nexus::DensifyResult result = nexus::DensifyScene(loaded.scene, sweep_options);
        ordered_json row;
        row["epsilon_d"] = eps;
        row["point_count"] = result.cloud.points.size();
        char line[128];
        if (!loaded.gt_depth.empty()) {
          const auto stats = nexus::AggregateDepthError(result.depth_maps, loaded.gt_depth);
          row["mae"] = stats.mae;
          std::snprintf(line, sizeof(line), "%9.3f %9zu %10.6f\n", eps,
                        result.cloud.points.size(), stats.mae);
        } else {
          std::snprintf(line, sizeof(line), "%9.3f %9zu          -\n", eps,
                        result.cloud.points.size());
        }
        table += line;
        rows.push_back(std::move(row));
      }
      ordered_json sweep_json;
      sweep_json["thresholds"] = std::move(rows);
      WriteTextFile(fs::path(out_dir) / "sweep.json", sweep_json.dump(2) + "\n");
      std::cout << table;
      return 0;
    }
  } catch (const nexus::BadPreset& e) {
    std::cerr << e.what() << "\n";
    return kExitBadConfig;
  } catch (const nexus::Error& e) {
    std::cerr << e.what() << "\n";
    return kExitBadInput;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kExitBadInput;
  }
  return 0;
}
