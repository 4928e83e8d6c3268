#include "nexus/fusion.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "nexus/parallel.h"

static_assert(std::endian::native == std::endian::little,
              "binary containers assume a little-endian host");

namespace nexus {

const CameraView* Scene::FindView(int id) const {
  for (const auto& view : views) {
    if (view.id == id) return &view;
  }
  return nullptr;
}

const FlowField* Scene::FindFlow(int src_id, int dst_id) const {
  const auto it = flows.find({src_id, dst_id});
  return it == flows.end() ? nullptr : &it->second;
}

void Scene::AddFlow(FlowField flow) {
  const std::pair<int, int> key{flow.src_id, flow.dst_id};
  flows[key] = std::move(flow);
}

void Scene::Validate() const {
  if (views.size() < 2) throw InconsistentScene("a scene needs at least two views");
  for (std::size_t i = 0; i < views.size(); ++i) {
    views[i].Validate();
    if (i > 0 && views[i].id <= views[i - 1].id) {
      throw InconsistentScene("view ids must be unique and ascending");
    }
  }
  for (const auto& [key, flow] : flows) {
    const CameraView* src = FindView(key.first);
    const CameraView* dst = FindView(key.second);
    if (!src || !dst) throw InconsistentScene("flow references an unknown view");
    if (flow.width != src->width || flow.height != src->height) {
      throw InconsistentScene("flow dimensions do not match its source view");
    }
  }
}

std::vector<DepthCandidate> Prune(std::span<const DepthCandidate> candidates, double epsilon_d) {
  std::vector<DepthCandidate> kept;
  kept.reserve(candidates.size());
  for (const auto& c : candidates) {
    if (c.IsValid() && c.residual < epsilon_d) kept.push_back(c);
  }
  return kept;
}

void DensifyOptions::Validate() const {
  if (!(epsilon_d > 0)) throw Error("epsilon_d must be positive");
  if (stride < 1) throw Error("stride must be >= 1");
  if (depth_bounds && !(depth_bounds->first <= depth_bounds->second)) {
    throw Error("depth bounds must satisfy min <= max");
  }
}

namespace {

struct PixelRecord {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  double depth = 0;
  std::array<std::uint8_t, 3> color = {255, 255, 255};
  bool valid = false;
};

struct RowTally {
  std::size_t sampled = 0;
  std::size_t valid = 0;
  std::size_t candidates = 0;
  std::size_t candidates_valid = 0;
  std::size_t candidates_pruned = 0;
};

}  // namespace

DensifyResult DensifyScene(const Scene& scene, const DensifyOptions& options) {
  options.Validate();
  scene.Validate();

  // Every ordered pair must have a flow before any work starts.
  for (const auto& src : scene.views) {
    for (const auto& dst : scene.views) {
      if (src.id == dst.id) continue;
      if (!scene.FindFlow(src.id, dst.id)) {
        throw MissingFlow("no flow for pair " + std::to_string(src.id) + " -> " +
                          std::to_string(dst.id));
      }
    }
  }

  DensifyResult result;
  result.stats.per_view_valid_fraction.reserve(scene.views.size());

  for (const auto& src : scene.views) {
    std::vector<ViewPair> pairs;
    std::vector<const FlowField*> pair_flows;
    pairs.reserve(scene.views.size() - 1);
    for (const auto& dst : scene.views) {
      if (dst.id == src.id) continue;
      pairs.emplace_back(src, dst);
      pair_flows.push_back(scene.FindFlow(src.id, dst.id));
    }

    const int stride = options.stride;
    const int nx = (src.width + stride - 1) / stride;
    const int ny = (src.height + stride - 1) / stride;
    std::vector<PixelRecord> records(static_cast<std::size_t>(nx) * ny);
    std::vector<RowTally> tallies(ny);

    ParallelFor(0, ny, options.threads, [&](int sy) {
      RowTally& tally = tallies[sy];
      const int y = sy * stride;
      std::vector<DepthCandidate> candidates;
      candidates.reserve(pairs.size());
      for (int sx = 0; sx < nx; ++sx) {
        const int x = sx * stride;
        ++tally.sampled;
        candidates.clear();
        for (std::size_t p = 0; p < pairs.size(); ++p) {
          candidates.push_back(pairs[p].Candidate(x, y, *pair_flows[p]));
        }
        tally.candidates += candidates.size();

        std::size_t valid_count = 0;
        for (const auto& c : candidates) valid_count += c.IsValid();
        tally.candidates_valid += valid_count;

        // FFDP (optional), then drop the non-valid statuses either way.
        std::vector<DepthCandidate> kept;
        kept.reserve(candidates.size());
        for (const auto& c : candidates) {
          if (!c.IsValid()) continue;
          if (options.prune && !(c.residual < options.epsilon_d)) continue;
          kept.push_back(c);
        }
        tally.candidates_pruned += valid_count - kept.size();
        if (kept.empty()) continue;

        const BlendResult blended = BlendDepth(kept, options.strategy, scene.views);
        if (options.depth_bounds && (blended.depth < options.depth_bounds->first ||
                                     blended.depth > options.depth_bounds->second)) {
          continue;
        }

        PixelRecord& rec = records[static_cast<std::size_t>(sy) * nx + sx];
        rec.depth = blended.depth;
        rec.position = Backproject(src, {double(x), double(y)}, blended.depth);
        if (src.image) {
          const std::uint8_t* rgb = src.image->Pixel(x, y);
          rec.color = {rgb[0], rgb[1], rgb[2]};
        }
        rec.valid = true;
        ++tally.valid;
      }
    });

    DepthMap depth_map(src.id, src.width, src.height);
    for (int sy = 0; sy < ny; ++sy) {
      for (int sx = 0; sx < nx; ++sx) {
        const PixelRecord& rec = records[static_cast<std::size_t>(sy) * nx + sx];
        if (!rec.valid) continue;
        const int x = sx * stride;
        const int y = sy * stride;
        depth_map.Set(x, y, rec.depth);
        result.cloud.points.push_back({rec.position, rec.color, src.id, y, x});
      }
    }
    result.depth_maps.push_back(std::move(depth_map));

    std::size_t sampled = 0, valid = 0;
    for (const auto& tally : tallies) {
      sampled += tally.sampled;
      valid += tally.valid;
      result.stats.candidates_total += tally.candidates;
      result.stats.candidates_valid += tally.candidates_valid;
      result.stats.candidates_pruned += tally.candidates_pruned;
    }
    result.stats.pixels_sampled += sampled;
    result.stats.pixels_valid += valid;
    result.stats.per_view_valid_fraction.emplace_back(
        src.id, sampled == 0 ? 0.0 : static_cast<double>(valid) / sampled);
  }
  return result;
}

namespace {

template <typename T>
void AppendRaw(std::string& out, T value) {
  out.append(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
bool ReadRaw(std::istream& in, T* value) {
  in.read(reinterpret_cast<char*>(value), sizeof(T));
  return in.gcount() == sizeof(T);
}

}  // namespace

std::string WritePly(const PointCloud& cloud) {
  std::string out;
  out += "ply\n";
  out += "format binary_little_endian 1.0\n";
  out += "element vertex " + std::to_string(cloud.points.size()) + "\n";
  out += "property float x\n";
  out += "property float y\n";
  out += "property float z\n";
  out += "property uchar red\n";
  out += "property uchar green\n";
  out += "property uchar blue\n";
  out += "end_header\n";
  out.reserve(out.size() + cloud.points.size() * 15);
  for (const auto& point : cloud.points) {
    AppendRaw(out, static_cast<float>(point.position.x()));
    AppendRaw(out, static_cast<float>(point.position.y()));
    AppendRaw(out, static_cast<float>(point.position.z()));
    out.push_back(static_cast<char>(point.color[0]));
    out.push_back(static_cast<char>(point.color[1]));
    out.push_back(static_cast<char>(point.color[2]));
  }
  return out;
}

PointCloud ReadPly(std::istream& in) {
  std::string line;
  auto next_line = [&]() -> std::string {
    if (!std::getline(in, line)) throw IoFailure("PLY header truncated");
    return line;
  };
  if (next_line() != "ply") throw IoFailure("not a PLY stream");
  if (next_line() != "format binary_little_endian 1.0") {
    throw IoFailure("unsupported PLY format line");
  }
  std::size_t vertex_count = 0;
  bool saw_vertex_element = false;
  std::vector<std::string> properties;
  while (true) {
    const std::string l = next_line();
    if (l == "end_header") break;
    if (l.rfind("comment", 0) == 0) continue;
    if (l.rfind("element vertex ", 0) == 0) {
      vertex_count = std::stoul(l.substr(15));
      saw_vertex_element = true;
      continue;
    }
    if (l.rfind("property ", 0) == 0) {
      properties.push_back(l);
      continue;
    }
    throw IoFailure("unexpected PLY header line: " + l);
  }
  const std::vector<std::string> expected = {
      "property float x",    "property float y",     "property float z",
      "property uchar red",  "property uchar green", "property uchar blue"};
  if (!saw_vertex_element || properties != expected) {
    throw IoFailure("PLY header does not describe float xyz + uchar rgb vertices");
  }

  PointCloud cloud;
  cloud.points.resize(vertex_count);
  for (auto& point : cloud.points) {
    float xyz[3];
    std::uint8_t rgb[3];
    if (!ReadRaw(in, &xyz[0]) || !ReadRaw(in, &xyz[1]) || !ReadRaw(in, &xyz[2]) ||
        !ReadRaw(in, &rgb[0]) || !ReadRaw(in, &rgb[1]) || !ReadRaw(in, &rgb[2])) {
      throw TruncatedStream("PLY payload truncated");
    }
    point.position = {xyz[0], xyz[1], xyz[2]};
    point.color = {rgb[0], rgb[1], rgb[2]};
  }
  return cloud;
}

void WritePlyFile(const PointCloud& cloud, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot open " + path + " for writing");
  const std::string bytes = WritePly(cloud);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoFailure("short write to " + path);
}

PointCloud ReadPlyFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path);
  return ReadPly(in);
}

std::string WritePfm(const DepthMap& depth) {
  std::string out = "Pf\n" + std::to_string(depth.width) + " " + std::to_string(depth.height) +
                    "\n-1.0\n";
  out.reserve(out.size() + depth.depth.size() * 4);
  for (int y = depth.height - 1; y >= 0; --y) {
    for (int x = 0; x < depth.width; ++x) {
      const std::size_t i = depth.Index(x, y);
      AppendRaw(out, depth.mask[i] ? static_cast<float>(depth.depth[i]) : 0.0f);
    }
  }
  return out;
}

DepthMap ReadPfm(std::istream& in) {
  std::string tag;
  in >> tag;
  if (tag != "Pf") throw IoFailure("not a single-channel PFM stream");
  int width = 0, height = 0;
  double scale = 0;
  if (!(in >> width >> height >> scale)) throw IoFailure("malformed PFM header");
  if (width <= 0 || height <= 0) throw NonFiniteDimensions("PFM dimensions out of range");
  if (!(scale < 0)) throw IoFailure("big-endian PFM payloads are not supported");
  in.get();  // single whitespace byte after the scale

  DepthMap depth(-1, width, height);
  for (int y = height - 1; y >= 0; --y) {
    for (int x = 0; x < width; ++x) {
      float value = 0;
      if (!ReadRaw(in, &value)) throw TruncatedStream("PFM payload truncated");
      const std::size_t i = depth.Index(x, y);
      if (value > 0 && std::isfinite(value)) {
        depth.depth[i] = value;
        depth.mask[i] = 1;
      }
    }
  }
  return depth;
}

void WritePfmFile(const DepthMap& depth, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot open " + path + " for writing");
  const std::string bytes = WritePfm(depth);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoFailure("short write to " + path);
}

DepthMap ReadPfmFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path);
  return ReadPfm(in);
}

}  // namespace nexus
