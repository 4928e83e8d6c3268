#include "nexus/flow.h"

#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>

namespace nexus {

namespace {

constexpr float kFloMagic = 202021.25f;
constexpr double kUnknownThreshold = 1e9;
constexpr float kUnknownValue = 1e10f;
// Caps width*height to keep hostile headers from driving huge allocations.
constexpr std::int64_t kMaxPixels = 1 << 28;

template <typename T>
void WriteRaw(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
bool ReadRaw(std::istream& in, T* value) {
  in.read(reinterpret_cast<char*>(value), sizeof(T));
  return in.gcount() == sizeof(T);
}

}  // namespace

void FlowNoiseSpec::Validate() const {
  if (gaussian_sigma < 0) throw Error("gaussian_sigma must be >= 0");
  if (outlier_fraction < 0 || outlier_fraction > 1) {
    throw Error("outlier_fraction must be in [0, 1]");
  }
  if (outlier_max < 0) throw Error("outlier_max must be >= 0");
}

std::optional<Eigen::Vector2d> MatchedPoint(const FlowField& flow, int x, int y, int dst_width,
                                            int dst_height) {
  if (!flow.InBounds(x, y)) {
    throw OutOfBoundsPixel("pixel (" + std::to_string(x) + ", " + std::to_string(y) +
                           ") outside flow grid");
  }
  const std::size_t i = flow.Index(x, y);
  if (!flow.valid[i]) return std::nullopt;
  const Eigen::Vector2d matched(x + flow.u[i], y + flow.v[i]);
  if (!InsideWithMargin(matched, dst_width, dst_height)) return std::nullopt;
  return matched;
}

std::optional<Eigen::Vector2d> MatchedPoint(const FlowField& flow, int x, int y) {
  return MatchedPoint(flow, x, y, flow.width, flow.height);
}

FlowField ReadFlo(std::istream& in) {
  float magic = 0;
  if (!ReadRaw(in, &magic)) throw TruncatedStream(".flo stream shorter than its magic");
  if (magic != kFloMagic) throw BadMagic(".flo magic mismatch");
  std::int32_t width = 0, height = 0;
  if (!ReadRaw(in, &width) || !ReadRaw(in, &height)) {
    throw TruncatedStream(".flo stream truncated in header");
  }
  if (width <= 0 || height <= 0 ||
      static_cast<std::int64_t>(width) * height > kMaxPixels) {
    throw NonFiniteDimensions(".flo dimensions out of range: " + std::to_string(width) + "x" +
                              std::to_string(height));
  }
  FlowField flow(-1, -1, width, height);
  for (std::size_t i = 0; i < flow.u.size(); ++i) {
    float u = 0, v = 0;
    if (!ReadRaw(in, &u) || !ReadRaw(in, &v)) throw TruncatedStream(".flo payload truncated");
    const bool ok = std::isfinite(u) && std::isfinite(v) && std::abs(u) <= kUnknownThreshold &&
                    std::abs(v) <= kUnknownThreshold;
    flow.valid[i] = ok ? 1 : 0;
    flow.u[i] = ok ? u : 0.0;
    flow.v[i] = ok ? v : 0.0;
  }
  return flow;
}

void WriteFlo(const FlowField& flow, std::ostream& out) {
  WriteRaw(out, kFloMagic);
  WriteRaw(out, static_cast<std::int32_t>(flow.width));
  WriteRaw(out, static_cast<std::int32_t>(flow.height));
  for (std::size_t i = 0; i < flow.u.size(); ++i) {
    if (flow.valid[i]) {
      WriteRaw(out, static_cast<float>(flow.u[i]));
      WriteRaw(out, static_cast<float>(flow.v[i]));
    } else {
      WriteRaw(out, kUnknownValue);
      WriteRaw(out, kUnknownValue);
    }
  }
}

FlowField ReadFloFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open " + path);
  return ReadFlo(in);
}

void WriteFloFile(const FlowField& flow, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot open " + path + " for writing");
  WriteFlo(flow, out);
  if (!out) throw IoFailure("short write to " + path);
}

FlowField SynthFlow(const CameraView& src, const CameraView& dst, const DepthMap& gt_depth) {
  if (gt_depth.width != src.width || gt_depth.height != src.height) {
    throw DimensionMismatch("gt depth does not match source view dimensions");
  }
  FlowField flow(src.id, dst.id, src.width, src.height);
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      const std::size_t i = flow.Index(x, y);
      if (!gt_depth.mask[i]) continue;
      const Eigen::Vector3d world = Backproject(src, {double(x), double(y)}, gt_depth.depth[i]);
      Projection proj;
      if (!TryProject(dst, world, &proj) || proj.depth <= 0) continue;
      if (!InsideWithMargin(proj.pixel, dst.width, dst.height)) continue;
      flow.u[i] = proj.pixel.x() - x;
      flow.v[i] = proj.pixel.y() - y;
      flow.valid[i] = 1;
    }
  }
  return flow;
}

FlowField PerturbFlow(const FlowField& flow, const FlowNoiseSpec& spec) {
  spec.Validate();
  FlowField out = flow;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, spec.gaussian_sigma > 0 ? spec.gaussian_sigma : 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < out.u.size(); ++i) {
    if (!out.valid[i]) continue;
    if (spec.gaussian_sigma > 0) {
      out.u[i] += gauss(rng);
      out.v[i] += gauss(rng);
    }
    if (spec.outlier_fraction > 0 && unit(rng) < spec.outlier_fraction) {
      // Outliers discard the Gaussian jitter: displacement error is uniform
      // over a disk of radius outlier_max around the true match.
      const double r = spec.outlier_max * std::sqrt(unit(rng));
      const double phi = 2.0 * std::numbers::pi * unit(rng);
      out.u[i] = flow.u[i] + r * std::cos(phi);
      out.v[i] = flow.v[i] + r * std::sin(phi);
    }
  }
  return out;
}

}  // namespace nexus
