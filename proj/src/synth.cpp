#include "nexus/synth.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Geometry>

namespace nexus {

namespace {

std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double HashToUnit(std::uint64_t h) {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Lattice value noise: trilinear interpolation of hashed corner values.
// Smooth enough for texturing, fully determined by the seed.
class ValueNoise {
 public:
  explicit ValueNoise(std::uint64_t seed) : seed_(seed) {}

  double Sample(const Eigen::Vector3d& p) const {
    const double fx = std::floor(p.x()), fy = std::floor(p.y()), fz = std::floor(p.z());
    const auto ix = static_cast<std::int64_t>(fx);
    const auto iy = static_cast<std::int64_t>(fy);
    const auto iz = static_cast<std::int64_t>(fz);
    const double tx = Fade(p.x() - fx), ty = Fade(p.y() - fy), tz = Fade(p.z() - fz);
    double corners[2][2][2];
    for (int dz = 0; dz < 2; ++dz) {
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          corners[dz][dy][dx] = Lattice(ix + dx, iy + dy, iz + dz);
        }
      }
    }
    auto lerp = [](double a, double b, double t) { return a + (b - a) * t; };
    const double x00 = lerp(corners[0][0][0], corners[0][0][1], tx);
    const double x10 = lerp(corners[0][1][0], corners[0][1][1], tx);
    const double x01 = lerp(corners[1][0][0], corners[1][0][1], tx);
    const double x11 = lerp(corners[1][1][0], corners[1][1][1], tx);
    return lerp(lerp(x00, x10, ty), lerp(x01, x11, ty), tz);
  }

 private:
  static double Fade(double t) { return t * t * (3.0 - 2.0 * t); }

  double Lattice(std::int64_t x, std::int64_t y, std::int64_t z) const {
    std::uint64_t h = seed_;
    h = SplitMix64(h ^ static_cast<std::uint64_t>(x));
    h = SplitMix64(h ^ static_cast<std::uint64_t>(y));
    h = SplitMix64(h ^ static_cast<std::uint64_t>(z));
    return HashToUnit(h);
  }

  std::uint64_t seed_;
};

// Three independent noise channels mapped to RGB. Two octaves keep cells from
// reading as flat patches at the working pixel scale.
class ColorField {
 public:
  ColorField(std::uint64_t seed, double frequency)
      : r_(SplitMix64(seed ^ 0x101)), g_(SplitMix64(seed ^ 0x202)), b_(SplitMix64(seed ^ 0x303)),
        frequency_(frequency) {}

  std::array<std::uint8_t, 3> Sample(const Eigen::Vector3d& p) const {
    const Eigen::Vector3d q = p * frequency_;
    return {Quantize(Octaves(r_, q)), Quantize(Octaves(g_, q)), Quantize(Octaves(b_, q))};
  }

 private:
  static double Octaves(const ValueNoise& n, const Eigen::Vector3d& q) {
    return 0.65 * n.Sample(q) + 0.35 * n.Sample(2.7 * q + Eigen::Vector3d(11.3, 7.1, 3.9));
  }

  static std::uint8_t Quantize(double v) {
    return static_cast<std::uint8_t>(std::clamp(40.0 + v * 200.0, 0.0, 255.0));
  }

  ValueNoise r_, g_, b_;
  double frequency_;
};

// Sinusoidal height field z = base + amplitude * s(x, y). Amplitude and
// frequencies stay small enough that rays with a forward z component cross the
// surface exactly once, so the bracketed Newton solve below is safe.
struct HeightField {
  double base_z = 5.0;
  double amplitude = 0.22;
  double wx1 = 1.3, wy1 = 1.7, px1 = 0.0, py1 = 0.0;
  double wx2 = 0.9, wy2 = 0.8, p2 = 0.0;

  double Shape(double x, double y) const {
    return std::sin(wx1 * x + px1) * std::sin(wy1 * y + py1) + 0.5 * std::sin(wx2 * x + wy2 * y + p2);
  }

  double Height(double x, double y) const { return base_z + amplitude * Shape(x, y); }

  double ShapeDx(double x, double y) const {
    return wx1 * std::cos(wx1 * x + px1) * std::sin(wy1 * y + py1) +
           0.5 * wx2 * std::cos(wx2 * x + wy2 * y + p2);
  }

  double ShapeDy(double x, double y) const {
    return wy1 * std::sin(wx1 * x + px1) * std::cos(wy1 * y + py1) +
           0.5 * wy2 * std::cos(wx2 * x + wy2 * y + p2);
  }
};

struct Sphere {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double radius = 1.0;
};

struct SurfaceModel {
  bool has_plane = false;
  HeightField plane;
  std::vector<Sphere> spheres;

  // Smallest positive ray parameter. The direction is not normalized; with
  // camera rays K^-1 (u, v, 1) the parameter equals z-depth directly.
  bool Raycast(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir, double* t_out) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& sphere : spheres) {
      const Eigen::Vector3d oc = origin - sphere.center;
      const double a = dir.squaredNorm();
      const double b = dir.dot(oc);
      const double c = oc.squaredNorm() - sphere.radius * sphere.radius;
      const double disc = b * b - a * c;
      if (disc < 0) continue;
      const double sq = std::sqrt(disc);
      const double t0 = (-b - sq) / a;
      const double t1 = (-b + sq) / a;
      if (t0 > 1e-9 && t0 < best) best = t0;
      else if (t1 > 1e-9 && t1 < best) best = t1;
    }
    double t_plane;
    if (has_plane && RaycastPlane(origin, dir, &t_plane) && t_plane < best) best = t_plane;
    if (!std::isfinite(best)) return false;
    *t_out = best;
    return true;
  }

  bool RaycastPlane(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir, double* t_out) const {
    if (dir.z() < 1e-6) return false;
    auto g = [&](double t) {
      const Eigen::Vector3d p = origin + t * dir;
      return p.z() - plane.Height(p.x(), p.y());
    };
    // Bracket via the amplitude bound, then bisect with Newton acceleration.
    const double span = 1.5 * plane.amplitude;
    double lo = (plane.base_z - span - origin.z()) / dir.z();
    double hi = (plane.base_z + span - origin.z()) / dir.z();
    if (hi <= 1e-9) return false;
    lo = std::max(lo, 1e-9);
    double glo = g(lo), ghi = g(hi);
    if (glo > 0 || ghi < 0) return false;
    double t = 0.5 * (lo + hi);
    for (int it = 0; it < 80; ++it) {
      const Eigen::Vector3d p = origin + t * dir;
      const double val = p.z() - plane.Height(p.x(), p.y());
      if (std::abs(val) < 1e-13) break;
      if (val > 0) hi = t; else lo = t;
      const double deriv = dir.z() - plane.amplitude * (plane.ShapeDx(p.x(), p.y()) * dir.x() +
                                                        plane.ShapeDy(p.x(), p.y()) * dir.y());
      double t_next = deriv > 1e-9 ? t - val / deriv : t;
      if (!(t_next > lo && t_next < hi)) t_next = 0.5 * (lo + hi);
      t = t_next;
    }
    *t_out = t;
    return true;
  }
};

CameraView MakeView(int id, const Eigen::Vector3d& center, const Eigen::Matrix3d& cam_to_world) {
  CameraView view;
  view.id = id;
  view.width = 100;
  view.height = 100;
  view.fx = view.fy = 100.0;
  view.cx = view.cy = 50.0;
  view.rotation = cam_to_world.transpose();
  view.translation = -view.rotation * center;
  return view;
}

Eigen::Matrix3d RotationAboutY(double angle) {
  Eigen::Matrix3d r;
  r << std::cos(angle), 0, std::sin(angle), 0, 1, 0, -std::sin(angle), 0, std::cos(angle);
  return r;
}

// Roll-free camera-to-world rotation looking from `center` toward `target`,
// with world +y kept aligned with image down.
Eigen::Matrix3d LookAt(const Eigen::Vector3d& center, const Eigen::Vector3d& target) {
  const Eigen::Vector3d z = (target - center).normalized();
  Eigen::Vector3d down(0, 1, 0);
  if (std::abs(z.dot(down)) > 0.99) down = Eigen::Vector3d(0, 0, 1);
  const Eigen::Vector3d x = down.cross(z).normalized();
  const Eigen::Vector3d y = z.cross(x);
  Eigen::Matrix3d cam_to_world;
  cam_to_world.col(0) = x;
  cam_to_world.col(1) = y;
  cam_to_world.col(2) = z;
  return cam_to_world;
}

struct PresetSpec {
  std::vector<CameraView> views;
  SurfaceModel surface;
  double texture_frequency = 2.6;
};

PresetSpec BuildPreset(const std::string& preset, std::uint64_t seed) {
  std::mt19937_64 rng(SplitMix64(seed ^ 0xabcdef12345ULL));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  PresetSpec spec;
  auto randomized_plane = [&](HeightField* plane) {
    plane->px1 = 2.0 * std::numbers::pi * unit(rng);
    plane->py1 = 2.0 * std::numbers::pi * unit(rng);
    plane->p2 = 2.0 * std::numbers::pi * unit(rng);
    plane->wx1 = 1.1 + 0.5 * unit(rng);
    plane->wy1 = 1.4 + 0.5 * unit(rng);
  };

  if (preset == "rectified2") {
    spec.views.push_back(MakeView(0, {0, 0, 0}, Eigen::Matrix3d::Identity()));
    spec.views.push_back(MakeView(1, {1, 0, 0}, Eigen::Matrix3d::Identity()));
    spec.surface.has_plane = true;
    randomized_plane(&spec.surface.plane);
    spec.surface.spheres.push_back({{0.65 + 0.1 * unit(rng), -0.45, 4.4}, 0.55});
    return spec;
  }
  if (preset == "converging3") {
    const double tilt = 10.0 * std::numbers::pi / 180.0;
    spec.views.push_back(MakeView(0, {-0.5, 0, 0}, RotationAboutY(tilt)));
    spec.views.push_back(MakeView(1, {0.5, 0, 0}, RotationAboutY(-tilt)));
    // The third camera sits close to camera 0 and above the stereo baseline,
    // giving the pairs of each source view clearly different baselines.
    const Eigen::Vector3d third_center(-0.42, -0.30, 0);
    spec.views.push_back(MakeView(2, third_center, LookAt(third_center, {0, 0, 5})));
    spec.surface.has_plane = true;
    randomized_plane(&spec.surface.plane);
    spec.surface.spheres.push_back({{0.55 + 0.1 * unit(rng), -0.35, 4.3}, 0.55});
    return spec;
  }
  if (preset.rfind("ring", 0) == 0) {
    int k = 0;
    try {
      std::size_t consumed = 0;
      k = std::stoi(preset.substr(4), &consumed);
      if (consumed != preset.size() - 4) k = 0;
    } catch (const std::exception&) {
      throw BadPreset("unknown preset: " + preset);
    }
    if (k < 2) throw BadPreset("ring presets need at least 2 cameras");
    const double radius = 6.2;
    for (int i = 0; i < k; ++i) {
      const double phi = 2.0 * std::numbers::pi * i / k;
      const Eigen::Vector3d center(radius * std::sin(phi), 0, -radius * std::cos(phi));
      spec.views.push_back(MakeView(i, center, LookAt(center, {0, 0, 0})));
    }
    // Sphere small enough that neighboring cameras share most of their
    // visible caps (arccos(1.5 / 6.2) is about 76 degrees).
    spec.surface.spheres.push_back({{0, 0, 0}, 1.5});
    spec.surface.spheres.push_back({{0.15 * unit(rng), -0.55, -1.9}, 0.35});
    spec.texture_frequency = 2.2;
    return spec;
  }
  throw BadPreset("unknown preset: " + preset);
}

}  // namespace

const DepthMap* SceneBundle::FindGtDepth(int view_id) const {
  for (const auto& depth : gt_depth) {
    if (depth.view_id == view_id) return &depth;
  }
  return nullptr;
}

SceneBundle GenerateScene(const std::string& preset, std::uint64_t seed) {
  PresetSpec spec = BuildPreset(preset, seed);
  const ColorField texture(SplitMix64(seed), spec.texture_frequency);

  SceneBundle bundle;
  bundle.seed = seed;
  bundle.preset = preset;
  bundle.scene.views = std::move(spec.views);

  for (auto& view : bundle.scene.views) {
    DepthMap depth(view.id, view.width, view.height);
    Image image(view.width, view.height);
    const Eigen::Vector3d origin = view.Center();
    for (int y = 0; y < view.height; ++y) {
      for (int x = 0; x < view.width; ++x) {
        const Eigen::Vector3d dir = view.RayWorld({double(x), double(y)});
        double t;
        if (!spec.surface.Raycast(origin, dir, &t)) continue;
        depth.Set(x, y, t);
        const auto rgb = texture.Sample(origin + t * dir);
        std::uint8_t* px = image.Pixel(x, y);
        px[0] = rgb[0];
        px[1] = rgb[1];
        px[2] = rgb[2];
      }
    }
    view.image = std::move(image);
    bundle.gt_depth.push_back(std::move(depth));
  }

  for (const auto& src : bundle.scene.views) {
    for (const auto& dst : bundle.scene.views) {
      if (src.id == dst.id) continue;
      bundle.scene.AddFlow(SynthFlow(src, dst, *bundle.FindGtDepth(src.id)));
    }
  }
  return bundle;
}

SceneBundle PerturbPoses(const SceneBundle& bundle, double magnitude, std::uint64_t seed) {
  if (magnitude < 0) throw Error("perturbation magnitude must be >= 0");
  SceneBundle out = bundle;
  std::mt19937_64 rng(SplitMix64(seed ^ 0x9e3779b9ULL));
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (auto& view : out.scene.views) {
    // Unit draws are scaled by the magnitude so that a fixed seed yields a
    // smooth family of perturbations across magnitudes.
    Eigen::Vector3d dt(sym(rng), sym(rng), sym(rng));
    Eigen::Vector3d axis(gauss(rng), gauss(rng), gauss(rng));
    const double angle = magnitude * sym(rng);
    if (axis.norm() < 1e-12) axis = Eigen::Vector3d::UnitZ();
    axis.normalize();
    view.translation += magnitude * dt;
    view.rotation = Eigen::AngleAxisd(angle, axis).toRotationMatrix() * view.rotation;
  }
  return out;
}

SceneBundle SubBundle(const SceneBundle& bundle, std::span<const int> view_ids) {
  SceneBundle out;
  out.seed = bundle.seed;
  out.preset = bundle.preset;
  for (int id : view_ids) {
    const CameraView* view = bundle.scene.FindView(id);
    const DepthMap* depth = bundle.FindGtDepth(id);
    if (!view || !depth) throw InconsistentScene("sub-bundle references unknown view");
    out.scene.views.push_back(*view);
    out.gt_depth.push_back(*depth);
  }
  std::sort(out.scene.views.begin(), out.scene.views.end(),
            [](const CameraView& a, const CameraView& b) { return a.id < b.id; });
  std::sort(out.gt_depth.begin(), out.gt_depth.end(),
            [](const DepthMap& a, const DepthMap& b) { return a.view_id < b.view_id; });
  for (const auto& src : out.scene.views) {
    for (const auto& dst : out.scene.views) {
      if (src.id == dst.id) continue;
      const FlowField* flow = bundle.scene.FindFlow(src.id, dst.id);
      if (!flow) throw MissingFlow("bundle lacks flow for requested sub-scene");
      out.scene.AddFlow(*flow);
    }
  }
  return out;
}

}  // namespace nexus
