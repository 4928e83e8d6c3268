#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <sstream>

#include "nexus/fusion.h"
#include "nexus/synth.h"
#include "oracles.h"

using namespace nexus;
using namespace nexus::testing;

namespace {

DepthCandidate ResidualCandidate(double residual, bool valid = true) {
  DepthCandidate c;
  c.src_id = 0;
  c.dst_id = 1;
  c.depth = 5.0;
  c.residual = residual;
  c.status = valid ? CandidateStatus::kValid : CandidateStatus::kBehindCamera;
  return c;
}

}  // namespace

TEST_CASE("prune keeps residuals strictly below the threshold") {
  const std::vector<DepthCandidate> candidates = {ResidualCandidate(0.0), ResidualCandidate(0.5),
                                                  ResidualCandidate(2.0)};
  const auto kept = Prune(candidates, 1.0);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].residual == 0.0);
  CHECK(kept[1].residual == 0.5);

  // Exactly at the threshold is pruned (strict inequality).
  CHECK(Prune(candidates, 0.5).size() == 1);
  // Zero-residual candidates survive any positive threshold.
  CHECK(Prune(candidates, 1e-12).size() == 1);
  // Non-valid candidates never survive.
  const std::vector<DepthCandidate> with_bad = {ResidualCandidate(0.0, false)};
  CHECK(Prune(with_bad, 10.0).empty());
}

TEST_CASE("pruning is monotone in the threshold") {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> residual(0.0, 4.0);
  std::vector<DepthCandidate> candidates;
  for (int i = 0; i < 200; ++i) candidates.push_back(ResidualCandidate(residual(rng)));
  std::size_t previous = 0;
  for (double eps : {0.01, 0.1, 0.5, 1.0, 2.0, 4.5}) {
    const auto kept = Prune(candidates, eps);
    CHECK(kept.size() >= previous);
    previous = kept.size();
  }
}

TEST_CASE("constructed off-line outliers are pruned, exact pixels are not") {
  const SceneBundle bundle = GenerateScene("converging3", 3);
  const CameraView& src = bundle.scene.views[0];
  const CameraView& dst = bundle.scene.views[1];
  const FlowField& exact = *bundle.scene.FindFlow(src.id, dst.id);
  const ViewPair pair(src, dst);

  for (double eps : {0.01, 0.1, 1.0}) {
    FlowField corrupted = exact;
    int outliers = 0;
    for (int y = 0; y < src.height; ++y) {
      for (int x = 0; x < src.width; ++x) {
        if (!corrupted.valid[corrupted.Index(x, y)]) continue;
        if ((x + y) % 7 != 0) continue;
        // Push the match off its epipolar line by at least 2 eps.
        const EpipolarLine line = pair.LineThrough({double(x), double(y)});
        const double norm = std::hypot(line.a, line.b);
        const Eigen::Vector2d normal(line.a / norm, line.b / norm);
        const double shift = 2.0 * eps * (1.0 + 0.1 * ((x * 13 + y) % 5));
        corrupted.u[corrupted.Index(x, y)] += shift * normal.x();
        corrupted.v[corrupted.Index(x, y)] += shift * normal.y();
        ++outliers;
      }
    }
    REQUIRE(outliers > 500);

    int outliers_seen = 0, outliers_kept = 0, exact_pruned = 0, exact_seen = 0;
    for (int y = 0; y < src.height; y += 2) {
      for (int x = 0; x < src.width; x += 2) {
        const DepthCandidate cand = pair.Candidate(x, y, corrupted);
        if (cand.status == CandidateStatus::kOffImage) continue;
        const bool is_outlier = (x + y) % 7 == 0;
        const std::vector<DepthCandidate> one = {cand};
        const bool kept = !Prune(one, eps).empty();
        if (is_outlier) {
          ++outliers_seen;
          outliers_kept += kept;
        } else {
          ++exact_seen;
          exact_pruned += !kept;
        }
      }
    }
    REQUIRE(outliers_seen > 100);
    REQUIRE(exact_seen > 1000);
    CHECK(outliers_kept == 0);  // displaced >= 2 eps: all pruned
    CHECK(exact_pruned == 0);   // exact flow: g = 0, never pruned
  }
}

TEST_CASE("densify with exact flow reproduces the surface") {
  const SceneBundle bundle = GenerateScene("converging3", 4);
  DensifyOptions options;
  options.threads = 1;
  const DensifyResult result = DensifyScene(bundle.scene, options);

  REQUIRE(result.depth_maps.size() == 3);
  // Every pixel with at least one valid flow candidate becomes a valid depth.
  std::size_t checked = 0;
  for (const auto& depth_map : result.depth_maps) {
    const DepthMap* gt = bundle.FindGtDepth(depth_map.view_id);
    REQUIRE(gt != nullptr);
    for (int y = 0; y < depth_map.height; ++y) {
      for (int x = 0; x < depth_map.width; ++x) {
        if (!depth_map.ValidAt(x, y)) continue;
        REQUIRE(gt->ValidAt(x, y));
        CHECK(std::abs(depth_map.At(x, y) - gt->At(x, y)) < 1e-9 * gt->At(x, y));
        ++checked;
      }
    }
  }
  CHECK(checked > 25000);

  // Cloud points sit on the ground-truth surface.
  for (std::size_t i = 0; i < result.cloud.points.size(); i += 97) {
    const auto& point = result.cloud.points[i];
    const DepthMap* gt = bundle.FindGtDepth(point.src_view);
    const CameraView* view = bundle.scene.FindView(point.src_view);
    const Eigen::Vector3d expected =
        Backproject(*view, {double(point.col), double(point.row)}, gt->At(point.col, point.row));
    CHECK((point.position - expected).norm() < 1e-6);
  }
}

TEST_CASE("lifting consistency: cloud points reproject to their source pixel") {
  const SceneBundle bundle = GenerateScene("rectified2", 9);
  DensifyOptions options;
  const DensifyResult result = DensifyScene(bundle.scene, options);
  REQUIRE_FALSE(result.cloud.points.empty());
  for (std::size_t i = 0; i < result.cloud.points.size(); i += 31) {
    const auto& point = result.cloud.points[i];
    const CameraView* view = bundle.scene.FindView(point.src_view);
    const Projection proj = Project(*view, point.position);
    CHECK((proj.pixel - Eigen::Vector2d(point.col, point.row)).norm() < 1e-6);
    const DepthMap& dm = result.depth_maps[point.src_view == 0 ? 0 : 1];
    CHECK(proj.depth == doctest::Approx(dm.At(point.col, point.row)).epsilon(1e-9));
  }
}

TEST_CASE("stride sampling produces the exact expected grid") {
  const SceneBundle bundle = GenerateScene("rectified2", 5);
  DensifyOptions options;
  options.stride = 2;
  const DensifyResult result = DensifyScene(bundle.scene, options);
  CHECK(result.stats.pixels_sampled == 2 * 50 * 50);
  for (const auto& point : result.cloud.points) {
    CHECK(point.row % 2 == 0);
    CHECK(point.col % 2 == 0);
  }
  // Sampled minus candidate-less pixels equals the cloud size, exactly.
  CHECK(result.cloud.points.size() == result.stats.pixels_valid);
}

TEST_CASE("point count is non-decreasing in the pruning threshold") {
  const SceneBundle bundle = GenerateScene("converging3", 6);
  Scene noisy = bundle.scene;
  FlowNoiseSpec noise;
  noise.gaussian_sigma = 0.6;
  noise.outlier_fraction = 0.05;
  noise.outlier_max = 15.0;
  for (auto& [key, flow] : noisy.flows) {
    noise.seed = 900 + key.first * 10 + key.second;
    flow = PerturbFlow(flow, noise);
  }
  std::size_t previous = 0;
  for (double eps : {0.01, 0.1, 1.0, 2.0}) {
    DensifyOptions options;
    options.epsilon_d = eps;
    options.stride = 2;
    const DensifyResult result = DensifyScene(noisy, options);
    CHECK(result.cloud.points.size() >= previous);
    previous = result.cloud.points.size();
  }
}

TEST_CASE("densify is byte-identical across thread counts") {
  const SceneBundle bundle = GenerateScene("converging3", 7);
  std::string reference;
  for (int threads : {1, 2, 0}) {
    DensifyOptions options;
    options.threads = threads;
    const DensifyResult result = DensifyScene(bundle.scene, options);
    std::string bytes = WritePly(result.cloud);
    for (const auto& depth_map : result.depth_maps) bytes += WritePfm(depth_map);
    if (reference.empty()) {
      reference = std::move(bytes);
    } else {
      CHECK(bytes == reference);
    }
  }
}

TEST_CASE("densify validates its inputs") {
  const SceneBundle bundle = GenerateScene("rectified2", 1);
  DensifyOptions options;

  Scene missing_flow = bundle.scene;
  missing_flow.flows.erase({0, 1});
  CHECK_THROWS_AS(DensifyScene(missing_flow, options), MissingFlow);

  Scene one_view = bundle.scene;
  one_view.views.pop_back();
  CHECK_THROWS_AS(DensifyScene(one_view, options), InconsistentScene);

  DensifyOptions bad = options;
  bad.epsilon_d = 0.0;
  CHECK_THROWS_AS(DensifyScene(bundle.scene, bad), Error);
  bad = options;
  bad.stride = 0;
  CHECK_THROWS_AS(DensifyScene(bundle.scene, bad), Error);
}

TEST_CASE("depth bounds invalidate out-of-range pixels") {
  const SceneBundle bundle = GenerateScene("converging3", 8);
  DensifyOptions options;
  options.stride = 2;
  const DensifyResult all = DensifyScene(bundle.scene, options);
  options.depth_bounds = {4.9, 5.1};
  const DensifyResult banded = DensifyScene(bundle.scene, options);
  CHECK(banded.cloud.points.size() < all.cloud.points.size());
  for (const auto& point : banded.cloud.points) {
    const CameraView* view = bundle.scene.FindView(point.src_view);
    const double depth = (view->rotation * point.position + view->translation).z();
    CHECK(depth >= 4.9 - 1e-9);
    CHECK(depth <= 5.1 + 1e-9);
  }
}

TEST_CASE("ply layout of a single white point") {
  PointCloud cloud;
  cloud.points.push_back({{0, 0, 5}, {255, 255, 255}, 0, 0, 0});
  const std::string bytes = WritePly(cloud);
  const std::size_t header_end = bytes.find("end_header\n") + 11;
  CHECK(bytes.size() - header_end == 15);
  CHECK(bytes.find("element vertex 1\n") != std::string::npos);
  float z = 0;
  std::memcpy(&z, bytes.data() + header_end + 8, 4);
  CHECK(z == 5.0f);
  CHECK(static_cast<unsigned char>(bytes[header_end + 12]) == 255);
}

TEST_CASE("empty cloud serializes to a valid ply") {
  const std::string bytes = WritePly(PointCloud{});
  CHECK(bytes.find("element vertex 0\n") != std::string::npos);
  std::istringstream in(bytes, std::ios::binary);
  CHECK(ReadPly(in).points.empty());
}

TEST_CASE("ply round-trips bit-exactly") {
  std::mt19937_64 rng(52);
  std::uniform_real_distribution<double> coord(-10.0, 10.0);
  PointCloud cloud;
  for (int i = 0; i < 257; ++i) {
    CloudPoint point;
    point.position = {static_cast<float>(coord(rng)), static_cast<float>(coord(rng)),
                      static_cast<float>(coord(rng))};
    point.color = {static_cast<std::uint8_t>(i % 256), static_cast<std::uint8_t>((i * 7) % 256),
                   static_cast<std::uint8_t>((i * 13) % 256)};
    cloud.points.push_back(point);
  }
  const std::string bytes = WritePly(cloud);
  std::istringstream in(bytes, std::ios::binary);
  const PointCloud reread = ReadPly(in);
  CHECK(WritePly(reread) == bytes);
}

TEST_CASE("ply reader rejects malformed headers") {
  {
    std::istringstream in("nope\n", std::ios::binary);
    CHECK_THROWS_AS(ReadPly(in), IoFailure);
  }
  {
    std::istringstream in("ply\nformat ascii 1.0\nend_header\n", std::ios::binary);
    CHECK_THROWS_AS(ReadPly(in), IoFailure);
  }
  {
    std::istringstream in(
        "ply\nformat binary_little_endian 1.0\nelement vertex 1\nproperty float x\nend_header\n",
        std::ios::binary);
    CHECK_THROWS_AS(ReadPly(in), IoFailure);
  }
}

TEST_CASE("pfm header and round trip") {
  DepthMap depth(3, 4, 3);
  depth.Set(0, 0, 1.5);
  depth.Set(3, 2, 2.25);
  depth.Set(1, 1, 7.125);
  const std::string bytes = WritePfm(depth);
  CHECK(bytes.rfind("Pf\n4 3\n-1.0\n", 0) == 0);
  CHECK(bytes.size() == 12 + 4 * 3 * 4);

  std::istringstream in(bytes, std::ios::binary);
  DepthMap reread = ReadPfm(in);
  reread.view_id = depth.view_id;
  CHECK(reread == depth);

  // Invalid pixels come back masked (encoded as 0.0 in the payload).
  CHECK_FALSE(reread.ValidAt(2, 2));
}

TEST_CASE("pfm reader rejects malformed headers") {
  {
    std::istringstream in("PF\n2 2\n-1.0\n", std::ios::binary);
    CHECK_THROWS_AS(ReadPfm(in), IoFailure);  // color PFM unsupported
  }
  {
    std::istringstream in("Pf\n2 -2\n-1.0\n", std::ios::binary);
    CHECK_THROWS_AS(ReadPfm(in), NonFiniteDimensions);
  }
  {
    std::istringstream in("Pf\n2 2\n1.0\n", std::ios::binary);
    CHECK_THROWS_AS(ReadPfm(in), IoFailure);  // big-endian scale
  }
  {
    std::istringstream in("Pf\n2 2\n-1.0\nxx", std::ios::binary);
    CHECK_THROWS_AS(ReadPfm(in), TruncatedStream);
  }
}
