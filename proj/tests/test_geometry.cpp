#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "nexus/geometry.h"
#include "oracles.h"

using namespace nexus;
using namespace nexus::testing;

namespace {

Eigen::Vector3d NormalizedLine(const Eigen::Vector3d& line) {
  return line / std::hypot(line.x(), line.y());
}

}  // namespace

TEST_CASE("fundamental matrix of the rectified rig gives horizontal lines") {
  const CameraView cam0 = R1Camera(0);
  const CameraView cam1 = R1Camera(1);
  const Eigen::Matrix3d F = FundamentalMatrix(cam0, cam1);

  const Eigen::Vector3d line = F * Eigen::Vector3d(50, 50, 1);
  // Proportional to (0, 0.01, -0.5), i.e. the line y = 50.
  const Eigen::Vector3d expected(0, 0.01, -0.5);
  const Eigen::Vector3d cross = line.cross(expected);
  CHECK(cross.norm() < 1e-12 * line.norm() * expected.norm() + 1e-15);
  const Eigen::Vector3d n = NormalizedLine(line);
  CHECK(std::abs(n.x()) < 1e-12);
  CHECK(std::abs(-n.z() / n.y() - 50.0) < 1e-9);
}

TEST_CASE("fundamental matrices are rank 2 on random rigs") {
  RandomRigGenerator gen(11);
  for (int trial = 0; trial < 100; ++trial) {
    const CameraView a = gen.NextCamera(0);
    const CameraView b = gen.NextCamera(1);
    Eigen::Matrix3d F = FundamentalMatrix(a, b);
    F /= F.cwiseAbs().maxCoeff();
    CHECK(std::abs(F.determinant()) < 1e-10);
    // Rank exactly 2: the two largest singular values are far from zero.
    const Eigen::JacobiSVD<Eigen::Matrix3d> svd(F);
    CHECK(svd.singularValues()(1) > 1e-8);
  }
}

TEST_CASE("epipolar constraint holds for projected world points") {
  RandomRigGenerator gen(12);
  for (int trial = 0; trial < 200; ++trial) {
    const CameraView a = gen.NextCamera(0);
    const CameraView b = gen.NextCamera(1);
    const Eigen::Vector3d p = gen.NextCommonPoint(a, b);
    const Eigen::Vector2d pa = OracleProject(a, p);
    const Eigen::Vector2d pb = OracleProject(b, p);
    const EpipolarLine line = ComputeEpipolarLine(FundamentalMatrix(a, b), pa);
    const double norm = std::hypot(line.a, line.b);
    const double residual = std::abs(line.a * pb.x() + line.b * pb.y() + line.c) / norm;
    CHECK(residual < 1e-7);
  }
}

TEST_CASE("rectified epipolar lines preserve the row") {
  const Eigen::Matrix3d F = FundamentalMatrix(R1Camera(0), R1Camera(1));
  const EpipolarLine l1 = ComputeEpipolarLine(F, {50, 50});
  CHECK(std::abs(l1.a) < 1e-15);
  CHECK(std::abs(-l1.c / l1.b - 50.0) < 1e-9);
  const EpipolarLine l2 = ComputeEpipolarLine(F, {10, 70});
  CHECK(std::abs(l2.a) < 1e-15);
  CHECK(std::abs(-l2.c / l2.b - 70.0) < 1e-9);
}

TEST_CASE("epipole of the rectified rig is at infinity along x") {
  const Epipole e = ComputeEpipole(R1Camera(0), R1Camera(1));
  CHECK(e.at_infinity);
  CHECK(e.position.x() == doctest::Approx(1.0));
  CHECK(std::abs(e.position.y()) < 1e-12);
}

TEST_CASE("converging rig epipole matches the projection oracle") {
  const CameraView cam0 = R2Camera(0);
  const CameraView cam1 = R2Camera(1);
  const Epipole e = ComputeEpipole(cam0, cam1);
  REQUIRE_FALSE(e.at_infinity);
  const Eigen::Vector2d expected = OracleProject(cam1, cam0.Center());
  CHECK((e.position - expected).norm() < 1e-9);
}

TEST_CASE("epipole lies on the epipolar lines of random source pixels") {
  RandomRigGenerator gen(13);
  const auto [src, dst] = gen.NextFiniteEpipolePair();
  const Eigen::Matrix3d F = FundamentalMatrix(src, dst);
  const Epipole e = ComputeEpipole(src, dst);
  REQUIRE_FALSE(e.at_infinity);
  std::uniform_real_distribution<double> coord(5.0, 95.0);
  for (int i = 0; i < 50; ++i) {
    const Eigen::Vector2d pixel(coord(gen.rng()), coord(gen.rng()));
    EpipolarLine line;
    try {
      line = ComputeEpipolarLine(F, pixel);
    } catch (const DegenerateLine&) {
      continue;
    }
    const double norm = std::hypot(line.a, line.b);
    const double residual =
        std::abs(line.a * e.position.x() + line.b * e.position.y() + line.c) / norm;
    CHECK(residual < 1e-6);
  }
}

TEST_CASE("epipoles are null vectors of the fundamental matrix") {
  RandomRigGenerator gen(14);
  for (int trial = 0; trial < 20; ++trial) {
    const auto [src, dst] = gen.NextFiniteEpipolePair();
    Eigen::Matrix3d F = FundamentalMatrix(src, dst);
    F /= F.cwiseAbs().maxCoeff();
    const Epipole e_src = ComputeEpipole(dst, src);  // epipole in the src image
    const Epipole e_dst = ComputeEpipole(src, dst);
    if (e_src.at_infinity || e_dst.at_infinity) continue;
    const Eigen::Vector3d h_src = e_src.position.homogeneous();
    const Eigen::Vector3d h_dst = e_dst.position.homogeneous();
    CHECK((F * h_src).norm() / h_src.norm() < 1e-8);
    CHECK((F.transpose() * h_dst).norm() / h_dst.norm() < 1e-8);
  }
}

TEST_CASE("projection of reference points") {
  const CameraView cam0 = R1Camera(0);
  const CameraView cam1 = R1Camera(1);
  const Projection p0 = Project(cam0, {0, 0, 5});
  CHECK((p0.pixel - Eigen::Vector2d(50, 50)).norm() < 1e-12);
  CHECK(p0.depth == doctest::Approx(5.0));
  const Projection p1 = Project(cam1, {0, 0, 5});
  CHECK((p1.pixel - Eigen::Vector2d(30, 50)).norm() < 1e-12);
  CHECK(p1.depth == doctest::Approx(5.0));
}

TEST_CASE("backprojection of reference pixels") {
  const CameraView cam0 = R1Camera(0);
  CHECK((Backproject(cam0, {50, 50}, 5.0) - Eigen::Vector3d(0, 0, 5)).norm() < 1e-12);
  CHECK((Backproject(cam0, {60, 50}, 5.0) - Eigen::Vector3d(0.5, 0, 5)).norm() < 1e-12);
}

TEST_CASE("project and backproject are mutually inverse") {
  RandomRigGenerator gen(15);
  for (int trial = 0; trial < 1000; ++trial) {
    const CameraView view = gen.NextCamera(trial);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const Eigen::Vector3d p(2.0 * (unit(gen.rng()) - 0.5), 2.0 * (unit(gen.rng()) - 0.5),
                            2.0 * (unit(gen.rng()) - 0.5));
    Projection proj;
    if (!TryProject(view, p, &proj) || proj.depth <= 0) continue;
    const Eigen::Vector3d back = Backproject(view, proj.pixel, proj.depth);
    CHECK((back - p).norm() < 1e-9 * (1.0 + p.norm()));
  }
}

TEST_CASE("geometry error paths") {
  const CameraView cam0 = R1Camera(0);
  CameraView twin = R1Camera(1);
  twin.translation = cam0.translation;  // coincident centers
  CHECK_THROWS_AS(FundamentalMatrix(cam0, twin), DegenerateBaseline);
  CHECK_THROWS_AS(ComputeEpipole(cam0, twin), DegenerateBaseline);

  // The source epipole of a converging rig maps to a vanishing line.
  const CameraView a = R2Camera(0);
  const CameraView b = R2Camera(1);
  const Epipole e_in_src = ComputeEpipole(b, a);
  REQUIRE_FALSE(e_in_src.at_infinity);
  CHECK_THROWS_AS(ComputeEpipolarLine(FundamentalMatrix(a, b), e_in_src.position),
                  DegenerateLine);

  CHECK_THROWS_AS(Backproject(cam0, {50, 50}, 0.0), NonPositiveDepth);
  CHECK_THROWS_AS(Backproject(cam0, {50, 50}, -1.0), NonPositiveDepth);
  CHECK_THROWS_AS(Project(cam0, {0.3, -0.2, 0.0}), PointAtCameraPlane);
}

TEST_CASE("camera validation rejects broken views") {
  CameraView view = R1Camera(0);
  view.Validate();

  CameraView bad = view;
  bad.fx = 0;
  CHECK_THROWS_AS(bad.Validate(), InvalidCamera);

  bad = view;
  bad.rotation(0, 0) = 1.5;
  CHECK_THROWS_AS(bad.Validate(), InvalidCamera);

  bad = view;
  bad.rotation.col(0) = -bad.rotation.col(0);  // det -1
  CHECK_THROWS_AS(bad.Validate(), InvalidCamera);

  bad = view;
  bad.width = 0;
  CHECK_THROWS_AS(bad.Validate(), InvalidCamera);
}
