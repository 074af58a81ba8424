#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "handguide/geometry.hpp"

using namespace handguide;

namespace {

// Elementary rotations written out by hand.
Mat3 rx(double a) {
  Mat3 m;
  m << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
  return m;
}
Mat3 ry(double a) {
  Mat3 m;
  m << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
  return m;
}
Mat3 rz(double a) {
  Mat3 m;
  m << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return m;
}

}  // namespace

TEST(RigidTransform, RpyMatchesElementaryProduct) {
  const Vec3 rpy(0.3, -0.7, 1.9);
  const auto t = RigidTransform::FromXyzRpy({1, 2, 3}, rpy);
  EXPECT_LT((t.rotation() - rz(rpy.z()) * ry(rpy.y()) * rx(rpy.x())).norm(), 1e-12);
  EXPECT_LT((t.translation() - Vec3(1, 2, 3)).norm(), 1e-15);
}

TEST(RigidTransform, RpyRoundTrip) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int i = 0; i < 200; ++i) {
    const Vec3 rpy(2 * u(rng), u(rng), 2 * u(rng));
    const auto t = RigidTransform::FromXyzRpy(Vec3::Zero(), rpy);
    const auto back = RigidTransform::FromXyzRpy(Vec3::Zero(), t.rpy());
    EXPECT_LT((back.rotation() - t.rotation()).norm(), 1e-9);
  }
}

TEST(RigidTransform, InverseComposesToIdentity) {
  const auto t = RigidTransform::FromXyzRpy({0.4, -1, 2}, {0.1, 0.2, 0.3});
  const auto id = t * t.inverse();
  EXPECT_LT((id.rotation() - Mat3::Identity()).norm(), 1e-12);
  EXPECT_LT(id.translation().norm(), 1e-12);
  const Vec3 p(0.3, 0.2, -0.9);
  EXPECT_LT((t.inverse() * (t * p) - p).norm(), 1e-12);
}

TEST(RigidTransform, MatrixRoundTrip) {
  const auto t = RigidTransform::FromXyzRpy({1, 0, -2}, {0.5, 0.1, -0.4});
  const auto back = RigidTransform::FromMatrix(t.matrix());
  EXPECT_LT((back.matrix() - t.matrix()).norm(), 1e-15);
  EXPECT_LT(t.orthonormality_error(), 1e-12);
}

TEST(PoseError, KnownOffsets) {
  const auto truth = RigidTransform::FromXyzRpy({1, 1, 0}, {0, 0, 0.2});
  const auto est = RigidTransform::FromXyzRpy({1, 1.003, 0.004}, {0, 0, 0.25});
  const PoseError e = pose_error(est, truth);
  EXPECT_NEAR(e.translation, 0.005, 1e-12);
  EXPECT_NEAR(e.rotation, 0.05, 1e-12);
}

TEST(ClosestPointOnTriangle, MatchesDenseSearch) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec3 a(u(rng), u(rng), u(rng));
    const Vec3 b(u(rng), u(rng), u(rng));
    const Vec3 c(u(rng), u(rng), u(rng));
    const Vec3 p = 2.0 * Vec3(u(rng), u(rng), u(rng));
    const Vec3 q = closest_point_on_triangle(p, a, b, c);
    // Brute force over a fine barycentric grid; the analytic answer can only be closer.
    double best = std::numeric_limits<double>::infinity();
    const int n = 300;
    for (int i = 0; i <= n; ++i) {
      for (int j = 0; i + j <= n; ++j) {
        const double s = static_cast<double>(i) / n;
        const double t = static_cast<double>(j) / n;
        best = std::min(best, (a + s * (b - a) + t * (c - a) - p).norm());
      }
    }
    EXPECT_LE((q - p).norm(), best + 1e-12);
    EXPECT_GT((q - p).norm(), best - 0.01);
  }
}
