// Copyright 2026 The cbct Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cbct/errors.hpp"
#include "cbct/geometry.hpp"

namespace cbct {
namespace {

CbctGeometry small_geometry() {
  CbctGeometry g;
  g.n_x = g.n_y = g.n_z = 4;
  g.d_x = g.d_y = g.d_z = 1.0;
  g.d = 10.0;
  g.cap_d = 20.0;
  g.n_u = g.n_v = 8;
  g.d_u = g.d_v = 1.0;
  g.n_p = 4;
  return g;
}

CbctGeometry random_geometry(std::mt19937& rng) {
  std::uniform_int_distribution<int> n(2, 96);
  std::uniform_real_distribution<double> pitch(0.2, 2.0);
  CbctGeometry g;
  g.n_x = n(rng);
  g.n_y = n(rng);
  g.n_z = n(rng);
  g.d_x = pitch(rng);
  g.d_y = pitch(rng);
  g.d_z = pitch(rng);
  g.n_u = n(rng) * 2;
  g.n_v = n(rng) * 2;
  g.d_u = pitch(rng);
  g.d_v = pitch(rng);
  g.n_p = std::uniform_int_distribution<int>(1, 720)(rng);
  const double radius = 0.5 * std::hypot(g.n_x * g.d_x, g.n_y * g.d_y);
  g.d = radius + std::uniform_real_distribution<double>(10.0, 800.0)(rng);
  g.cap_d = g.d + std::uniform_real_distribution<double>(10.0, 800.0)(rng);
  return g;
}

void expect_entry(double actual, double expected) {
  EXPECT_NEAR(actual, expected, 1e-12 * std::max(1.0, std::abs(expected)));
}

TEST(Geometry, MatrixMatchesExactProductAtQuarterTurn) {
  // Exact rational product of the three factor matrices for view 1.
  const double expected[3][4] = {{3.5, 20.0, 0.0, -0.25}, {3.5, 0.0, 20.0, -0.25}, {1.0, 0.0, 0.0, 8.5}};
  const ProjectionMatrix p = build_projection_matrix(small_geometry(), 1);
  EXPECT_EQ(p.view_index, 1);
  expect_entry(p.beta, std::numbers::pi / 2);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) expect_entry(p.rows[r][c], expected[r][c]);
}

TEST(Geometry, MatrixIsProductOfFactors) {
  const CbctGeometry g = small_geometry();
  const Matrix44 full =
      multiply(detector_projection(g), multiply(gantry_rotation(g, g.beta(3)), volume_to_gantry(g)));
  const ProjectionMatrix p = build_projection_matrix(g, 3);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) expect_entry(p.rows[r][c], full[r][c]);
}

TEST(Geometry, CenterVoxelHitsDetectorCenterAtDepthD) {
  CbctGeometry g = small_geometry();
  g.n_x = g.n_y = g.n_z = 5;
  const ProjectionMatrix p = build_projection_matrix(g, 0);
  const DetectorPoint q = project_point(p, 2, 2, 2);
  EXPECT_NEAR(q.z, g.d, 1e-12);
  EXPECT_NEAR(q.u, (g.n_u - 1) / 2.0, 1e-12);
  EXPECT_NEAR(q.v, (g.n_v - 1) / 2.0, 1e-12);
  // Even sizes: the centre is fractional.
  const DetectorPoint q4 = project_point(build_projection_matrix(small_geometry(), 0), 1.5, 1.5, 1.5);
  EXPECT_NEAR(q4.z, 10.0, 1e-12);
}

TEST(Geometry, DepthByHand) {
  CbctGeometry g = small_geometry();
  g.n_x = g.n_y = 9;
  EXPECT_NEAR(depth_z(g, 0.0, 4, 4), 10.0, 1e-12);
  for (int j = 0; j < 9; ++j) EXPECT_NEAR(depth_z(g, std::numbers::pi / 2, 4 + 3, j), 13.0, 1e-12);
}

TEST(Geometry, RandomisedInvariants) {
  std::mt19937 rng(20261015);
  for (int trial = 0; trial < 1000; ++trial) {
    const CbctGeometry g = random_geometry(rng);
    const int view = std::uniform_int_distribution<int>(0, g.n_p - 1)(rng);
    const int i = std::uniform_int_distribution<int>(0, g.n_x - 1)(rng);
    const int j = std::uniform_int_distribution<int>(0, g.n_y - 1)(rng);
    const ProjectionMatrix p = build_projection_matrix(g, view);
    const DetectorPoint first = project_point(p, i, j, 0);
    const double z_closed = depth_z(g, g.beta(view), i, j);
    ASSERT_LT(std::abs(first.z - z_closed) / z_closed, 1e-12) << "trial " << trial;
    for (int k = 0; k < g.n_z; ++k) {
      const DetectorPoint a = project_point(p, i, j, k);
      const DetectorPoint b = project_point(p, i, j, g.n_z - 1 - k);
      ASSERT_LT(std::abs(a.z - first.z) / first.z, 1e-12) << "trial " << trial << " k " << k;
      ASSERT_LT(std::abs(a.u - first.u), 1e-9) << "trial " << trial << " k " << k;
      ASSERT_NEAR(a.v + b.v, g.n_v - 1, 1e-9) << "trial " << trial << " k " << k;
    }
  }
}

TEST(Geometry, MatrixAgreesWithRayGeometry) {
  // A point on the segment from the source to detector position (u, v)
  // must project back to (u, v).
  std::mt19937 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const CbctGeometry g = random_geometry(rng);
    const int view = std::uniform_int_distribution<int>(0, g.n_p - 1)(rng);
    const double beta = g.beta(view);
    const double u = std::uniform_real_distribution<double>(0, g.n_u - 1)(rng);
    const double v = std::uniform_real_distribution<double>(0, g.n_v - 1)(rng);
    const double t = std::uniform_real_distribution<double>(0.2, 0.8)(rng);
    const Vec3 s = source_position(g, beta);
    const Vec3 det = detector_position(g, beta, u, v);
    const Vec3 x{s[0] + t * (det[0] - s[0]), s[1] + t * (det[1] - s[1]), s[2] + t * (det[2] - s[2])};
    // Invert voxel_center: X = dx (i - cx), Y = -dy (j - cy), Z = -dz (k - cz).
    const double i = x[0] / g.d_x + (g.n_x - 1) / 2.0;
    const double j = -x[1] / g.d_y + (g.n_y - 1) / 2.0;
    const double k = -x[2] / g.d_z + (g.n_z - 1) / 2.0;
    const Vec3 back = voxel_center(g, i, j, k);
    for (int a = 0; a < 3; ++a) ASSERT_NEAR(back[a], x[a], 1e-9);
    const DetectorPoint q = project_point(build_projection_matrix(g, view), i, j, k);
    ASSERT_NEAR(q.u, u, 1e-7) << "trial " << trial;
    ASSERT_NEAR(q.v, v, 1e-7) << "trial " << trial;
    ASSERT_NEAR(q.z, t * g.cap_d, 1e-7 * g.cap_d) << "trial " << trial;
  }
}

TEST(Geometry, SourceSitsAtDistanceD) {
  const CbctGeometry g = small_geometry();
  const Vec3 s0 = source_position(g, 0.0);
  EXPECT_NEAR(s0[0], 0.0, 1e-12);
  EXPECT_NEAR(s0[1], -10.0, 1e-12);
  EXPECT_NEAR(s0[2], 0.0, 1e-12);
  const Vec3 s1 = source_position(g, std::numbers::pi / 2);
  EXPECT_NEAR(std::hypot(s1[0], s1[1]), 10.0, 1e-12);
}

TEST(Geometry, ThetaAndBeta) {
  const CbctGeometry g = small_geometry();
  EXPECT_DOUBLE_EQ(g.theta(), std::numbers::pi / 2);
  EXPECT_DOUBLE_EQ(g.beta(2), std::numbers::pi);
  EXPECT_EQ(build_projection_matrices(g).size(), 4u);
}

TEST(Geometry, ViewOutOfRange) {
  const CbctGeometry g = small_geometry();
  EXPECT_THROW(build_projection_matrix(g, 4), IndexError);
  EXPECT_THROW(build_projection_matrix(g, -1), IndexError);
}

TEST(Geometry, ValidateRejectsBadGeometry) {
  CbctGeometry g = small_geometry();
  g.validate();
  g.n_u = 0;
  EXPECT_THROW(g.validate(), GeometryError);
  g = small_geometry();
  g.d_x = -1.0;
  EXPECT_THROW(g.validate(), GeometryError);
  g = small_geometry();
  g.cap_d = 5.0;  // detector in front of the rotation axis
  EXPECT_THROW(g.validate(), GeometryError);
}

TEST(Geometry, ZeroDepthIsRejected) {
  ProjectionMatrix p;
  p.rows = {{{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 0, 0}}};
  EXPECT_THROW(project_point(p, 1, 1, 1), GeometryError);
}

}  // namespace
}  // namespace cbct
