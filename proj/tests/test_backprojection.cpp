// Copyright 2026 The cbct Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cbct/backprojection.hpp"
#include "cbct/errors.hpp"
#include "cbct/fdk.hpp"

namespace cbct {
namespace {

Projection grid2x2() {
  Projection x(2, 2, ProjectionKind::filtered);
  x.at(0, 0) = 0.0f;
  x.at(1, 0) = 1.0f;
  x.at(0, 1) = 2.0f;
  x.at(1, 1) = 3.0f;
  return x;
}

CbctGeometry make_geometry(int n_xy, int n_z, int n_det, int n_p) {
  CbctGeometry g;
  g.n_x = g.n_y = n_xy;
  g.n_z = n_z;
  g.d_x = g.d_y = g.d_z = 1.0;
  g.n_u = g.n_v = n_det;
  g.d_u = g.d_v = 2.0 * n_xy * 1.6 / n_det;
  g.n_p = n_p;
  g.d = 4.0 * n_xy;
  g.cap_d = 8.0 * n_xy;
  return g;
}

std::vector<Projection> random_stack(const CbctGeometry& g, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  std::vector<Projection> stack;
  for (int s = 0; s < g.n_p; ++s) {
    Projection p(g.n_u, g.n_v, ProjectionKind::filtered);
    for (float& x : p.samples()) x = dist(rng);
    stack.push_back(std::move(p));
  }
  return stack;
}

double max_abs_diff(const Volume& a, const Volume& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(static_cast<double>(a.samples()[i]) - b.samples()[i]));
  return m;
}

TEST(Interp2, GridPoint) { EXPECT_EQ(interp2(grid2x2(), 1.0f, 0.0f), 1.0f); }

TEST(Interp2, MeanOfFour) { EXPECT_FLOAT_EQ(interp2(grid2x2(), 0.5f, 0.5f), 1.5f); }

TEST(Interp2, HandEvaluation) { EXPECT_FLOAT_EQ(interp2(grid2x2(), 0.25f, 0.75f), 1.75f); }

TEST(Interp2, LastRowAndColumnAreInside) {
  EXPECT_EQ(interp2(grid2x2(), 1.0f, 1.0f), 3.0f);
  EXPECT_EQ(interp2(grid2x2(), 0.0f, 1.0f), 2.0f);
  EXPECT_FLOAT_EQ(interp2(grid2x2(), 0.5f, 1.0f), 2.5f);
}

TEST(Interp2, OutsideIsZero) {
  EXPECT_EQ(interp2(grid2x2(), -0.01f, 0.5f), 0.0f);
  EXPECT_EQ(interp2(grid2x2(), 0.5f, 1.01f), 0.0f);
  EXPECT_EQ(interp2(grid2x2(), std::nanf(""), 0.5f), 0.0f);
}

TEST(Transpose, SmallExample) {
  Projection q(2, 3, ProjectionKind::filtered);
  float x = 0.0f;
  for (float& s : q.samples()) s = x++;
  const Projection t = transpose_projection(q);
  EXPECT_EQ(t.width(), 3);
  EXPECT_EQ(t.height(), 2);
  EXPECT_EQ(t.kind(), ProjectionKind::transposed_filtered);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 2; ++c) EXPECT_EQ(t.at(r, c), q.at(c, r));
}

TEST(Transpose, RandomMatchesIndexSwap) {
  std::mt19937 rng(1);
  std::uniform_real_distribution<float> dist(-5.0f, 5.0f);
  Projection q(5, 7, ProjectionKind::filtered);
  for (float& s : q.samples()) s = dist(rng);
  const Projection t = transpose_projection(q);
  for (int r = 0; r < 7; ++r)
    for (int c = 0; c < 5; ++c) EXPECT_EQ(t.samples()[static_cast<std::size_t>(c) * 7 + r], q.samples()[r * 5 + c]);
  const Projection back = transpose_projection(t);
  EXPECT_EQ(back.kind(), ProjectionKind::filtered);
  EXPECT_EQ(back.samples(), q.samples());
}

TEST(Transpose, RawRejected) { EXPECT_THROW(transpose_projection(Projection(2, 2)), ValidationError); }

TEST(Reshape, IdentityAndRoundTrip) {
  std::mt19937 rng(2);
  std::uniform_real_distribution<float> dist(-5.0f, 5.0f);
  Volume v(3, 4, 5, VolumeLayout::k_major);
  for (float& s : v.samples()) s = dist(rng);
  EXPECT_EQ(reshape_volume(v, VolumeLayout::k_major).samples(), v.samples());
  const Volume i = reshape_volume(v, VolumeLayout::i_major);
  EXPECT_EQ(i.layout(), VolumeLayout::i_major);
  EXPECT_EQ(reshape_volume(i, VolumeLayout::k_major).samples(), v.samples());
  // Address oracle for voxel (1, 2, 3).
  EXPECT_EQ(v.samples()[(1 * 4 + 2) * 5 + 3], i.samples()[(3 * 4 + 2) * 3 + 1]);
  EXPECT_EQ(i.at(1, 2, 3), v.at(1, 2, 3));
}

TEST(Standard, ZeroProjectionsGiveZeroVolume) {
  const CbctGeometry g = make_geometry(6, 6, 16, 4);
  const std::vector<Projection> zeros(4, Projection(16, 16, ProjectionKind::filtered));
  const auto mats = build_projection_matrices(g);
  const Volume a = backproject_standard(mats, zeros, g);
  const Volume b = backproject_optimized(mats, zeros, g);
  for (float x : a.samples()) EXPECT_EQ(x, 0.0f);
  for (float x : b.samples()) EXPECT_EQ(x, 0.0f);
}

TEST(Standard, UniformProjectionsAtCenterVoxel) {
  const CbctGeometry g = make_geometry(5, 5, 16, 12);
  std::vector<Projection> ones(12, Projection(16, 16, ProjectionKind::filtered));
  for (auto& p : ones) std::fill(p.samples().begin(), p.samples().end(), 1.0f);
  const Volume v = backproject_standard(build_projection_matrices(g), ones, g);
  const double expected = g.n_p / (g.d * g.d) * g.theta();
  EXPECT_NEAR(v.at(2, 2, 2), expected, 1e-5 * expected);
}

TEST(Standard, CountsThreeInnerProductsPerVoxelAndView) {
  const CbctGeometry g = make_geometry(6, 8, 16, 5);
  OpCounter counter;
  backproject_standard(build_projection_matrices(g), random_stack(g, 4), g, &counter);
  EXPECT_EQ(counter.inner_products(), 3ull * 5 * 6 * 6 * 8);
  EXPECT_EQ(counter.inner_products(), standard_op_count(g));
}

TEST(Optimized, CountMatchesFormula) {
  const CbctGeometry g = make_geometry(6, 8, 16, 5);
  OpCounter counter;
  backproject_optimized(build_projection_matrices(g), random_stack(g, 4), g, 2, &counter);
  EXPECT_EQ(counter.inner_products(), 5ull * 6 * 6 * (2 + 8 / 2));
  EXPECT_EQ(counter.inner_products(), optimized_op_count(g));
}

TEST(Optimized, RatioApproachesOneSixth) {
  CbctGeometry g = make_geometry(4, 128, 16, 3);
  EXPECT_NEAR(static_cast<double>(optimized_op_count(g)) / standard_op_count(g), 66.0 / 384.0, 1e-15);
  g.n_z = 768;
  EXPECT_NEAR(static_cast<double>(optimized_op_count(g)) / standard_op_count(g) * 6.0, 1.0, 0.01);
}

TEST(Optimized, MatchesStandardOnRandomGeometries) {
  std::mt19937 rng(42);
  for (int trial = 0; trial < 6; ++trial) {
    const int n = 2 * std::uniform_int_distribution<int>(4, 16)(rng);
    const int n_p = std::uniform_int_distribution<int>(3, 32)(rng);
    const int det = std::uniform_int_distribution<int>(16, 48)(rng);
    const CbctGeometry g = make_geometry(n, n, det, n_p);
    const auto mats = build_projection_matrices(g);
    const auto stack = random_stack(g, trial);
    const Volume a = backproject_standard(mats, stack, g);
    for (int batch : {1, 7, 32}) {
      const Volume b = backproject_optimized(mats, stack, g, batch);
      EXPECT_LT(rmse(a, b), 1e-5) << "trial " << trial << " batch " << batch;
      EXPECT_LT(max_abs_diff(a, b), 1e-3) << "trial " << trial << " batch " << batch;
    }
  }
}

TEST(Optimized, ThreadCountDoesNotChangeResult) {
  const CbctGeometry g = make_geometry(12, 12, 24, 9);
  const auto mats = build_projection_matrices(g);
  const auto stack = random_stack(g, 9);
  const Volume a = backproject_optimized(mats, stack, g, 4, nullptr, 1);
  const Volume b = backproject_optimized(mats, stack, g, 4, nullptr, 3);
  EXPECT_EQ(a.samples(), b.samples());
}

TEST(Optimized, RejectsOddDepthAndBadBatch) {
  const CbctGeometry odd = make_geometry(6, 5, 16, 2);
  const auto stack = random_stack(odd, 1);
  EXPECT_THROW(backproject_optimized(build_projection_matrices(odd), stack, odd), ShapeError);
  const CbctGeometry g = make_geometry(6, 6, 16, 2);
  EXPECT_THROW(backproject_optimized(build_projection_matrices(g), random_stack(g, 1), g, 0), ValidationError);
}

TEST(Kernels, RejectMismatchedInput) {
  const CbctGeometry g = make_geometry(6, 6, 16, 3);
  const auto mats = build_projection_matrices(g);
  auto stack = random_stack(g, 1);
  stack.pop_back();
  EXPECT_THROW(backproject_standard(mats, stack, g), ShapeError);
  stack = random_stack(g, 1);
  stack[0] = Projection(16, 16, ProjectionKind::raw);
  EXPECT_THROW(backproject_standard(mats, stack, g), ValidationError);
  EXPECT_THROW(backproject_optimized(mats, stack, g), ValidationError);
  stack[0] = Projection(15, 16, ProjectionKind::filtered);
  EXPECT_THROW(backproject_optimized(mats, stack, g), ShapeError);
}

TEST(SymmetricSlab, BandsAssembleTheFullVolume) {
  const CbctGeometry g = make_geometry(8, 12, 24, 6);
  const auto mats = build_projection_matrices(g);
  const auto stack = random_stack(g, 5);
  std::vector<Projection> transposed;
  for (const auto& p : stack) transposed.push_back(transpose_projection(p));
  const Volume full = backproject_optimized(mats, stack, g, 32);

  Volume assembled(g.n_x, g.n_y, g.n_z);
  OpCounter counter;
  for (int r = 0; r < 3; ++r) {
    SymmetricSlab slab(g, {2 * r, 2});
    slab.accumulate(mats, transposed, &counter);
    slab.scale(static_cast<float>(g.theta()));
    slab.write_into(assembled);
  }
  EXPECT_EQ(assembled.samples(), full.samples());
  EXPECT_EQ(counter.inner_products(), 3ull * 6 * 8 * 8 * (2 + 2));
}

TEST(SymmetricSlab, SliceMapping) {
  const CbctGeometry g = make_geometry(4, 8, 16, 2);
  const SymmetricSlab slab(g, {1, 2});
  EXPECT_EQ(slab.slice_at(0), 1);
  EXPECT_EQ(slab.slice_at(1), 2);
  EXPECT_EQ(slab.slice_at(2), 5);
  EXPECT_EQ(slab.slice_at(3), 6);
  EXPECT_EQ(slab.data().layout(), VolumeLayout::k_major);
  EXPECT_EQ(slab.data().n_z(), 4);
}

}  // namespace
}  // namespace cbct
