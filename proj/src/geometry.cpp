// Copyright 2026 The cbct Authors
// SPDX-License-Identifier: Apache-2.0

#include "cbct/geometry.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "cbct/errors.hpp"

namespace cbct {

double CbctGeometry::theta() const { return 2.0 * std::numbers::pi / n_p; }

void CbctGeometry::validate() const {
  std::ostringstream bad;
  auto dim = [&](const char* name, int value) {
    if (value < 1) bad << ' ' << name << '=' << value << " (must be >= 1)";
  };
  auto pitch = [&](const char* name, double value) {
    if (!(value > 0.0) || !std::isfinite(value)) bad << ' ' << name << '=' << value << " (must be > 0)";
  };
  dim("n_u", n_u);
  dim("n_v", n_v);
  dim("n_p", n_p);
  dim("n_x", n_x);
  dim("n_y", n_y);
  dim("n_z", n_z);
  pitch("d_u", d_u);
  pitch("d_v", d_v);
  pitch("d_x", d_x);
  pitch("d_y", d_y);
  pitch("d_z", d_z);
  pitch("d", d);
  if (!(cap_d > d)) bad << " cap_d=" << cap_d << " (must exceed d=" << d << ')';
  if (!bad.str().empty()) throw GeometryError("invalid geometry:" + bad.str());
}

Matrix44 multiply(const Matrix44& a, const Matrix44& b) {
  Matrix44 out{};
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) {
      double acc = 0.0;
      for (int t = 0; t < 4; ++t) acc += a[r][t] * b[t][c];
      out[r][c] = acc;
    }
  return out;
}

Matrix44 volume_to_gantry(const CbctGeometry& g) {
  const Matrix44 scale{{{g.d_x, 0, 0, 0}, {0, g.d_y, 0, 0}, {0, 0, g.d_z, 0}, {0, 0, 0, 1}}};
  const Matrix44 center{{{1, 0, 0, -(g.n_x - 1) / 2.0},
                         {0, -1, 0, (g.n_y - 1) / 2.0},
                         {0, 0, -1, (g.n_z - 1) / 2.0},
                         {0, 0, 0, 1}}};
  return multiply(scale, center);
}

Matrix44 gantry_rotation(const CbctGeometry& g, double beta) {
  const Matrix44 swap_and_shift{{{1, 0, 0, 0}, {0, 0, -1, 0}, {0, 1, 0, g.d}, {0, 0, 0, 1}}};
  const double c = std::cos(beta);
  const double s = std::sin(beta);
  const Matrix44 rotate{{{c, -s, 0, 0}, {s, c, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}}};
  return multiply(swap_and_shift, rotate);
}

Matrix44 detector_projection(const CbctGeometry& g) {
  const Matrix44 to_pixels{{{1.0 / g.d_u, 0, 0, 0}, {0, 1.0 / g.d_v, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}}};
  const Matrix44 perspective{{{g.cap_d, 0, (g.n_u - 1) * g.d_u / 2.0, 0},
                              {0, g.cap_d, (g.n_v - 1) * g.d_v / 2.0, 0},
                              {0, 0, 1, 0},
                              {0, 0, 0, 1}}};
  return multiply(to_pixels, perspective);
}

ProjectionMatrix build_projection_matrix(const CbctGeometry& geom, int view_index) {
  if (view_index < 0 || view_index >= geom.n_p) {
    throw IndexError("view index " + std::to_string(view_index) + " outside [0, " +
                     std::to_string(geom.n_p) + ")");
  }
  ProjectionMatrix pm;
  pm.view_index = view_index;
  pm.beta = geom.beta(view_index);
  const Matrix44 full = multiply(detector_projection(geom),
                                 multiply(gantry_rotation(geom, pm.beta), volume_to_gantry(geom)));
  for (int r = 0; r < 3; ++r) pm.rows[r] = full[r];
  return pm;
}

std::vector<ProjectionMatrix> build_projection_matrices(const CbctGeometry& geom) {
  std::vector<ProjectionMatrix> out;
  out.reserve(geom.n_p);
  for (int s = 0; s < geom.n_p; ++s) out.push_back(build_projection_matrix(geom, s));
  return out;
}

DetectorPoint project_point(const ProjectionMatrix& p, double i, double j, double k) {
  auto row = [&](int r) {
    const auto& m = p.rows[r];
    return m[0] * i + m[1] * j + m[2] * k + m[3];
  };
  const double x = row(0);
  const double y = row(1);
  const double z = row(2);
  if (std::abs(z) < 1e-12) {
    throw GeometryError("degenerate projection: voxel lies in the source plane (z ~ 0)");
  }
  return {x / z, y / z, z};
}

double depth_z(const CbctGeometry& g, double beta, double i, double j) {
  return g.d + std::sin(beta) * (i - (g.n_x - 1) / 2.0) * g.d_x -
         std::cos(beta) * (j - (g.n_y - 1) / 2.0) * g.d_y;
}

Vec3 voxel_center(const CbctGeometry& g, double i, double j, double k) {
  return {(i - (g.n_x - 1) / 2.0) * g.d_x, -(j - (g.n_y - 1) / 2.0) * g.d_y,
          -(k - (g.n_z - 1) / 2.0) * g.d_z};
}

Vec3 source_position(const CbctGeometry& g, double beta) {
  return {-g.d * std::sin(beta), -g.d * std::cos(beta), 0.0};
}

Vec3 detector_position(const CbctGeometry& g, double beta, double u, double v) {
  // Gantry frame: lateral offset, then the detector plane sits cap_d - d
  // beyond the rotation axis. Undo the gantry rotation to reach the volume frame.
  const double lateral = (u - (g.n_u - 1) / 2.0) * g.d_u;
  const double along = g.cap_d - g.d;
  const double c = std::cos(beta);
  const double s = std::sin(beta);
  return {c * lateral + s * along, -s * lateral + c * along, -(v - (g.n_v - 1) / 2.0) * g.d_v};
}

}  // namespace cbct
