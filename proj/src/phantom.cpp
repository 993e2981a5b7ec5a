// Copyright 2026 The cbct Authors
// SPDX-License-Identifier: Apache-2.0

#include "cbct/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cbct/errors.hpp"

namespace cbct {
namespace {

struct Frame {
  double c;
  double s;
};

Frame rotation_of(const Ellipsoid& e) {
  const double rad = e.rotation_deg * std::numbers::pi / 180.0;
  return {std::cos(rad), std::sin(rad)};
}

// Translate into the ellipsoid frame and undo its z-rotation.
Vec3 to_local(const Ellipsoid& e, const Frame& f, const Vec3& p) {
  const double x = p[0] - e.center[0];
  const double y = p[1] - e.center[1];
  return {x * f.c + y * f.s, -x * f.s + y * f.c, p[2] - e.center[2]};
}

}  // namespace

bool Ellipsoid::contains(const Vec3& p) const {
  const Vec3 q = to_local(*this, rotation_of(*this), p);
  double r = 0.0;
  for (int a = 0; a < 3; ++a) r += (q[a] / semi_axes[a]) * (q[a] / semi_axes[a]);
  return r <= 1.0;
}

double Phantom::density_at(const Vec3& point_mm) const {
  const Vec3 p{point_mm[0] / half_extent, point_mm[1] / half_extent, point_mm[2] / half_extent};
  double total = 0.0;
  for (const auto& e : ellipsoids)
    if (e.contains(p)) total += e.density;
  return total;
}

Phantom Phantom::fitted_to(const CbctGeometry& g, double fill) const {
  Phantom out = *this;
  out.half_extent = fill * std::min({g.n_x * g.d_x, g.n_y * g.d_y, g.n_z * g.d_z}) / 2.0;
  return out;
}

Phantom shepp_logan_3d() {
  // center, semi-axes, rotation about z (degrees), density
  Phantom ph;
  ph.ellipsoids = {
      {{0.0, 0.0, 0.0}, {0.69, 0.92, 0.90}, 0.0, 2.0},
      {{0.0, 0.0, 0.0}, {0.6624, 0.874, 0.88}, 0.0, -0.98},
      {{-0.22, 0.0, -0.25}, {0.41, 0.16, 0.21}, 108.0, -0.02},
      {{0.22, 0.0, -0.25}, {0.31, 0.11, 0.22}, 72.0, -0.02},
      {{0.0, 0.35, -0.25}, {0.21, 0.25, 0.50}, 0.0, 0.02},
      {{0.0, 0.1, -0.25}, {0.046, 0.046, 0.046}, 0.0, 0.02},
      {{-0.08, -0.65, -0.25}, {0.046, 0.023, 0.02}, 0.0, 0.01},
      {{0.06, -0.65, -0.25}, {0.046, 0.023, 0.02}, 90.0, 0.01},
      {{0.06, -0.105, 0.625}, {0.056, 0.04, 0.1}, 90.0, 0.02},
      {{0.0, 0.1, 0.625}, {0.056, 0.056, 0.1}, 0.0, -0.02},
  };
  ph.half_extent = 1.0;
  return ph;
}

double chord_length(const Ellipsoid& e, double half_extent, const Vec3& origin, const Vec3& dir) {
  const Frame f = rotation_of(e);
  const Vec3 o = to_local(e, f, {origin[0] / half_extent, origin[1] / half_extent, origin[2] / half_extent});
  // Directions only rotate; no translation.
  const Vec3 dl{(dir[0] * f.c + dir[1] * f.s) / half_extent, (-dir[0] * f.s + dir[1] * f.c) / half_extent,
                dir[2] / half_extent};
  double a = 0.0, b = 0.0, c = -1.0;
  for (int k = 0; k < 3; ++k) {
    const double on = o[k] / e.semi_axes[k];
    const double dn = dl[k] / e.semi_axes[k];
    a += dn * dn;
    b += 2.0 * on * dn;
    c += on * on;
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc <= 0.0) return 0.0;
  return std::sqrt(disc) / a;
}

Volume sample_volume(const Phantom& phantom, const CbctGeometry& geom) {
  if (phantom.ellipsoids.empty()) throw ValidationError("phantom has no ellipsoids");
  geom.validate();
  Volume vol(geom.n_x, geom.n_y, geom.n_z, VolumeLayout::i_major);
#pragma omp parallel for schedule(static)
  for (int k = 0; k < geom.n_z; ++k)
    for (int j = 0; j < geom.n_y; ++j)
      for (int i = 0; i < geom.n_x; ++i)
        vol.at(i, j, k) = static_cast<float>(phantom.density_at(voxel_center(geom, i, j, k)));
  return vol;
}

Projection forward_project(const Phantom& phantom, const CbctGeometry& geom, int view_index) {
  geom.validate();
  if (view_index < 0 || view_index >= geom.n_p) {
    throw IndexError("view index " + std::to_string(view_index) + " outside [0, " +
                     std::to_string(geom.n_p) + ")");
  }
  const double beta = geom.beta(view_index);
  const Vec3 src = source_position(geom, beta);
  Projection proj(geom.n_u, geom.n_v, ProjectionKind::raw);
#pragma omp parallel for schedule(static)
  for (int v = 0; v < geom.n_v; ++v) {
    for (int u = 0; u < geom.n_u; ++u) {
      const Vec3 pix = detector_position(geom, beta, u, v);
      Vec3 dir{pix[0] - src[0], pix[1] - src[1], pix[2] - src[2]};
      const double len = std::sqrt(dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]);
      for (double& c : dir) c /= len;
      double total = 0.0;
      for (const auto& e : phantom.ellipsoids)
        total += e.density * chord_length(e, phantom.half_extent, src, dir);
      proj.at(u, v) = static_cast<float>(total);
    }
  }
  return proj;
}

}  // namespace cbct
