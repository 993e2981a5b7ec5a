// Copyright 2026 The cbct Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "cbct/geometry.hpp"
#include "cbct/projection.hpp"
#include "cbct/volume.hpp"

namespace cbct {

/// Ellipsoid in normalised phantom coordinates (multiply by the phantom's
/// half extent to get millimetres). Rotation is about the z-axis only.
struct Ellipsoid {
  Vec3 center{};
  Vec3 semi_axes{1.0, 1.0, 1.0};
  double rotation_deg = 0.0;
  double density = 0.0;

  /// Point given in normalised coordinates.
  bool contains(const Vec3& p) const;
};

struct Phantom {
  std::vector<Ellipsoid> ellipsoids;
  double half_extent = 1.0;  ///< mm per normalised unit

  /// Sum of densities of every ellipsoid containing the point (mm).
  double density_at(const Vec3& point_mm) const;

  /// Same phantom scaled so its unit cube spans `fill` of the smallest
  /// half-extent of the reconstruction volume.
  Phantom fitted_to(const CbctGeometry& geom, double fill = 0.9) const;
};

/// Ten-ellipsoid 3D Shepp-Logan table (Kak & Slaney), unit half extent.
Phantom shepp_logan_3d();

/// Length (mm) of the segment of the ray origin + t*dir inside the
/// ellipsoid, with origin in mm and dir a unit vector.
double chord_length(const Ellipsoid& e, double half_extent, const Vec3& origin, const Vec3& dir);

/// i-major voxelisation: each voxel holds density_at(voxel centre).
/// Throws ValidationError for an empty phantom.
Volume sample_volume(const Phantom& phantom, const CbctGeometry& geom);

/// Line integrals along source-to-pixel-centre rays for one view.
Projection forward_project(const Phantom& phantom, const CbctGeometry& geom, int view_index);

}  // namespace cbct
