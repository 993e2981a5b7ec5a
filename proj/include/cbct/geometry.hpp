// Copyright 2026 The cbct Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <vector>

namespace cbct {

using Vec3 = std::array<double, 3>;

/// Circular cone-beam scan. Lengths are millimetres, pitches mm per
/// pixel/voxel. The detector is centred on the central ray and untilted.
struct CbctGeometry {
  int n_u = 0;  ///< detector width (pixels)
  int n_v = 0;  ///< detector height (pixels)
  double d_u = 0.0;
  double d_v = 0.0;
  int n_p = 0;  ///< views over a full circle
  int n_x = 0;
  int n_y = 0;
  int n_z = 0;
  double d_x = 0.0;
  double d_y = 0.0;
  double d_z = 0.0;
  double d = 0.0;      ///< source to rotation axis
  double cap_d = 0.0;  ///< source to detector

  /// Angular step between consecutive views, 2*pi/n_p.
  double theta() const;
  double beta(int view_index) const { return view_index * theta(); }

  /// Throws GeometryError unless all dimensions are >= 1, all pitches are
  /// positive and cap_d > d > 0.
  void validate() const;

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(n_x) * n_y * n_z;
  }
  std::size_t pixel_count() const { return static_cast<std::size_t>(n_u) * n_v; }

  bool operator==(const CbctGeometry&) const = default;
};

using Matrix34 = std::array<std::array<double, 4>, 3>;
using Matrix44 = std::array<std::array<double, 4>, 4>;

/// Maps homogeneous voxel indices [i, j, k, 1] to projective detector
/// coordinates [x, y, z] for one view.
struct ProjectionMatrix {
  Matrix34 rows{};
  double beta = 0.0;
  int view_index = 0;
};

struct DetectorPoint {
  double u = 0.0;
  double v = 0.0;
  double z = 0.0;  ///< projective depth (mm)
};

/// The three factors whose product gives the projection matrix:
/// volume index -> volume mm, gantry rotation plus source offset, and
/// perspective onto the detector in pixel units.
Matrix44 volume_to_gantry(const CbctGeometry& geom);
Matrix44 gantry_rotation(const CbctGeometry& geom, double beta);
Matrix44 detector_projection(const CbctGeometry& geom);

Matrix44 multiply(const Matrix44& a, const Matrix44& b);

/// Top three rows of detector_projection * gantry_rotation * volume_to_gantry.
/// Throws IndexError for view_index outside [0, n_p).
ProjectionMatrix build_projection_matrix(const CbctGeometry& geom, int view_index);

std::vector<ProjectionMatrix> build_projection_matrices(const CbctGeometry& geom);

/// Indices may be fractional (e.g. the rotation centre for even sizes).
/// Throws GeometryError if |z| < 1e-12.
DetectorPoint project_point(const ProjectionMatrix& p, double i, double j, double k);

/// Closed-form depth of column (i, j) at angle beta; independent of k.
double depth_z(const CbctGeometry& geom, double beta, double i, double j);

/// Physical position (mm) of voxel (i, j, k) in the volume frame, the frame
/// in which phantoms are defined and the gantry rotates.
Vec3 voxel_center(const CbctGeometry& geom, double i, double j, double k);

/// X-ray source position at angle beta, in the volume frame.
Vec3 source_position(const CbctGeometry& geom, double beta);

/// Position of detector coordinate (u, v) at angle beta, in the volume frame.
Vec3 detector_position(const CbctGeometry& geom, double beta, double u, double v);

}  // namespace cbct
