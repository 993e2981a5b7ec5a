// Copyright 2026 The cbct Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <vector>

#include "cbct/backprojection.hpp"
#include "cbct/geometry.hpp"
#include "cbct/projection.hpp"
#include "cbct/volume.hpp"

namespace cbct {

enum class Kernel { standard, optimized };

/// Throws ValidationError for anything but "standard" or "optimized".
Kernel parse_kernel(const std::string& name);
const char* to_string(Kernel kernel);

/// 256x256 detector, 360 views, 128^3 volume of 1 mm voxels.
CbctGeometry desk_geometry();

/// Factor taking the angle-scaled back-projection of filtered data to
/// attenuation units: d * D * d_u / 2.
double fdk_normalization(const CbctGeometry& geom);

struct ReconstructOptions {
  Kernel kernel = Kernel::optimized;
  int batch = 32;
  int threads = 0;
  bool normalize = true;
  OpCounter* counter = nullptr;
};

struct ReconstructTimes {
  double filter = 0.0;
  double backproject = 0.0;
};

/// Monolithic FDK. Raw projections are filtered first; filtered ones are
/// back-projected as they are. Returns an i-major volume.
Volume reconstruct(const CbctGeometry& geom, std::span<const Projection> stack, const ReconstructOptions& options = {},
                   ReconstructTimes* times = nullptr);

/// Exact inner-product counts of the two kernels.
std::uint64_t standard_op_count(const CbctGeometry& geom);
std::uint64_t optimized_op_count(const CbctGeometry& geom);

double rmse(const Volume& a, const Volume& b);
/// Zero-mean normalised cross-correlation.
double ncc(const Volume& a, const Volume& b);
/// s minimising |s*a - b|.
double best_fit_scale(const Volume& a, const Volume& b);

}  // namespace cbct
