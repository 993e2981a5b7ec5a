// Copyright 2026 The cbct Authors
// SPDX-License-Identifier: Apache-2.0

#include "cbct/fdk.hpp"

#include <chrono>
#include <cmath>

#include "cbct/errors.hpp"
#include "cbct/filtering.hpp"

namespace cbct {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void check_same(const Volume& a, const Volume& b) {
  if (!a.same_shape(b) || a.layout() != b.layout()) {
    throw ShapeError("volumes differ in shape or layout");
  }
  if (a.size() == 0) throw ShapeError("empty volume");
}

}  // namespace

Kernel parse_kernel(const std::string& name) {
  if (name == "standard") return Kernel::standard;
  if (name == "optimized") return Kernel::optimized;
  throw ValidationError("unknown kernel '" + name + "' (expected standard or optimized)");
}

const char* to_string(Kernel kernel) { return kernel == Kernel::standard ? "standard" : "optimized"; }

CbctGeometry desk_geometry() {
  CbctGeometry g;
  g.n_u = 256;
  g.n_v = 256;
  g.d_u = 1.2;
  g.d_v = 1.2;
  g.n_p = 360;
  g.n_x = 128;
  g.n_y = 128;
  g.n_z = 128;
  g.d_x = 1.0;
  g.d_y = 1.0;
  g.d_z = 1.0;
  g.d = 500.0;
  g.cap_d = 1000.0;
  return g;
}

double fdk_normalization(const CbctGeometry& geom) { return geom.d * geom.cap_d * geom.d_u / 2.0; }

Volume reconstruct(const CbctGeometry& geom, std::span<const Projection> stack, const ReconstructOptions& options,
                   ReconstructTimes* times) {
  geom.validate();
  if (stack.empty()) throw ShapeError("no projections");
  ReconstructTimes local;

  std::vector<Projection> filtered;
  std::span<const Projection> input = stack;
  if (stack.front().kind() == ProjectionKind::raw) {
    const auto t0 = Clock::now();
    filtered = filter_stack(geom, stack, options.threads);
    local.filter = seconds_since(t0);
    input = filtered;
  }

  const auto mats = build_projection_matrices(geom);
  const auto t0 = Clock::now();
  Volume vol = options.kernel == Kernel::standard
                   ? backproject_standard(mats, input, geom, options.counter)
                   : backproject_optimized(mats, input, geom, options.batch, options.counter, options.threads);
  local.backproject = seconds_since(t0);

  if (options.normalize) {
    const float s = static_cast<float>(fdk_normalization(geom));
    for (float& x : vol.samples()) x *= s;
  }
  if (times) *times = local;
  return vol;
}

std::uint64_t standard_op_count(const CbctGeometry& g) {
  return 3ull * static_cast<std::uint64_t>(g.n_p) * g.n_x * g.n_y * g.n_z;
}

std::uint64_t optimized_op_count(const CbctGeometry& g) {
  return static_cast<std::uint64_t>(g.n_p) * g.n_x * g.n_y * (2ull + static_cast<std::uint64_t>(g.n_z) / 2);
}

double rmse(const Volume& a, const Volume& b) {
  check_same(a, b);
  double sum = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) {
    const double e = static_cast<double>(a.samples()[n]) - b.samples()[n];
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(a.size()));
}

double ncc(const Volume& a, const Volume& b) {
  check_same(a, b);
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a.samples()[i];
    mb += b.samples()[i];
  }
  ma /= n;
  mb /= n;
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a.samples()[i] - ma;
    const double y = b.samples()[i] - mb;
    ab += x * y;
    aa += x * x;
    bb += y * y;
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return ab / std::sqrt(aa * bb);
}

double best_fit_scale(const Volume& a, const Volume& b) {
  check_same(a, b);
  double ab = 0.0, aa = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += static_cast<double>(a.samples()[i]) * b.samples()[i];
    aa += static_cast<double>(a.samples()[i]) * a.samples()[i];
  }
  return aa == 0.0 ? 0.0 : ab / aa;
}

}  // namespace cbct
