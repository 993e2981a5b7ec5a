// Copyright 2026 The cbct Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>
#include <span>
#include <vector>

#include "cbct/geometry.hpp"
#include "cbct/projection.hpp"
#include "cbct/volume.hpp"

namespace cbct {

/// Number of 1x4 inner products evaluated for projection arithmetic.
class OpCounter {
 public:
  void add(std::uint64_t n) noexcept { inner_products_.fetch_add(n, std::memory_order_relaxed); }
  std::uint64_t inner_products() const noexcept { return inner_products_.load(std::memory_order_relaxed); }
  void reset() noexcept { inner_products_.store(0, std::memory_order_relaxed); }

 private:
  std::atomic<std::uint64_t> inner_products_{0};
};

/// Bilinear sample of `x` at column coordinate `a` and row coordinate `b`.
/// Coordinates outside the closed sample grid [0, width-1] x [0, height-1]
/// yield 0.
inline float interp2(const Projection& x, float a, float b) {
  const int w = x.width();
  const int h = x.height();
  if (!(a >= 0.0f && b >= 0.0f && a <= static_cast<float>(w - 1) && b <= static_cast<float>(h - 1))) {
    return 0.0f;
  }
  const int ia = static_cast<int>(a);
  const int ib = static_cast<int>(b);
  // On the last column/row the far neighbour has weight zero.
  const int ia1 = ia + 1 < w ? ia + 1 : ia;
  const int ib1 = ib + 1 < h ? ib + 1 : ib;
  const float da = a - static_cast<float>(ia);
  const float db = b - static_cast<float>(ib);
  const float* row0 = x.data() + static_cast<std::size_t>(ib) * w;
  const float* row1 = x.data() + static_cast<std::size_t>(ib1) * w;
  const float t1 = row0[ia] * (1.0f - da) + row0[ia1] * da;
  const float t2 = row1[ia] * (1.0f - da) + row1[ia1] * da;
  return t1 * (1.0f - db) + t2 * db;
}

/// Swaps rows and columns. filtered <-> transposed_filtered; raw input is
/// rejected with ValidationError.
Projection transpose_projection(const Projection& q);

Volume reshape_volume(const Volume& v, VolumeLayout target);

/// Reference voxel-driven back-projection: three inner products per voxel
/// per view, i-major output scaled by the angle step. Serial by intent.
Volume backproject_standard(std::span<const ProjectionMatrix> mats, std::span<const Projection> projs,
                            const CbctGeometry& geom, OpCounter* counter = nullptr);

/// Symmetric back-projection. Per (column, view) two inner products give
/// u and the depth; the k loop runs over half the column, one inner product
/// per k, and each v is mirrored to the opposite slice. Projections are
/// transposed `batch` at a time; columns are split across OpenMP threads
/// (`threads` <= 0 uses the OpenMP default). Requires even n_z.
Volume backproject_optimized(std::span<const ProjectionMatrix> mats, std::span<const Projection> projs,
                             const CbctGeometry& geom, int batch = 32, OpCounter* counter = nullptr,
                             int threads = 0);

/// A pair of mirrored z-bands: k in [k_begin, k_begin + half_height) and
/// its reflection n_z - 1 - k.
struct SlabBand {
  int k_begin = 0;
  int half_height = 0;

  bool operator==(const SlabBand&) const = default;
};

/// Accumulator for the symmetric kernel over one SlabBand. Storage is a
/// k-major n_x * n_y * (2 * half_height) volume whose column position p maps
/// to slice k_begin + p for the lower band and n_z - k_begin - 2h + p for the
/// upper band; for the full band this is exactly the k-major volume.
class SymmetricSlab {
 public:
  SymmetricSlab(const CbctGeometry& geom, SlabBand band);

  /// Adds unscaled contributions of transposed-filtered projections.
  void accumulate(std::span<const ProjectionMatrix> mats, std::span<const Projection> transposed,
                  OpCounter* counter = nullptr, int threads = 0);

  void scale(float factor);

  /// Absolute slice index stored at column position p.
  int slice_at(int p) const;

  /// Copies this band into an i-major volume of the full geometry.
  void write_into(Volume& volume) const;

  const CbctGeometry& geometry() const noexcept { return geom_; }
  SlabBand band() const noexcept { return band_; }
  Volume& data() noexcept { return data_; }
  const Volume& data() const noexcept { return data_; }

 private:
  CbctGeometry geom_;
  SlabBand band_;
  Volume data_;
};

}  // namespace cbct
