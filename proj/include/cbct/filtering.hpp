// Copyright 2026 The cbct Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "cbct/geometry.hpp"
#include "cbct/projection.hpp"

namespace cbct {

/// Per-pixel obliquity weights D / sqrt(D^2 + u^2 + v^2), u and v measured
/// in mm from the detector centre.
struct CosineTable {
  int width = 0;
  int height = 0;
  std::vector<float> weights;  ///< row-major, height x width

  float at(int u, int v) const { return weights[static_cast<std::size_t>(v) * width + u]; }
};

CosineTable cosine_table(const CbctGeometry& geom);

/// Optional apodisation applied to the spatial taps, called as
/// window(n, half_width) and multiplied into tap n.
using TapWindow = std::function<double(int n, int half_width)>;

/// Centred odd-length spatial ramp filter, taps h[-half_width..half_width].
struct RampKernel {
  int half_width = 0;
  double spacing = 1.0;       ///< mm between taps (detector pitch d_u)
  std::vector<double> taps;   ///< taps[n + half_width] == h[n]

  double tap(int n) const { return taps[static_cast<std::size_t>(n + half_width)]; }
  std::size_t length() const { return taps.size(); }

  static RampKernel identity();
};

/// Ram-Lak taps: h[0] = 1/(4 d_u^2), h[odd n] = -1/(pi^2 n^2 d_u^2), 0 otherwise.
/// Throws ValidationError if half_width < n_u - 1.
RampKernel ramp_kernel(const CbctGeometry& geom, int half_width, const TapWindow& window = {});

/// Linear convolution of rows of a fixed length with one kernel, evaluated
/// by zero-padded FFT. Safe to share between threads once constructed.
class RowConvolver {
 public:
  RowConvolver(int row_length, RampKernel kernel);
  ~RowConvolver();
  RowConvolver(RowConvolver&&) noexcept;
  RowConvolver& operator=(RowConvolver&&) noexcept;

  int row_length() const noexcept { return row_length_; }
  int padded_length() const noexcept { return padded_; }
  const RampKernel& kernel() const noexcept { return kernel_; }

  /// out[m] = sum_n h[n] * in[m - n]; in and out may alias.
  void apply(std::span<const float> in, std::span<float> out) const;

 private:
  struct Plans;
  int row_length_ = 0;
  int padded_ = 0;
  RampKernel kernel_;
  std::unique_ptr<Plans> plans_;
};

std::vector<float> fft_convolve_row(std::span<const float> row, const RampKernel& kernel);

/// Cosine weighting followed by per-row ramp convolution. Requires a raw
/// projection matching the table; throws ShapeError otherwise.
Projection filter_projection(const Projection& e, const CosineTable& cos_tab, const RampKernel& ramp);

/// Reusable filter for one geometry: table and FFT plans are built once.
class ProjectionFilter {
 public:
  explicit ProjectionFilter(const CbctGeometry& geom);
  ProjectionFilter(CosineTable cos_tab, RampKernel ramp);

  Projection operator()(const Projection& raw) const;

  const CosineTable& table() const noexcept { return cos_tab_; }
  const RampKernel& ramp() const noexcept { return convolver_.kernel(); }

 private:
  CosineTable cos_tab_;
  RowConvolver convolver_;
};

/// Filters a whole stack, projections distributed over OpenMP threads.
std::vector<Projection> filter_stack(const CbctGeometry& geom, std::span<const Projection> raw,
                                     int threads = 0);

}  // namespace cbct
