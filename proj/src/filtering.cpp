// Copyright 2026 The cbct Authors
// SPDX-License-Identifier: Apache-2.0

#include "cbct/filtering.hpp"

#include <fftw3.h>
#include <omp.h>

#include <bit>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <string>

#include "cbct/errors.hpp"

namespace cbct {
namespace {

// FFTW planning is not thread-safe; execution with new-array functions is.
std::mutex& planner_mutex() {
  static std::mutex mu;
  return mu;
}

using Complex = std::complex<double>;

}  // namespace

CosineTable cosine_table(const CbctGeometry& g) {
  g.validate();
  CosineTable t;
  t.width = g.n_u;
  t.height = g.n_v;
  t.weights.resize(g.pixel_count());
  const double cu = (g.n_u - 1) / 2.0;
  const double cv = (g.n_v - 1) / 2.0;
  for (int v = 0; v < g.n_v; ++v) {
    const double vh = (v - cv) * g.d_v;
    for (int u = 0; u < g.n_u; ++u) {
      const double uh = (u - cu) * g.d_u;
      t.weights[static_cast<std::size_t>(v) * g.n_u + u] =
          static_cast<float>(g.cap_d / std::sqrt(g.cap_d * g.cap_d + uh * uh + vh * vh));
    }
  }
  return t;
}

RampKernel RampKernel::identity() {
  RampKernel k;
  k.half_width = 0;
  k.spacing = 1.0;
  k.taps = {1.0};
  return k;
}

RampKernel ramp_kernel(const CbctGeometry& g, int half_width, const TapWindow& window) {
  if (half_width < g.n_u - 1) {
    throw ValidationError("ramp half width " + std::to_string(half_width) +
                          " must be at least n_u - 1 = " + std::to_string(g.n_u - 1));
  }
  RampKernel k;
  k.half_width = half_width;
  k.spacing = g.d_u;
  k.taps.assign(2 * static_cast<std::size_t>(half_width) + 1, 0.0);
  const double inv_pitch2 = 1.0 / (g.d_u * g.d_u);
  for (int n = -half_width; n <= half_width; ++n) {
    double h = 0.0;
    if (n == 0) {
      h = 0.25 * inv_pitch2;
    } else if (n % 2 != 0) {
      h = -inv_pitch2 / (std::numbers::pi * std::numbers::pi * static_cast<double>(n) * n);
    }
    if (window) h *= window(n, half_width);
    k.taps[static_cast<std::size_t>(n + half_width)] = h;
  }
  return k;
}

struct RowConvolver::Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  std::vector<Complex> kernel_spectrum;

  ~Plans() {
    std::lock_guard lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
  }
};

RowConvolver::RowConvolver(int row_length, RampKernel kernel)
    : row_length_(row_length), kernel_(std::move(kernel)), plans_(std::make_unique<Plans>()) {
  if (row_length_ < 1) throw ShapeError("row length must be >= 1");
  const std::size_t full = static_cast<std::size_t>(row_length_) + kernel_.length() - 1;
  padded_ = static_cast<int>(std::bit_ceil(full));
  const std::size_t bins = static_cast<std::size_t>(padded_) / 2 + 1;

  std::vector<double> real(padded_, 0.0);
  std::vector<Complex> spec(bins);
  {
    std::lock_guard lock(planner_mutex());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    plans_->forward = fftw_plan_dft_r2c_1d(padded_, real.data(),
                                           reinterpret_cast<fftw_complex*>(spec.data()), flags);
    plans_->backward = fftw_plan_dft_c2r_1d(padded_, reinterpret_cast<fftw_complex*>(spec.data()),
                                            real.data(), flags);
  }
  std::copy(kernel_.taps.begin(), kernel_.taps.end(), real.begin());
  fftw_execute_dft_r2c(plans_->forward, real.data(), reinterpret_cast<fftw_complex*>(spec.data()));
  // Fold the 1/N of the unnormalised inverse transform into the kernel.
  for (auto& c : spec) c /= static_cast<double>(padded_);
  plans_->kernel_spectrum = std::move(spec);
}

RowConvolver::~RowConvolver() = default;
RowConvolver::RowConvolver(RowConvolver&&) noexcept = default;
RowConvolver& RowConvolver::operator=(RowConvolver&&) noexcept = default;

void RowConvolver::apply(std::span<const float> in, std::span<float> out) const {
  if (in.size() != static_cast<std::size_t>(row_length_) || out.size() != in.size()) {
    throw ShapeError("row length " + std::to_string(in.size()) + " does not match convolver length " +
                     std::to_string(row_length_));
  }
  std::vector<double> real(padded_, 0.0);
  std::vector<Complex> spec(static_cast<std::size_t>(padded_) / 2 + 1);
  std::copy(in.begin(), in.end(), real.begin());
  fftw_execute_dft_r2c(plans_->forward, real.data(), reinterpret_cast<fftw_complex*>(spec.data()));
  for (std::size_t b = 0; b < spec.size(); ++b) spec[b] *= plans_->kernel_spectrum[b];
  fftw_execute_dft_c2r(plans_->backward, reinterpret_cast<fftw_complex*>(spec.data()), real.data());
  // Full linear convolution index m + half_width is output sample m.
  const std::size_t offset = static_cast<std::size_t>(kernel_.half_width);
  for (std::size_t m = 0; m < out.size(); ++m) out[m] = static_cast<float>(real[m + offset]);
}

std::vector<float> fft_convolve_row(std::span<const float> row, const RampKernel& kernel) {
  if (row.empty()) return {};
  RowConvolver conv(static_cast<int>(row.size()), kernel);
  std::vector<float> out(row.size());
  conv.apply(row, out);
  return out;
}

namespace {

Projection filter_with(const Projection& e, const CosineTable& cos_tab, const RowConvolver& conv) {
  if (e.kind() != ProjectionKind::raw) {
    throw ValidationError(std::string("filtering expects a raw projection, got ") + to_string(e.kind()));
  }
  if (e.width() != cos_tab.width || e.height() != cos_tab.height || e.width() != conv.row_length()) {
    throw ShapeError("projection " + std::to_string(e.width()) + "x" + std::to_string(e.height()) +
                     " does not match cosine table " + std::to_string(cos_tab.width) + "x" +
                     std::to_string(cos_tab.height));
  }
  Projection q(e.width(), e.height(), ProjectionKind::filtered);
  std::vector<float> weighted(e.width());
  for (int v = 0; v < e.height(); ++v) {
    const auto src = e.row(v);
    for (int u = 0; u < e.width(); ++u) weighted[u] = src[u] * cos_tab.at(u, v);
    conv.apply(weighted, q.row(v));
  }
  return q;
}

}  // namespace

Projection filter_projection(const Projection& e, const CosineTable& cos_tab, const RampKernel& ramp) {
  RowConvolver conv(e.width(), ramp);
  return filter_with(e, cos_tab, conv);
}

ProjectionFilter::ProjectionFilter(const CbctGeometry& geom)
    : ProjectionFilter(cosine_table(geom), ramp_kernel(geom, geom.n_u - 1)) {}

ProjectionFilter::ProjectionFilter(CosineTable cos_tab, RampKernel ramp)
    : cos_tab_(std::move(cos_tab)), convolver_(cos_tab_.width, std::move(ramp)) {}

Projection ProjectionFilter::operator()(const Projection& raw) const {
  return filter_with(raw, cos_tab_, convolver_);
}

std::vector<Projection> filter_stack(const CbctGeometry& geom, std::span<const Projection> raw, int threads) {
  const ProjectionFilter filter(geom);
  std::vector<Projection> out(raw.size());
  const int n = static_cast<int>(raw.size());
  const int nt = threads > 0 ? threads : omp_get_max_threads();
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic) num_threads(nt)
  for (int s = 0; s < n; ++s) {
    try {
      out[s] = filter(raw[s]);
    } catch (...) {
#pragma omp critical(cbct_filter_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace cbct
