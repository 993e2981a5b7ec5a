// Copyright 2026 The cbct Authors
// SPDX-License-Identifier: Apache-2.0

#include "cbct/backprojection.hpp"

#include <omp.h>

#include <string>

#include "cbct/errors.hpp"

namespace cbct {
namespace {

struct FloatMatrix {
  float m[3][4];
};

FloatMatrix to_float(const ProjectionMatrix& p) {
  FloatMatrix f{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) f.m[r][c] = static_cast<float>(p.rows[r][c]);
  return f;
}

std::vector<FloatMatrix> to_float(std::span<const ProjectionMatrix> mats) {
  std::vector<FloatMatrix> out;
  out.reserve(mats.size());
  for (const auto& p : mats) out.push_back(to_float(p));
  return out;
}

int resolve_threads(int threads) { return threads > 0 ? threads : omp_get_max_threads(); }

void check_stack(std::span<const ProjectionMatrix> mats, std::span<const Projection> projs, int width,
                 int height, ProjectionKind kind) {
  if (mats.size() != projs.size()) {
    throw ShapeError("got " + std::to_string(mats.size()) + " projection matrices for " +
                     std::to_string(projs.size()) + " projections");
  }
  for (std::size_t s = 0; s < projs.size(); ++s) {
    if (projs[s].kind() != kind) {
      throw ValidationError("projection " + std::to_string(s) + " is " + to_string(projs[s].kind()) +
                            ", expected " + to_string(kind));
    }
    if (projs[s].width() != width || projs[s].height() != height) {
      throw ShapeError("projection " + std::to_string(s) + " is " + std::to_string(projs[s].width()) + "x" +
                       std::to_string(projs[s].height()) + ", expected " + std::to_string(width) + "x" +
                       std::to_string(height));
    }
  }
}

}  // namespace

Projection transpose_projection(const Projection& q) {
  ProjectionKind kind;
  switch (q.kind()) {
    case ProjectionKind::filtered:
      kind = ProjectionKind::transposed_filtered;
      break;
    case ProjectionKind::transposed_filtered:
      kind = ProjectionKind::filtered;
      break;
    default:
      throw ValidationError("only filtered projections are transposed");
  }
  Projection t(q.height(), q.width(), kind);
  for (int r = 0; r < q.height(); ++r)
    for (int c = 0; c < q.width(); ++c) t.at(r, c) = q.at(c, r);
  return t;
}

Volume reshape_volume(const Volume& v, VolumeLayout target) {
  if (v.layout() == target) return v;
  Volume out(v.n_x(), v.n_y(), v.n_z(), target);
  const auto& src = v.samples();
  auto& dst = out.samples();
#pragma omp parallel for schedule(static)
  for (int k = 0; k < v.n_z(); ++k)
    for (int j = 0; j < v.n_y(); ++j)
      for (int i = 0; i < v.n_x(); ++i) dst[out.index(i, j, k)] = src[v.index(i, j, k)];
  return out;
}

Volume backproject_standard(std::span<const ProjectionMatrix> mats, std::span<const Projection> projs,
                            const CbctGeometry& geom, OpCounter* counter) {
  geom.validate();
  check_stack(mats, projs, geom.n_u, geom.n_v, ProjectionKind::filtered);
  Volume vol(geom.n_x, geom.n_y, geom.n_z, VolumeLayout::i_major);
  float* out = vol.samples().data();
  std::uint64_t count = 0;

  for (std::size_t s = 0; s < projs.size(); ++s) {
    const FloatMatrix p = to_float(mats[s]);
    const Projection& q = projs[s];
    std::size_t idx = 0;
    for (int k = 0; k < geom.n_z; ++k) {
      for (int j = 0; j < geom.n_y; ++j) {
        for (int i = 0; i < geom.n_x; ++i, ++idx) {
          const float fi = static_cast<float>(i);
          const float fj = static_cast<float>(j);
          const float fk = static_cast<float>(k);
          const float x = p.m[0][0] * fi + p.m[0][1] * fj + p.m[0][2] * fk + p.m[0][3];
          const float y = p.m[1][0] * fi + p.m[1][1] * fj + p.m[1][2] * fk + p.m[1][3];
          const float z = p.m[2][0] * fi + p.m[2][1] * fj + p.m[2][2] * fk + p.m[2][3];
          count += 3;
          const float f = 1.0f / z;
          const float w_dis = f * f;
          out[idx] += w_dis * interp2(q, x * f, y * f);
        }
      }
    }
  }

  const float theta = static_cast<float>(geom.theta());
  for (float& value : vol.samples()) value *= theta;
  if (counter) counter->add(count);
  return vol;
}

SymmetricSlab::SymmetricSlab(const CbctGeometry& geom, SlabBand band) : geom_(geom), band_(band) {
  geom_.validate();
  if (geom_.n_z % 2 != 0) {
    throw ShapeError("symmetric back-projection needs an even n_z, got " + std::to_string(geom_.n_z));
  }
  if (band_.half_height < 1 || band_.k_begin < 0 || band_.k_begin + band_.half_height > geom_.n_z / 2) {
    throw ShapeError("slab band [" + std::to_string(band_.k_begin) + ", " +
                     std::to_string(band_.k_begin + band_.half_height) + ") is not inside [0, n_z/2 = " +
                     std::to_string(geom_.n_z / 2) + ")");
  }
  data_ = Volume(geom_.n_x, geom_.n_y, 2 * band_.half_height, VolumeLayout::k_major);
}

int SymmetricSlab::slice_at(int p) const {
  const int h = band_.half_height;
  return p < h ? band_.k_begin + p : geom_.n_z - band_.k_begin - 2 * h + p;
}

void SymmetricSlab::accumulate(std::span<const ProjectionMatrix> mats, std::span<const Projection> transposed,
                               OpCounter* counter, int threads) {
  check_stack(mats, transposed, geom_.n_v, geom_.n_u, ProjectionKind::transposed_filtered);
  const std::vector<FloatMatrix> pm = to_float(mats);
  const int n_x = geom_.n_x;
  const int n_y = geom_.n_y;
  const int half = band_.half_height;
  const int depth = 2 * half;
  const int k0 = band_.k_begin;
  const int n_u = geom_.n_u;
  const int n_v = geom_.n_v;
  const float v_mirror = static_cast<float>(n_v - 1);
  const float u_max = static_cast<float>(n_u - 1);
  const long columns = static_cast<long>(n_x) * n_y;
  const std::size_t views = transposed.size();
  float* out = data_.samples().data();
  std::uint64_t count = 0;

#pragma omp parallel for schedule(static) reduction(+ : count) num_threads(resolve_threads(threads))
  for (long col = 0; col < columns; ++col) {
    const int j = static_cast<int>(col / n_x);
    const int i = static_cast<int>(col % n_x);
    const float fi = static_cast<float>(i);
    const float fj = static_cast<float>(j);
    float* column = out + (static_cast<std::size_t>(i) * n_y + j) * depth;
    for (std::size_t s = 0; s < views; ++s) {
      const FloatMatrix& p = pm[s];
      const Projection& qt = transposed[s];
      // u and z are constant along the column.
      const float x = p.m[0][0] * fi + p.m[0][1] * fj + p.m[0][3];
      const float z = p.m[2][0] * fi + p.m[2][1] * fj + p.m[2][3];
      count += 2;
      const float f = 1.0f / z;
      const float u = x * f;
      const float w_dis = f * f;
      count += static_cast<std::uint64_t>(half);
      // Same arithmetic as interp2 with the u-dependent part hoisted; a
      // column that misses the detector contributes nothing.
      if (!(u >= 0.0f && u <= u_max)) continue;
      const int ib = static_cast<int>(u);
      const int ib1 = ib + 1 < n_u ? ib + 1 : ib;
      const float db = u - static_cast<float>(ib);
      const float* row0 = qt.data() + static_cast<std::size_t>(ib) * n_v;
      const float* row1 = qt.data() + static_cast<std::size_t>(ib1) * n_v;
      auto sample = [&](float a) {
        if (!(a >= 0.0f && a <= v_mirror)) return 0.0f;
        const int ia = static_cast<int>(a);
        const int ia1 = ia + 1 < n_v ? ia + 1 : ia;
        const float da = a - static_cast<float>(ia);
        const float t1 = row0[ia] * (1.0f - da) + row0[ia1] * da;
        const float t2 = row1[ia] * (1.0f - da) + row1[ia1] * da;
        return t1 * (1.0f - db) + t2 * db;
      };
      for (int t = 0; t < half; ++t) {
        const float fk = static_cast<float>(k0 + t);
        const float y = p.m[1][0] * fi + p.m[1][1] * fj + p.m[1][2] * fk + p.m[1][3];
        const float v = y * f;
        column[t] += w_dis * sample(v);
        column[depth - 1 - t] += w_dis * sample(v_mirror - v);
      }
    }
  }
  if (counter) counter->add(count);
}

void SymmetricSlab::scale(float factor) {
  for (float& value : data_.samples()) value *= factor;
}

void SymmetricSlab::write_into(Volume& volume) const {
  if (volume.n_x() != geom_.n_x || volume.n_y() != geom_.n_y || volume.n_z() != geom_.n_z) {
    throw ShapeError("slab does not belong to a volume of this shape");
  }
  const int depth = data_.n_z();
  for (int i = 0; i < geom_.n_x; ++i)
    for (int j = 0; j < geom_.n_y; ++j)
      for (int p = 0; p < depth; ++p) volume.at(i, j, slice_at(p)) = data_.at(i, j, p);
}

Volume backproject_optimized(std::span<const ProjectionMatrix> mats, std::span<const Projection> projs,
                             const CbctGeometry& geom, int batch, OpCounter* counter, int threads) {
  geom.validate();
  if (batch < 1) throw ValidationError("batch must be >= 1, got " + std::to_string(batch));
  if (geom.n_z % 2 != 0) {
    throw ShapeError("symmetric back-projection needs an even n_z, got " + std::to_string(geom.n_z));
  }
  check_stack(mats, projs, geom.n_u, geom.n_v, ProjectionKind::filtered);

  SymmetricSlab slab(geom, {0, geom.n_z / 2});
  const int nt = resolve_threads(threads);
  std::vector<Projection> transposed;
  for (std::size_t first = 0; first < projs.size(); first += static_cast<std::size_t>(batch)) {
    const std::size_t n = std::min<std::size_t>(batch, projs.size() - first);
    transposed.resize(n);
#pragma omp parallel for schedule(static) num_threads(nt)
    for (long b = 0; b < static_cast<long>(n); ++b) transposed[b] = transpose_projection(projs[first + b]);
    slab.accumulate(mats.subspan(first, n), transposed, counter, nt);
  }
  slab.scale(static_cast<float>(geom.theta()));
  // The full band is stored in k-major order already.
  return reshape_volume(slab.data(), VolumeLayout::i_major);
}

}  // namespace cbct
