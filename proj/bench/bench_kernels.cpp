// Copyright 2026 The cbct Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <random>

#include "cbct/backprojection.hpp"
#include "cbct/fdk.hpp"
#include "cbct/filtering.hpp"

namespace {

using namespace cbct;

CbctGeometry bench_geometry(int n) {
  CbctGeometry g = desk_geometry();
  g.n_x = g.n_y = g.n_z = n;
  g.d_x = g.d_y = g.d_z = 128.0 / n;
  g.n_p = 64;
  return g;
}

std::vector<Projection> noise(const CbctGeometry& g, ProjectionKind kind) {
  std::mt19937 rng(1);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  std::vector<Projection> stack;
  for (int s = 0; s < g.n_p; ++s) {
    Projection p(g.n_u, g.n_v, kind);
    for (float& x : p.samples()) x = dist(rng);
    stack.push_back(std::move(p));
  }
  return stack;
}

void set_gups(benchmark::State& state, const CbctGeometry& g) {
  state.counters["GUPS"] = benchmark::Counter(static_cast<double>(g.voxel_count()) * g.n_p / (1u << 30),
                                              benchmark::Counter::kIsIterationInvariantRate);
}

void BM_BackprojectStandard(benchmark::State& state) {
  const CbctGeometry g = bench_geometry(static_cast<int>(state.range(0)));
  const auto stack = noise(g, ProjectionKind::filtered);
  const auto mats = build_projection_matrices(g);
  for (auto _ : state) benchmark::DoNotOptimize(backproject_standard(mats, stack, g));
  set_gups(state, g);
}

void BM_BackprojectOptimized(benchmark::State& state) {
  const CbctGeometry g = bench_geometry(static_cast<int>(state.range(0)));
  const auto stack = noise(g, ProjectionKind::filtered);
  const auto mats = build_projection_matrices(g);
  const int threads = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(backproject_optimized(mats, stack, g, 32, nullptr, threads));
  set_gups(state, g);
}

void BM_FilterStack(benchmark::State& state) {
  const CbctGeometry g = bench_geometry(64);
  const auto stack = noise(g, ProjectionKind::raw);
  const int threads = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(filter_stack(g, stack, threads));
  state.SetItemsProcessed(state.iterations() * g.n_p);
}

BENCHMARK(BM_BackprojectStandard)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BackprojectOptimized)->Args({64, 1})->Args({128, 1})->Args({128, 0})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FilterStack)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
