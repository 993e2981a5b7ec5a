// Copyright 2026 The cbct Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <vector>

#include "cbct/backprojection.hpp"
#include "cbct/geometry.hpp"
#include "cbct/projection.hpp"
#include "cbct/volume.hpp"

namespace cbct {

/// R x C grid of ranks. Columns split the views, rows split the volume
/// into mirrored z-band pairs.
struct GridPlan {
  int rows = 1;
  int cols = 1;
  int n_ranks = 1;
  int proj_per_rank = 0;
  std::uint64_t sub_vol_bytes = 0;  ///< bytes of one row's sub-volume
  std::vector<SlabBand> bands;      ///< one per row

  int views_per_column() const { return proj_per_rank * rows; }
};

/// R = 4 * n_x * n_y * n_z / sub_vol_bytes rounded up to a power of two,
/// C = n_ranks / R. Throws PlanningError if the grid is infeasible.
GridPlan plan_grid(const CbctGeometry& geom, int n_ranks, std::uint64_t sub_vol_bytes);

/// Same, with R given directly.
GridPlan plan_grid_rows(const CbctGeometry& geom, int n_ranks, int rows);

struct ViewRange {
  int first = 0;
  int count = 0;
};

struct RankTask {
  int row = 0;
  int col = 0;
  ViewRange views;  ///< views this rank loads and filters
  SlabBand slab;
};

std::vector<RankTask> assign_tasks(const GridPlan& plan, const CbctGeometry& geom);

/// Wall-clock seconds a rank spent in each stage.
struct RankTimes {
  double filter = 0.0;
  double gather = 0.0;
  double backproject = 0.0;
  double reduce = 0.0;
};

struct RankReport {
  RankTask task;
  RankTimes times;
  std::vector<int> filtered_views;
  std::vector<int> backprojected_views;
  std::uint64_t inner_products = 0;
};

struct PipelineTimes {
  double filter = 0.0;       ///< max over ranks
  double gather = 0.0;       ///< max over ranks
  double backproject = 0.0;  ///< max over ranks
  double compute = 0.0;      ///< start until the last back-projection finished
  double reduce = 0.0;
  double store = 0.0;
  double total = 0.0;

  /// (filter + gather + backproject) / compute
  double overlap_factor() const;
};

struct PipelineOptions {
  int batch = 32;
  std::size_t queue_capacity = 4;
  /// Cores shared by all ranks; each rank filters with cores/n_ranks - 1
  /// workers (at least one) and back-projects with cores/n_ranks threads.
  int total_cores = 0;
  std::chrono::milliseconds collective_timeout{120000};
  float output_scale = 1.0f;  ///< applied after the angle-step scaling
};

struct PipelineResult {
  Volume volume;
  PipelineTimes times;
  std::vector<RankReport> ranks;
};

/// Loads raw projection `view`; called concurrently from several threads.
using ProjectionSource = std::function<Projection(int view)>;
/// Receives the assembled i-major volume; may be empty.
using VolumeSink = std::function<void(const Volume&)>;

/// Runs every rank as a set of threads in this process: a filtering stage,
/// a main stage performing one column AllGather per projection, and a
/// back-projection stage consuming batches, connected by bounded queues.
/// Row slabs are then summed across columns and assembled. Any failure is
/// rethrown as PipelineError naming the rank.
PipelineResult run_pipeline(const GridPlan& plan, const CbctGeometry& geom, const ProjectionSource& source,
                            const VolumeSink& sink = {}, const PipelineOptions& options = {});

}  // namespace cbct
