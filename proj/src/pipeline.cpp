// Copyright 2026 The cbct Authors
// SPDX-License-Identifier: Apache-2.0

#include "cbct/pipeline.hpp"

#include <omp.h>

#include <algorithm>
#include <atomic>
#include <bit>
#include <exception>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "cbct/collectives.hpp"
#include "cbct/errors.hpp"
#include "cbct/filtering.hpp"

namespace cbct {

std::vector<Projection> all_gather(Rendezvous<Projection>& group, int member, Projection item) {
  const auto round = group.exchange(member, std::move(item));
  const auto& items = *round;
  for (std::size_t m = 1; m < items.size(); ++m) {
    if (!items[m].same_shape(items[0])) {
      throw ShapeError("all_gather: member " + std::to_string(m) + " contributed " +
                       std::to_string(items[m].width()) + "x" + std::to_string(items[m].height()) +
                       " but member 0 contributed " + std::to_string(items[0].width()) + "x" +
                       std::to_string(items[0].height()));
    }
  }
  return items;
}

std::optional<Volume> reduce_sum(Rendezvous<Volume>& group, int member, Volume slab) {
  const auto round = group.exchange(member, std::move(slab));
  const auto& items = *round;
  for (std::size_t m = 1; m < items.size(); ++m) {
    if (!items[m].same_shape(items[0]) || items[m].layout() != items[0].layout()) {
      throw ShapeError("reduce_sum: member " + std::to_string(m) + " slab shape differs from member 0");
    }
  }
  if (member != 0) return std::nullopt;
  Volume sum = items[0];
  auto& acc = sum.samples();
  for (std::size_t m = 1; m < items.size(); ++m) {
    const auto& add = items[m].samples();
    for (std::size_t e = 0; e < acc.size(); ++e) acc[e] += add[e];
  }
  return sum;
}

double PipelineTimes::overlap_factor() const {
  return compute > 0.0 ? (filter + gather + backproject) / compute : 0.0;
}

namespace {

std::uint64_t volume_bytes(const CbctGeometry& g) { return 4ull * g.n_x * g.n_y * g.n_z; }

GridPlan finish_plan(const CbctGeometry& geom, int n_ranks, int rows) {
  std::ostringstream why;
  if (n_ranks < rows) {
    why << "need at least R=" << rows << " ranks, got " << n_ranks;
  } else if (n_ranks % rows != 0) {
    why << n_ranks << " ranks cannot form a grid with R=" << rows << " rows";
  } else if (geom.n_z % 2 != 0) {
    why << "n_z=" << geom.n_z << " must be even for mirrored slabs";
  } else if ((geom.n_z / 2) % rows != 0) {
    why << "n_z/2=" << geom.n_z / 2 << " is not divisible by R=" << rows;
  } else if (geom.n_p % n_ranks != 0) {
    why << "n_p=" << geom.n_p << " is not divisible by C*R=" << n_ranks;
  }
  if (!why.str().empty()) throw PlanningError("infeasible rank grid: " + why.str());

  GridPlan plan;
  plan.rows = rows;
  plan.cols = n_ranks / rows;
  plan.n_ranks = n_ranks;
  plan.proj_per_rank = geom.n_p / n_ranks;
  plan.sub_vol_bytes = volume_bytes(geom) / static_cast<std::uint64_t>(rows);
  const int h = geom.n_z / (2 * rows);
  for (int r = 0; r < rows; ++r) plan.bands.push_back({r * h, h});
  return plan;
}

}  // namespace

GridPlan plan_grid(const CbctGeometry& geom, int n_ranks, std::uint64_t sub_vol_bytes) {
  geom.validate();
  if (n_ranks < 1) throw PlanningError("n_ranks must be >= 1");
  if (sub_vol_bytes == 0) throw PlanningError("sub-volume budget must be positive");
  const std::uint64_t total = volume_bytes(geom);
  const std::uint64_t needed = (total + sub_vol_bytes - 1) / sub_vol_bytes;
  const std::uint64_t rows = std::bit_ceil(std::max<std::uint64_t>(needed, 1));
  if (rows > static_cast<std::uint64_t>(n_ranks)) {
    throw PlanningError("infeasible rank grid: the memory budget needs R=" + std::to_string(rows) +
                        " rows but only " + std::to_string(n_ranks) + " ranks are available");
  }
  return finish_plan(geom, n_ranks, static_cast<int>(rows));
}

GridPlan plan_grid_rows(const CbctGeometry& geom, int n_ranks, int rows) {
  geom.validate();
  if (n_ranks < 1 || rows < 1) throw PlanningError("n_ranks and rows must be >= 1");
  return finish_plan(geom, n_ranks, rows);
}

std::vector<RankTask> assign_tasks(const GridPlan& plan, const CbctGeometry& geom) {
  if (plan.rows * plan.cols != plan.n_ranks || static_cast<int>(plan.bands.size()) != plan.rows ||
      plan.proj_per_rank * plan.n_ranks != geom.n_p) {
    throw PlanningError("grid plan does not match the geometry");
  }
  std::vector<RankTask> tasks;
  for (int r = 0; r < plan.rows; ++r)
    for (int c = 0; c < plan.cols; ++c) {
      RankTask t;
      t.row = r;
      t.col = c;
      t.views = {c * plan.views_per_column() + r * plan.proj_per_rank, plan.proj_per_rank};
      t.slab = plan.bands[r];
      tasks.push_back(t);
    }
  return tasks;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds(Clock::duration d) { return std::chrono::duration<double>(d).count(); }

struct Tagged {
  int view = 0;
  Projection proj;
};

void check_bands(const GridPlan& plan, const CbctGeometry& geom) {
  std::vector<int> owner(geom.n_z, 0);
  for (const auto& band : plan.bands) {
    if (band.half_height < 1 || band.k_begin < 0 || band.k_begin + band.half_height > geom.n_z / 2) {
      throw PipelineError("slab band does not fit the volume depth n_z=" + std::to_string(geom.n_z));
    }
    for (int t = 0; t < band.half_height; ++t) {
      ++owner[band.k_begin + t];
      ++owner[geom.n_z - 1 - band.k_begin - t];
    }
  }
  for (int k = 0; k < geom.n_z; ++k)
    if (owner[k] != 1) {
      throw PipelineError("slab bands do not partition the volume: slice " + std::to_string(k) + " owned " +
                          std::to_string(owner[k]) + " times");
    }
}

class Failure {
 public:
  void record(int rank, std::exception_ptr error) {
    std::lock_guard lock(mu_);
    if (!error_) {
      error_ = error;
      rank_ = rank;
    }
  }
  void rethrow_if_failed(const std::vector<RankTask>& tasks) const {
    if (!error_) return;
    std::string what;
    try {
      std::rethrow_exception(error_);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
      what = "unknown error";
    }
    const RankTask& t = tasks[rank_];
    throw PipelineError("rank " + std::to_string(rank_) + " (row " + std::to_string(t.row) + ", col " +
                            std::to_string(t.col) + "): " + what,
                        rank_);
  }

 private:
  std::mutex mu_;
  std::exception_ptr error_;
  int rank_ = -1;
};

}  // namespace

PipelineResult run_pipeline(const GridPlan& plan, const CbctGeometry& geom, const ProjectionSource& source,
                            const VolumeSink& sink, const PipelineOptions& options) {
  geom.validate();
  if (!source) throw ValidationError("pipeline needs a projection source");
  if (options.batch < 1) throw ValidationError("batch must be >= 1");
  const std::vector<RankTask> tasks = assign_tasks(plan, geom);
  check_bands(plan, geom);

  const int n_ranks = plan.n_ranks;
  const int cores = options.total_cores > 0 ? options.total_cores
                                            : std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
  const int filter_workers = std::max(1, cores / n_ranks - 1);
  const int bp_threads = std::max(1, cores / n_ranks);
  const float theta = static_cast<float>(geom.theta());

  const std::vector<ProjectionMatrix> matrices = build_projection_matrices(geom);
  const ProjectionFilter filter(geom);

  std::vector<std::unique_ptr<Rendezvous<Projection>>> column_groups;
  for (int c = 0; c < plan.cols; ++c) {
    column_groups.push_back(std::make_unique<Rendezvous<Projection>>(plan.rows, options.collective_timeout,
                                                                     "all_gather(col " + std::to_string(c) + ")"));
  }
  std::vector<std::unique_ptr<Rendezvous<Volume>>> row_groups;
  for (int r = 0; r < plan.rows; ++r) {
    row_groups.push_back(std::make_unique<Rendezvous<Volume>>(plan.cols, options.collective_timeout,
                                                              "reduce_sum(row " + std::to_string(r) + ")"));
  }
  std::vector<std::unique_ptr<BoundedQueue<Tagged>>> filtered_queues;
  std::vector<std::unique_ptr<BoundedQueue<Tagged>>> gathered_queues;
  for (int r = 0; r < n_ranks; ++r) {
    filtered_queues.push_back(std::make_unique<BoundedQueue<Tagged>>(options.queue_capacity));
    gathered_queues.push_back(std::make_unique<BoundedQueue<Tagged>>(options.queue_capacity));
  }

  Failure failure;
  std::atomic<bool> aborted{false};
  auto fail = [&](int rank, std::exception_ptr error) {
    failure.record(rank, error);
    aborted = true;
    for (auto& g : column_groups) g->abort();
    for (auto& g : row_groups) g->abort();
    for (auto& q : filtered_queues) q->close();
    for (auto& q : gathered_queues) q->close();
  };

  PipelineResult result;
  result.volume = Volume(geom.n_x, geom.n_y, geom.n_z, VolumeLayout::i_major);
  result.ranks.resize(n_ranks);
  std::vector<Clock::time_point> bp_done(n_ranks);

  const Clock::time_point start = Clock::now();

  auto filter_stage = [&](int rank) {
    RankReport& report = result.ranks[rank];
    BoundedQueue<Tagged>& out = *filtered_queues[rank];
    const ViewRange views = report.task.views;
    const Clock::time_point t0 = Clock::now();
    Clock::duration blocked{};
    std::atomic<bool> stop{false};
#pragma omp parallel for ordered schedule(static, 1) num_threads(filter_workers)
    for (int t = 0; t < views.count; ++t) {
      std::optional<Tagged> item;
      if (!stop) {
        try {
          const int view = views.first + t;
          Projection raw = source(view);
          if (raw.width() != geom.n_u || raw.height() != geom.n_v) {
            throw ShapeError("view " + std::to_string(view) + " is " + std::to_string(raw.width()) + "x" +
                             std::to_string(raw.height()) + ", geometry expects " + std::to_string(geom.n_u) +
                             "x" + std::to_string(geom.n_v));
          }
          raw.set_kind(ProjectionKind::raw);
          item = Tagged{view, filter(raw)};
        } catch (...) {
          stop = true;
          fail(rank, std::current_exception());
        }
      }
#pragma omp ordered
      {
        if (item && !stop) {
          const int view = item->view;
          const Clock::time_point p0 = Clock::now();
          if (out.push(std::move(*item))) {
            report.filtered_views.push_back(view);
          } else {
            stop = true;
          }
          blocked += Clock::now() - p0;
        }
      }
    }
    out.close();
    report.times.filter = seconds(Clock::now() - t0 - blocked);
  };

  auto bp_stage = [&](int rank, SymmetricSlab& slab) {
    RankReport& report = result.ranks[rank];
    BoundedQueue<Tagged>& in = *gathered_queues[rank];
    OpCounter counter;
    std::vector<Projection> batch;
    std::vector<ProjectionMatrix> mats;
    Clock::duration busy{};
    auto flush = [&] {
      if (batch.empty()) return;
      const Clock::time_point b0 = Clock::now();
      slab.accumulate(mats, batch, &counter, bp_threads);
      busy += Clock::now() - b0;
      batch.clear();
      mats.clear();
    };
    while (auto item = in.pop()) {
      const Clock::time_point b0 = Clock::now();
      batch.push_back(transpose_projection(item->proj));
      busy += Clock::now() - b0;
      mats.push_back(matrices[item->view]);
      report.backprojected_views.push_back(item->view);
      if (static_cast<int>(batch.size()) == options.batch) flush();
    }
    flush();
    bp_done[rank] = Clock::now();
    report.times.backproject = seconds(busy);
    report.inner_products = counter.inner_products();
  };

  auto rank_main = [&](int rank) {
    RankReport& report = result.ranks[rank];
    const RankTask& task = report.task;
    try {
      SymmetricSlab slab(geom, task.slab);
      {
        std::jthread filter_thread([&] {
          try {
            filter_stage(rank);
          } catch (...) {
            fail(rank, std::current_exception());
          }
        });
        std::jthread bp_thread([&] {
          try {
            bp_stage(rank, slab);
          } catch (...) {
            fail(rank, std::current_exception());
          }
        });

        Rendezvous<Projection>& column = *column_groups[task.col];
        BoundedQueue<Tagged>& in = *filtered_queues[rank];
        BoundedQueue<Tagged>& out = *gathered_queues[rank];
        const int column_first = task.col * plan.views_per_column();
        Clock::duration gather{};
        try {
          for (int t = 0; t < plan.proj_per_rank; ++t) {
            auto item = in.pop();
            if (!item) {
              if (aborted) break;
              throw PipelineError("filtering stage closed after " + std::to_string(t) + " of " +
                                  std::to_string(plan.proj_per_rank) + " projections", rank);
            }
            const Clock::time_point g0 = Clock::now();
            std::vector<Projection> round = all_gather(column, task.row, std::move(item->proj));
            gather += Clock::now() - g0;
            for (int m = 0; m < plan.rows; ++m) {
              const int view = column_first + m * plan.proj_per_rank + t;
              if (!out.push(Tagged{view, std::move(round[m])})) break;
            }
          }
        } catch (...) {
          fail(rank, std::current_exception());
        }
        out.close();
        report.times.gather = seconds(gather);
      }
      if (aborted) return;

      const Clock::time_point r0 = Clock::now();
      std::optional<Volume> reduced;
      if (plan.cols == 1) {
        reduced = std::move(slab.data());
      } else {
        reduced = reduce_sum(*row_groups[task.row], task.col, std::move(slab.data()));
      }
      if (reduced) {
        slab.data() = std::move(*reduced);
        slab.scale(theta);
        if (options.output_scale != 1.0f) slab.scale(options.output_scale);
        slab.write_into(result.volume);
      }
      report.times.reduce = seconds(Clock::now() - r0);
    } catch (...) {
      fail(rank, std::current_exception());
    }
  };

  for (int rank = 0; rank < n_ranks; ++rank) result.ranks[rank].task = tasks[rank];
  {
    std::vector<std::jthread> ranks;
    for (int rank = 0; rank < n_ranks; ++rank) ranks.emplace_back(rank_main, rank);
  }
  failure.rethrow_if_failed(tasks);

  PipelineTimes& times = result.times;
  Clock::time_point compute_end = start;
  for (int rank = 0; rank < n_ranks; ++rank) {
    const RankTimes& rt = result.ranks[rank].times;
    times.filter = std::max(times.filter, rt.filter);
    times.gather = std::max(times.gather, rt.gather);
    times.backproject = std::max(times.backproject, rt.backproject);
    times.reduce = std::max(times.reduce, rt.reduce);
    compute_end = std::max(compute_end, bp_done[rank]);
  }
  times.compute = seconds(compute_end - start);
  const Clock::time_point s0 = Clock::now();
  if (sink) sink(result.volume);
  times.store = seconds(Clock::now() - s0);
  times.total = seconds(Clock::now() - start);
  return result;
}

}  // namespace cbct
