// Copyright 2026 The cbct Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>

namespace cbct {

/// Bytes per gigabyte in every bandwidth below (2^30, as in GUPS).
inline constexpr double kGiB = 1073741824.0;
inline constexpr double kBytesPerSample = 4.0;

/// Machine throughputs and problem/grid sizes. Bandwidths are GB/s;
/// th_flt is projections/s per node, th_bp projections/s per GPU and
/// th_allgather projections/s.
struct PerfParams {
  double bw_load = 0.0;
  double bw_store = 0.0;
  double th_flt = 0.0;
  double th_bp = 0.0;
  double th_allgather = 0.0;
  double th_reduce = 0.0;
  std::optional<double> th_trans;
  double bw_pcie = 0.0;
  int n_pcie = 1;
  int n_gpu_per_node = 1;
  int n_cpu_per_node = 1;
  int n_gpus = 1;
  int n_nodes = 1;
  long long n_u = 0, n_v = 0, n_p = 0;
  long long n_x = 0, n_y = 0, n_z = 0;
  int rows = 1;
  int cols = 1;

  /// Throws ValidationError for non-positive throughputs or sizes, or
  /// n_gpus != rows * cols.
  void validate() const;
};

/// Stage times in seconds.
struct PerfBreakdown {
  double t_load = 0.0;
  double t_flt = 0.0;
  double t_allgather = 0.0;
  double t_h2d = 0.0;
  double t_bp = 0.0;
  double t_trans = 0.0;
  double t_d2h = 0.0;
  double t_reduce = 0.0;
  double t_store = 0.0;
  double t_compute = 0.0;
  double t_post = 0.0;
  double t_runtime = 0.0;
  double delta = 0.0;
};

PerfBreakdown estimate(const PerfParams& p);

/// (t_flt + t_allgather + t_bp) / t_compute
double overlap_factor(double t_flt, double t_allgather, double t_bp, double t_compute);

/// Breakdown built from measured stage times rather than throughputs.
/// Missing post stages count as zero.
struct MeasuredTimes {
  double t_flt = 0.0;
  double t_allgather = 0.0;
  double t_bp = 0.0;
  double t_compute = 0.0;
  double t_d2h = 0.0;
  double t_reduce = 0.0;
  double t_store = 0.0;
};

PerfBreakdown from_measured(const MeasuredTimes& m);

/// Giga voxel updates per second: n_x*n_y*n_z*n_p / (t * 2^30).
double gups(long long n_x, long long n_y, long long n_z, long long n_p, double seconds);

/// Parses flat key=value parameters. Keys t_flt/t_allgather/t_bp/t_compute
/// select measured mode; everything else maps onto PerfParams fields.
struct ModelInput {
  std::optional<PerfParams> params;
  std::optional<MeasuredTimes> measured;
};
ModelInput parse_model_input(const std::map<std::string, std::string>& kv);

/// Aligned table followed by key=value lines.
void write_breakdown(std::ostream& os, const PerfBreakdown& b);

}  // namespace cbct
