// Copyright 2026 The cbct Authors
// SPDX-License-Identifier: Apache-2.0

#include "cbct/cli.hpp"

#include <chrono>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "cbct/errors.hpp"
#include "cbct/fdk.hpp"
#include "cbct/filtering.hpp"
#include "cbct/io.hpp"
#include "cbct/perfmodel.hpp"
#include "cbct/phantom.hpp"
#include "cbct/pipeline.hpp"

namespace cbct {

namespace {

using Clock = std::chrono::steady_clock;
using Entries = std::vector<std::pair<std::string, std::string>>;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Common {
  std::string geometry;
  int threads = 0;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--geometry", c.geometry, "geometry file (key=value); defaults to the built-in desk geometry");
  cmd->add_option("--threads", c.threads, "worker threads (0 = OpenMP default)")->check(CLI::NonNegativeNumber);
}

CbctGeometry geometry_or_desk(const Common& c) {
  return c.geometry.empty() ? desk_geometry() : load_geometry(c.geometry);
}

/// Dataset geometry, cross-checked against --geometry when given.
void check_geometry(const Common& c, const CbctGeometry& dataset) {
  if (c.geometry.empty()) return;
  if (!(load_geometry(c.geometry) == dataset)) {
    throw ValidationError("--geometry " + c.geometry + " does not match the dataset metadata");
  }
}

void write_report(const fs::path& dir, Entries entries, double seconds_total) {
  entries.emplace_back("t_total", format_double(seconds_total));
  write_key_values(dir / "report.txt", entries);
}

int cmd_phantom(const Common& c, const std::string& out_dir, std::ostream& out) {
  const auto t0 = Clock::now();
  const CbctGeometry g = geometry_or_desk(c);
  const Volume vol = sample_volume(shepp_logan_3d().fitted_to(g), g);
  const double t_sample = seconds_since(t0);
  const auto t1 = Clock::now();
  DatasetMeta meta{g, DataKind::volume, ProjectionKind::raw, VolumeLayout::i_major};
  const SliceSet set = write_volume_slices(vol, meta, out_dir);
  const double t_store = seconds_since(t1);
  write_report(out_dir, {{"command", "phantom"}, {"t_sample", format_double(t_sample)}, {"t_store", format_double(t_store)}},
               seconds_since(t0));
  out << "wrote " << set.n_z << " slices of " << set.n_x << "x" << set.n_y << " to " << out_dir << '\n';
  return kExitOk;
}

int cmd_project(const Common& c, const std::string& out_dir, std::ostream& out) {
  const CbctGeometry g = geometry_or_desk(c);
  g.validate();
  const Phantom ph = shepp_logan_3d().fitted_to(g);
  std::vector<Projection> stack;
  stack.reserve(g.n_p);
  for (int s = 0; s < g.n_p; ++s) stack.push_back(forward_project(ph, g, s));
  write_projections(out_dir, stack, {g, DataKind::projections, ProjectionKind::raw, VolumeLayout::i_major});
  out << "wrote " << g.n_p << " projections of " << g.n_u << "x" << g.n_v << " to " << out_dir << '\n';
  return kExitOk;
}

int cmd_filter(const Common& c, const std::string& in_dir, const std::string& out_dir, std::ostream& out) {
  ProjectionDataset ds = read_projections(in_dir);
  check_geometry(c, ds.meta.geometry);
  if (ds.meta.projection_kind != ProjectionKind::raw) {
    throw ValidationError(in_dir + " already holds " + to_string(ds.meta.projection_kind) + " projections");
  }
  const auto filtered = filter_stack(ds.meta.geometry, ds.stack, c.threads);
  DatasetMeta meta = ds.meta;
  meta.projection_kind = ProjectionKind::filtered;
  write_projections(out_dir, filtered, meta);
  out << "filtered " << filtered.size() << " projections into " << out_dir << '\n';
  return kExitOk;
}

struct ReconArgs {
  std::string in, out, kernel = "optimized";
  int batch = 32;
  bool count_ops = false;
};

int cmd_reconstruct(const Common& c, const ReconArgs& a, std::ostream& out) {
  const auto t0 = Clock::now();
  const ProjectionDataset ds = read_projections(a.in);
  check_geometry(c, ds.meta.geometry);
  const CbctGeometry& g = ds.meta.geometry;
  const double t_load = seconds_since(t0);

  OpCounter counter;
  ReconstructOptions opt;
  opt.kernel = parse_kernel(a.kernel);
  opt.batch = a.batch;
  opt.threads = c.threads;
  opt.counter = a.count_ops ? &counter : nullptr;
  ReconstructTimes times;
  const Volume vol = reconstruct(g, ds.stack, opt, &times);

  const auto t1 = Clock::now();
  write_volume_slices(vol, {g, DataKind::volume, ProjectionKind::raw, VolumeLayout::i_major}, a.out);
  const double t_store = seconds_since(t1);

  Entries report{{"command", "reconstruct"},
                 {"kernel", to_string(opt.kernel)},
                 {"batch", std::to_string(a.batch)},
                 {"t_load", format_double(t_load)},
                 {"t_filter", format_double(times.filter)},
                 {"t_backproject", format_double(times.backproject)},
                 {"t_store", format_double(t_store)},
                 {"gups", format_double(gups(g.n_x, g.n_y, g.n_z, g.n_p, times.backproject))}};
  if (a.count_ops) {
    const std::uint64_t expected = opt.kernel == Kernel::standard ? standard_op_count(g) : optimized_op_count(g);
    report.emplace_back("inner_products", std::to_string(counter.inner_products()));
    report.emplace_back("expected_inner_products", std::to_string(expected));
    out << "kernel=" << to_string(opt.kernel) << '\n'
        << "inner_products=" << counter.inner_products() << '\n'
        << "expected_inner_products=" << expected << '\n';
  }
  write_report(a.out, report, seconds_since(t0));
  out << "reconstructed " << g.n_x << "x" << g.n_y << "x" << g.n_z << " into " << a.out << " in "
      << std::setprecision(3) << times.filter + times.backproject << " s\n";
  return kExitOk;
}

struct PipelineArgs {
  std::string in, out;
  int ranks = 1;
  int rows = 0;
  std::uint64_t subvol_bytes = 0;
  int batch = 32;
  int cores = 0;
};

int cmd_pipeline(const Common& c, const PipelineArgs& a, std::ostream& out) {
  const auto t0 = Clock::now();
  const DatasetMeta meta = read_meta(a.in);
  if (meta.kind != DataKind::projections) throw IoError(a.in + " holds a volume, not projections");
  if (meta.projection_kind != ProjectionKind::raw) {
    throw ValidationError("the pipeline filters its input; " + a.in + " holds " + to_string(meta.projection_kind) +
                          " projections");
  }
  check_geometry(c, meta.geometry);
  const CbctGeometry& g = meta.geometry;
  // Fail on missing or short files before any rank starts.
  const std::uintmax_t bytes = 4ull * g.n_u * g.n_v;
  for (int s = 0; s < g.n_p; ++s) {
    const fs::path f = fs::path(a.in) / projection_file_name(s);
    std::error_code ec;
    const auto size = fs::file_size(f, ec);
    if (ec) throw IoError("cannot read " + f.string() + ": " + ec.message());
    if (size != bytes) {
      throw IoError("size mismatch in " + f.string() + ": expected " + std::to_string(bytes) + " bytes, found " +
                    std::to_string(size));
    }
  }

  const GridPlan plan = a.rows > 0 ? plan_grid_rows(g, a.ranks, a.rows) : plan_grid(g, a.ranks, a.subvol_bytes);
  PipelineOptions opt;
  opt.batch = a.batch;
  opt.total_cores = a.cores > 0 ? a.cores : c.threads;
  opt.output_scale = static_cast<float>(fdk_normalization(g));
  const fs::path in_dir = a.in;
  const ProjectionSource source = [&](int view) {
    return read_projection_file(in_dir / projection_file_name(view), g.n_u, g.n_v, ProjectionKind::raw);
  };
  const DatasetMeta out_meta{g, DataKind::volume, ProjectionKind::raw, VolumeLayout::i_major};
  const VolumeSink sink = [&](const Volume& vol) { write_volume_slices(vol, out_meta, a.out); };
  const PipelineResult r = run_pipeline(plan, g, source, sink, opt);

  const PipelineTimes& t = r.times;
  Entries report{{"command", "pipeline"},
                 {"ranks", std::to_string(plan.n_ranks)},
                 {"rows", std::to_string(plan.rows)},
                 {"cols", std::to_string(plan.cols)},
                 {"batch", std::to_string(a.batch)},
                 {"t_filter", format_double(t.filter)},
                 {"t_allgather", format_double(t.gather)},
                 {"t_backproject", format_double(t.backproject)},
                 {"t_compute", format_double(t.compute)},
                 {"t_reduce", format_double(t.reduce)},
                 {"t_store", format_double(t.store)},
                 {"delta", format_double(t.overlap_factor())}};
  for (const RankReport& rr : r.ranks) {
    const std::string p = "rank" + std::to_string(rr.task.row * plan.cols + rr.task.col) + ".";
    report.emplace_back(p + "t_filter", format_double(rr.times.filter));
    report.emplace_back(p + "t_allgather", format_double(rr.times.gather));
    report.emplace_back(p + "t_backproject", format_double(rr.times.backproject));
    report.emplace_back(p + "t_reduce", format_double(rr.times.reduce));
  }
  write_report(a.out, report, seconds_since(t0));
  out << "grid " << plan.rows << "x" << plan.cols << ": compute " << std::setprecision(3) << t.compute
      << " s, delta " << t.overlap_factor() << ", volume in " << a.out << '\n';
  return kExitOk;
}

int cmd_model(const Common& c, const std::string& params, std::ostream& out) {
  KeyValues kv = read_key_values(params);
  if (!c.geometry.empty() && !kv.count("t_compute")) {
    const KeyValues gkv = read_key_values(c.geometry);
    for (const char* k : {"n_u", "n_v", "n_p", "n_x", "n_y", "n_z"}) {
      if (!kv.count(k) && gkv.count(k)) kv[k] = gkv.at(k);
    }
  }
  const ModelInput in = parse_model_input(kv);
  const PerfBreakdown b = in.measured ? from_measured(*in.measured) : estimate(*in.params);
  write_breakdown(out, b);
  return kExitOk;
}

struct BenchArgs {
  std::string kernel = "both";
  int repeat = 1;
  int batch = 32;
};

int cmd_bench(const Common& c, const BenchArgs& a, std::ostream& out) {
  const CbctGeometry g = geometry_or_desk(c);
  g.validate();
  if (a.kernel != "both") parse_kernel(a.kernel);
  std::mt19937 rng(1234);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  std::vector<Projection> stack;
  stack.reserve(g.n_p);
  for (int s = 0; s < g.n_p; ++s) {
    Projection p(g.n_u, g.n_v, ProjectionKind::filtered);
    for (float& x : p.samples()) x = dist(rng);
    stack.push_back(std::move(p));
  }
  const auto mats = build_projection_matrices(g);
  out << std::left << std::setw(10) << "kernel" << std::right << std::setw(12) << "seconds" << std::setw(12) << "gups"
      << '\n';
  for (Kernel k : {Kernel::standard, Kernel::optimized}) {
    if (a.kernel != "both" && parse_kernel(a.kernel) != k) continue;
    double best = 0.0;
    for (int r = 0; r < a.repeat; ++r) {
      const auto t0 = Clock::now();
      const Volume v = k == Kernel::standard ? backproject_standard(mats, stack, g)
                                             : backproject_optimized(mats, stack, g, a.batch, nullptr, c.threads);
      const double t = seconds_since(t0);
      if (r == 0 || t < best) best = t;
    }
    out << std::left << std::setw(10) << to_string(k) << std::right << std::fixed << std::setprecision(4)
        << std::setw(12) << best << std::setw(12) << gups(g.n_x, g.n_y, g.n_z, g.n_p, best) << '\n';
    out.unsetf(std::ios::fixed);
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cone-beam CT reconstruction toolkit", "cbct"};
  app.require_subcommand(1);

  Common common;
  std::string out_dir, in_dir, params;
  ReconArgs recon;
  PipelineArgs pipe;
  BenchArgs bench;

  auto* phantom = app.add_subcommand("phantom", "voxelise the Shepp-Logan phantom into slices");
  add_common(phantom, common);
  phantom->add_option("--out", out_dir, "output directory")->required();

  auto* project = app.add_subcommand("project", "forward-project the phantom into raw projections");
  add_common(project, common);
  project->add_option("--out", out_dir, "output directory")->required();

  auto* filter = app.add_subcommand("filter", "cosine-weight and ramp-filter a raw dataset");
  add_common(filter, common);
  filter->add_option("--in", in_dir, "raw projection directory")->required();
  filter->add_option("--out", out_dir, "output directory")->required();

  auto* reconstruct_cmd = app.add_subcommand("reconstruct", "monolithic reconstruction");
  add_common(reconstruct_cmd, common);
  reconstruct_cmd->add_option("--in", recon.in, "projection directory (raw or filtered)")->required();
  reconstruct_cmd->add_option("--out", recon.out, "slice output directory")->required();
  reconstruct_cmd->add_option("--kernel", recon.kernel, "standard or optimized")
      ->check(CLI::IsMember({"standard", "optimized"}));
  reconstruct_cmd->add_option("--batch", recon.batch, "projections per optimized batch")->check(CLI::PositiveNumber);
  reconstruct_cmd->add_flag("--count-ops", recon.count_ops, "count inner products");

  auto* pipeline = app.add_subcommand("pipeline", "reconstruct on an R x C rank grid");
  add_common(pipeline, common);
  pipeline->add_option("--in", pipe.in, "raw projection directory")->required();
  pipeline->add_option("--out", pipe.out, "slice output directory")->required();
  pipeline->add_option("--ranks", pipe.ranks, "number of ranks")->check(CLI::PositiveNumber);
  auto* rows_opt = pipeline->add_option("--rows", pipe.rows, "grid rows")->check(CLI::PositiveNumber);
  auto* sub_opt = pipeline->add_option("--subvol-bytes", pipe.subvol_bytes, "sub-volume budget per rank in bytes")
                      ->check(CLI::PositiveNumber);
  rows_opt->excludes(sub_opt);
  pipeline->add_option("--batch", pipe.batch, "projections per back-projection batch")->check(CLI::PositiveNumber);
  pipeline->add_option("--cores", pipe.cores, "cores shared by all ranks")->check(CLI::NonNegativeNumber);

  auto* model = app.add_subcommand("model", "evaluate the performance model");
  add_common(model, common);
  model->add_option("--params", params, "key=value parameter file")->required();

  auto* bench_cmd = app.add_subcommand("bench", "time the back-projection kernels");
  add_common(bench_cmd, common);
  bench_cmd->add_option("--kernel", bench.kernel, "standard, optimized or both")
      ->check(CLI::IsMember({"standard", "optimized", "both"}));
  bench_cmd->add_option("--repeat", bench.repeat, "runs per kernel; the fastest is reported")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--batch", bench.batch, "projections per optimized batch")->check(CLI::PositiveNumber);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  if (pipeline->parsed() && pipe.rows == 0 && pipe.subvol_bytes == 0) {
    err << "error: pipeline needs --rows or --subvol-bytes\n\n" << pipeline->help();
    return kExitUsage;
  }

  try {
    if (phantom->parsed()) return cmd_phantom(common, out_dir, out);
    if (project->parsed()) return cmd_project(common, out_dir, out);
    if (filter->parsed()) return cmd_filter(common, in_dir, out_dir, out);
    if (reconstruct_cmd->parsed()) return cmd_reconstruct(common, recon, out);
    if (pipeline->parsed()) return cmd_pipeline(common, pipe, out);
    if (model->parsed()) return cmd_model(common, params, out);
    if (bench_cmd->parsed()) return cmd_bench(common, bench, out);
  } catch (const IoError& e) {
    err << "io error: " << e.what() << '\n';
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "io error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitUsage;
}

}  // namespace cbct
