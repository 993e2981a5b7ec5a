// Copyright 2026 The cbct Authors
// SPDX-License-Identifier: Apache-2.0

#include "cbct/perfmodel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "cbct/errors.hpp"

namespace cbct {

void PerfParams::validate() const {
  auto positive = [](const char* name, double value) {
    if (!(value > 0.0) || !std::isfinite(value)) {
      throw ValidationError(std::string("performance parameter ") + name + " must be positive, got " +
                            std::to_string(value));
    }
  };
  positive("bw_load", bw_load);
  positive("bw_store", bw_store);
  positive("th_flt", th_flt);
  positive("th_bp", th_bp);
  positive("th_allgather", th_allgather);
  positive("th_reduce", th_reduce);
  if (th_trans) positive("th_trans", *th_trans);
  positive("bw_pcie", bw_pcie);
  positive("n_pcie", n_pcie);
  positive("n_gpu_per_node", n_gpu_per_node);
  positive("n_cpu_per_node", n_cpu_per_node);
  positive("n_gpus", n_gpus);
  positive("n_nodes", n_nodes);
  positive("n_u", static_cast<double>(n_u));
  positive("n_v", static_cast<double>(n_v));
  positive("n_p", static_cast<double>(n_p));
  positive("n_x", static_cast<double>(n_x));
  positive("n_y", static_cast<double>(n_y));
  positive("n_z", static_cast<double>(n_z));
  positive("rows", rows);
  positive("cols", cols);
  if (n_gpus != rows * cols) {
    throw ValidationError("n_gpus=" + std::to_string(n_gpus) + " must equal R*C=" + std::to_string(rows * cols));
  }
}

double overlap_factor(double t_flt, double t_allgather, double t_bp, double t_compute) {
  if (!(t_compute > 0.0)) throw ValidationError("t_compute must be positive");
  return (t_flt + t_allgather + t_bp) / t_compute;
}

PerfBreakdown estimate(const PerfParams& p) {
  p.validate();
  const double R = p.rows;
  const double C = p.cols;
  const double proj_bytes = kBytesPerSample * static_cast<double>(p.n_u) * p.n_v * p.n_p;
  const double vol_bytes = kBytesPerSample * static_cast<double>(p.n_x) * p.n_y * p.n_z;
  const double n_p = static_cast<double>(p.n_p);
  const double gpn = p.n_gpu_per_node;

  PerfBreakdown b;
  b.t_load = proj_bytes / (p.bw_load * kGiB);
  b.t_flt = n_p * gpn / (C * R * p.th_flt);
  b.t_allgather = n_p / (C * R * p.th_allgather);
  b.t_h2d = gpn * proj_bytes / (C * p.bw_pcie * kGiB * p.n_pcie);
  b.t_bp = b.t_h2d + n_p / (C * p.th_bp);
  b.t_trans = p.th_trans ? vol_bytes / (R * *p.th_trans * kGiB) : 0.0;
  b.t_d2h = gpn * vol_bytes / (R * p.bw_pcie * kGiB * p.n_pcie);
  b.t_reduce = p.cols > 1 ? vol_bytes / (R * p.th_reduce * kGiB) : 0.0;
  b.t_store = vol_bytes / (p.bw_store * kGiB);
  b.t_compute = std::max({b.t_load, b.t_flt, b.t_allgather, b.t_bp});
  b.t_post = b.t_trans + b.t_d2h + b.t_reduce + b.t_store;
  b.t_runtime = b.t_compute + b.t_post;
  b.delta = overlap_factor(b.t_flt, b.t_allgather, b.t_bp, b.t_compute);
  return b;
}

PerfBreakdown from_measured(const MeasuredTimes& m) {
  PerfBreakdown b;
  b.t_flt = m.t_flt;
  b.t_allgather = m.t_allgather;
  b.t_bp = m.t_bp;
  b.t_compute = m.t_compute;
  b.t_d2h = m.t_d2h;
  b.t_reduce = m.t_reduce;
  b.t_store = m.t_store;
  b.t_post = m.t_d2h + m.t_reduce + m.t_store;
  b.t_runtime = b.t_compute + b.t_post;
  b.delta = overlap_factor(m.t_flt, m.t_allgather, m.t_bp, m.t_compute);
  return b;
}

double gups(long long n_x, long long n_y, long long n_z, long long n_p, double seconds) {
  if (!(seconds > 0.0)) throw ValidationError("GUPS needs a positive time, got " + std::to_string(seconds));
  const double updates = static_cast<double>(n_x) * n_y * n_z * n_p;
  return updates / (seconds * kGiB);
}

namespace {

double to_double(const std::string& key, const std::string& text) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ValidationError("parameter " + key + ": '" + text + "' is not a number");
  }
  return value;
}

long long to_count(const std::string& key, const std::string& text) {
  const double v = to_double(key, text);
  if (v != std::floor(v)) throw ValidationError("parameter " + key + " must be an integer, got " + text);
  return static_cast<long long>(v);
}

}  // namespace

ModelInput parse_model_input(const std::map<std::string, std::string>& kv) {
  ModelInput in;
  if (kv.count("t_compute")) {
    MeasuredTimes m;
    const std::vector<std::pair<const char*, double*>> fields{
        {"t_flt", &m.t_flt},     {"t_allgather", &m.t_allgather}, {"t_bp", &m.t_bp},
        {"t_compute", &m.t_compute}, {"t_d2h", &m.t_d2h},         {"t_reduce", &m.t_reduce},
        {"t_store", &m.t_store}};
    for (const auto& [key, value] : kv) {
      const auto it = std::find_if(fields.begin(), fields.end(), [&](const auto& f) { return key == f.first; });
      if (it == fields.end()) {
        if (key.rfind("t_", 0) == 0) throw ValidationError("unknown measured-time key: " + key);
        continue;  // descriptive keys (volume, n_gpus, ...) are allowed
      }
      *it->second = to_double(key, value);
    }
    for (const char* required : {"t_flt", "t_allgather", "t_bp"})
      if (!kv.count(required)) throw ValidationError(std::string("missing measured time ") + required);
    in.measured = m;
    return in;
  }

  PerfParams p;
  const std::vector<std::pair<const char*, double*>> reals{
      {"bw_load", &p.bw_load}, {"bw_store", &p.bw_store}, {"th_flt", &p.th_flt}, {"th_bp", &p.th_bp},
      {"th_allgather", &p.th_allgather}, {"th_reduce", &p.th_reduce}, {"bw_pcie", &p.bw_pcie}};
  const std::vector<std::pair<const char*, int*>> ints{
      {"n_pcie", &p.n_pcie},   {"n_gpu_per_node", &p.n_gpu_per_node}, {"n_cpu_per_node", &p.n_cpu_per_node},
      {"n_gpus", &p.n_gpus},   {"n_nodes", &p.n_nodes},               {"rows", &p.rows},
      {"cols", &p.cols}};
  const std::vector<std::pair<const char*, long long*>> sizes{{"n_u", &p.n_u}, {"n_v", &p.n_v}, {"n_p", &p.n_p},
                                                              {"n_x", &p.n_x}, {"n_y", &p.n_y}, {"n_z", &p.n_z}};
  bool has_gpus = false, has_nodes = false;
  for (const auto& [key, value] : kv) {
    if (key == "th_trans") {
      p.th_trans = to_double(key, value);
      continue;
    }
    if (auto it = std::find_if(reals.begin(), reals.end(), [&](const auto& f) { return key == f.first; });
        it != reals.end()) {
      *it->second = to_double(key, value);
    } else if (auto it2 = std::find_if(ints.begin(), ints.end(), [&](const auto& f) { return key == f.first; });
               it2 != ints.end()) {
      *it2->second = static_cast<int>(to_count(key, value));
      has_gpus |= key == "n_gpus";
      has_nodes |= key == "n_nodes";
    } else if (auto it3 = std::find_if(sizes.begin(), sizes.end(), [&](const auto& f) { return key == f.first; });
               it3 != sizes.end()) {
      *it3->second = to_count(key, value);
    } else {
      throw ValidationError("unknown performance parameter: " + key);
    }
  }
  if (!has_gpus) p.n_gpus = p.rows * p.cols;
  if (!has_nodes) p.n_nodes = std::max(1, p.n_gpus / std::max(1, p.n_gpu_per_node));
  p.validate();
  in.params = p;
  return in;
}

namespace {

std::string shortest(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

}  // namespace

void write_breakdown(std::ostream& os, const PerfBreakdown& b) {
  const std::vector<std::pair<const char*, double>> rows{
      {"t_load", b.t_load},       {"t_flt", b.t_flt},         {"t_allgather", b.t_allgather},
      {"t_h2d", b.t_h2d},         {"t_bp", b.t_bp},           {"t_trans", b.t_trans},
      {"t_d2h", b.t_d2h},         {"t_reduce", b.t_reduce},   {"t_store", b.t_store},
      {"t_compute", b.t_compute}, {"t_post", b.t_post},       {"t_runtime", b.t_runtime}};
  os << std::left << std::setw(12) << "stage" << std::right << std::setw(14) << "seconds" << '\n';
  for (const auto& [name, value] : rows)
    os << std::left << std::setw(12) << name << std::right << std::setw(14) << std::fixed << std::setprecision(4)
       << value << '\n';
  os << std::left << std::setw(12) << "delta" << std::right << std::setw(14) << std::setprecision(2) << b.delta
     << "\n\n";
  os.unsetf(std::ios::floatfield);
  for (const auto& [name, value] : rows) os << name << '=' << shortest(value) << '\n';
  os << "delta=" << shortest(b.delta) << '\n';
}

}  // namespace cbct
