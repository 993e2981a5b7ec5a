// Copyright 2026 The cbct Authors
// SPDX-License-Identifier: Apache-2.0

#include "cbct/io.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cbct/errors.hpp"

namespace cbct {

const char* to_string(ProjectionKind kind) {
  switch (kind) {
    case ProjectionKind::raw:
      return "raw";
    case ProjectionKind::filtered:
      return "filtered";
    case ProjectionKind::transposed_filtered:
      return "transposed-filtered";
  }
  return "unknown";
}

const char* to_string(VolumeLayout layout) {
  return layout == VolumeLayout::i_major ? "i-major" : "k-major";
}

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

const std::string& require(const KeyValues& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw IoError("missing key '" + key + "'");
  return it->second;
}

double parse_real(const KeyValues& kv, const std::string& key) {
  const std::string& text = require(kv, key);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw IoError("key '" + key + "': '" + text + "' is not a number");
  }
  return value;
}

int parse_int(const KeyValues& kv, const std::string& key) {
  const std::string& text = require(kv, key);
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw IoError("key '" + key + "': '" + text + "' is not an integer");
  }
  return value;
}

ProjectionKind parse_projection_kind(const std::string& s) {
  if (s == "raw") return ProjectionKind::raw;
  if (s == "filtered") return ProjectionKind::filtered;
  if (s == "transposed-filtered") return ProjectionKind::transposed_filtered;
  throw IoError("unknown projection kind '" + s + "'");
}

VolumeLayout parse_layout(const std::string& s) {
  if (s == "i-major") return VolumeLayout::i_major;
  if (s == "k-major") return VolumeLayout::k_major;
  throw IoError("unknown volume layout '" + s + "'");
}

std::string numbered(const char* prefix, int n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%05d.raw", prefix, n);
  return buf;
}

}  // namespace

KeyValues read_key_values(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  KeyValues kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected key=value");
    }
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

void write_key_values(const fs::path& path, const std::vector<std::pair<std::string, std::string>>& entries) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& [k, v] : entries) out << k << '=' << v << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

CbctGeometry geometry_from(const KeyValues& kv) {
  CbctGeometry g;
  g.n_u = parse_int(kv, "n_u");
  g.n_v = parse_int(kv, "n_v");
  g.d_u = parse_real(kv, "d_u");
  g.d_v = parse_real(kv, "d_v");
  g.n_p = parse_int(kv, "n_p");
  g.n_x = parse_int(kv, "n_x");
  g.n_y = parse_int(kv, "n_y");
  g.n_z = parse_int(kv, "n_z");
  g.d_x = parse_real(kv, "d_x");
  g.d_y = parse_real(kv, "d_y");
  g.d_z = parse_real(kv, "d_z");
  g.d = parse_real(kv, "d");
  g.cap_d = parse_real(kv, "cap_d");
  g.validate();
  return g;
}

std::vector<std::pair<std::string, std::string>> geometry_entries(const CbctGeometry& g) {
  return {{"n_u", std::to_string(g.n_u)}, {"n_v", std::to_string(g.n_v)}, {"d_u", format_double(g.d_u)},
          {"d_v", format_double(g.d_v)},  {"n_p", std::to_string(g.n_p)}, {"n_x", std::to_string(g.n_x)},
          {"n_y", std::to_string(g.n_y)}, {"n_z", std::to_string(g.n_z)}, {"d_x", format_double(g.d_x)},
          {"d_y", format_double(g.d_y)},  {"d_z", format_double(g.d_z)},  {"d", format_double(g.d)},
          {"cap_d", format_double(g.cap_d)}};
}

CbctGeometry load_geometry(const fs::path& path) {
  try {
    return geometry_from(read_key_values(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void save_geometry(const fs::path& path, const CbctGeometry& geom) {
  write_key_values(path, geometry_entries(geom));
}

void write_meta(const fs::path& dir, const DatasetMeta& meta) {
  auto entries = geometry_entries(meta.geometry);
  entries.emplace_back("kind", meta.kind == DataKind::projections ? "projections" : "volume");
  entries.emplace_back("sample_type", kSampleType);
  if (meta.kind == DataKind::projections) {
    entries.emplace_back("projection_kind", to_string(meta.projection_kind));
    entries.emplace_back("layout", "row-major");
  } else {
    entries.emplace_back("layout", to_string(meta.layout));
  }
  write_key_values(dir / kMetaFile, entries);
}

DatasetMeta read_meta(const fs::path& dir) {
  const fs::path file = dir / kMetaFile;
  if (!fs::exists(file)) throw IoError("missing metadata: " + file.string() + " not found");
  try {
    const KeyValues kv = read_key_values(file);
    DatasetMeta meta;
    meta.geometry = geometry_from(kv);
    const std::string& kind = require(kv, "kind");
    if (kind == "projections") {
      meta.kind = DataKind::projections;
      meta.projection_kind = parse_projection_kind(require(kv, "projection_kind"));
    } else if (kind == "volume") {
      meta.kind = DataKind::volume;
      meta.layout = parse_layout(require(kv, "layout"));
    } else {
      throw IoError("unknown dataset kind '" + kind + "'");
    }
    if (require(kv, "sample_type") != kSampleType) {
      throw IoError("unsupported sample type '" + require(kv, "sample_type") + "'");
    }
    return meta;
  } catch (const IoError& e) {
    throw IoError(file.string() + ": " + e.what());
  } catch (const GeometryError& e) {
    throw IoError(file.string() + ": " + e.what());
  }
}

std::string projection_file_name(int view) { return numbered("proj", view); }
std::string slice_file_name(int k) { return numbered("slice", k); }

void write_floats(const fs::path& file, std::span<const float> values) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + file.string());
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
  } else {
    for (float f : values) {
      std::uint32_t bits = std::bit_cast<std::uint32_t>(f);
      const char bytes[4] = {static_cast<char>(bits), static_cast<char>(bits >> 8), static_cast<char>(bits >> 16),
                             static_cast<char>(bits >> 24)};
      out.write(bytes, 4);
    }
  }
  if (!out) throw IoError("failed writing " + file.string());
}

std::vector<float> read_floats(const fs::path& file, std::size_t expected_count) {
  std::error_code ec;
  const auto size = fs::file_size(file, ec);
  if (ec) throw IoError("cannot read " + file.string() + ": " + ec.message());
  const std::uintmax_t expected = expected_count * sizeof(float);
  if (size != expected) {
    throw IoError("size mismatch in " + file.string() + ": expected " + std::to_string(expected) +
                  " bytes (4 * " + std::to_string(expected_count) + " samples), found " + std::to_string(size));
  }
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open " + file.string());
  std::vector<float> values(expected_count);
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(expected));
  if (in.gcount() != static_cast<std::streamsize>(expected)) throw IoError("truncated file " + file.string());
  if constexpr (std::endian::native != std::endian::little) {
    for (float& f : values) {
      std::uint32_t bits = std::bit_cast<std::uint32_t>(f);
      bits = (bits >> 24) | ((bits >> 8) & 0xff00u) | ((bits << 8) & 0xff0000u) | (bits << 24);
      f = std::bit_cast<float>(bits);
    }
  }
  return values;
}

void write_projections(const fs::path& dir, std::span<const Projection> stack, const DatasetMeta& meta) {
  const CbctGeometry& g = meta.geometry;
  g.validate();
  if (meta.kind != DataKind::projections) throw ValidationError("metadata does not describe projections");
  if (static_cast<int>(stack.size()) != g.n_p) {
    throw ShapeError("stack holds " + std::to_string(stack.size()) + " projections, metadata says n_p=" +
                     std::to_string(g.n_p));
  }
  fs::create_directories(dir);
  for (int s = 0; s < g.n_p; ++s) {
    const Projection& p = stack[s];
    if (p.width() != g.n_u || p.height() != g.n_v) {
      throw ShapeError("projection " + std::to_string(s) + " is " + std::to_string(p.width()) + "x" +
                       std::to_string(p.height()) + ", metadata says " + std::to_string(g.n_u) + "x" +
                       std::to_string(g.n_v));
    }
    if (p.kind() != meta.projection_kind) {
      throw ValidationError("projection " + std::to_string(s) + " is " + to_string(p.kind()) + ", metadata says " +
                            to_string(meta.projection_kind));
    }
  }
  for (int s = 0; s < g.n_p; ++s) write_floats(dir / projection_file_name(s), stack[s].samples());
  write_meta(dir, meta);
}

Projection read_projection_file(const fs::path& file, int width, int height, ProjectionKind kind) {
  Projection p(width, height, kind);
  p.samples() = read_floats(file, static_cast<std::size_t>(width) * height);
  return p;
}

ProjectionDataset read_projections(const fs::path& dir) {
  ProjectionDataset ds;
  ds.meta = read_meta(dir);
  if (ds.meta.kind != DataKind::projections) throw IoError(dir.string() + " holds a volume, not projections");
  const CbctGeometry& g = ds.meta.geometry;
  ds.stack.reserve(g.n_p);
  for (int s = 0; s < g.n_p; ++s) {
    ds.stack.push_back(read_projection_file(dir / projection_file_name(s), g.n_u, g.n_v, ds.meta.projection_kind));
  }
  return ds;
}

SliceSet write_volume_slices(const Volume& vol, const DatasetMeta& meta, const fs::path& dir) {
  if (vol.layout() != VolumeLayout::i_major) {
    throw ValidationError("slices are written from an i-major volume; reshape the k-major volume first");
  }
  const CbctGeometry& g = meta.geometry;
  if (vol.n_x() != g.n_x || vol.n_y() != g.n_y || vol.n_z() != g.n_z) {
    throw ShapeError("volume shape does not match metadata geometry");
  }
  fs::create_directories(dir);
  const std::size_t plane = static_cast<std::size_t>(vol.n_x()) * vol.n_y();
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < vol.n_z(); ++k) {
    try {
      write_floats(dir / slice_file_name(k), std::span<const float>(vol.samples().data() + k * plane, plane));
    } catch (...) {
#pragma omp critical(cbct_slice_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  DatasetMeta out = meta;
  out.kind = DataKind::volume;
  out.layout = VolumeLayout::i_major;
  write_meta(dir, out);
  return {dir, vol.n_z(), vol.n_x(), vol.n_y()};
}

Volume read_volume_slices(const fs::path& dir) {
  const DatasetMeta meta = read_meta(dir);
  if (meta.kind != DataKind::volume) throw IoError(dir.string() + " holds projections, not a volume");
  const CbctGeometry& g = meta.geometry;
  Volume vol(g.n_x, g.n_y, g.n_z, VolumeLayout::i_major);
  const std::size_t plane = static_cast<std::size_t>(g.n_x) * g.n_y;
  for (int k = 0; k < g.n_z; ++k) {
    const auto values = read_floats(dir / slice_file_name(k), plane);
    std::copy(values.begin(), values.end(), vol.samples().begin() + static_cast<std::ptrdiff_t>(k * plane));
  }
  return vol;
}

}  // namespace cbct
