// Copyright 2026 The cbct Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cbct/geometry.hpp"
#include "cbct/projection.hpp"
#include "cbct/volume.hpp"

namespace cbct {

namespace fs = std::filesystem;

using KeyValues = std::map<std::string, std::string>;

/// `key=value` per line; blank lines and lines starting with '#' are
/// skipped. Throws IoError if unreadable or malformed.
KeyValues read_key_values(const fs::path& path);
void write_key_values(const fs::path& path, const std::vector<std::pair<std::string, std::string>>& entries);

/// Shortest text that parses back to the same double.
std::string format_double(double value);

CbctGeometry geometry_from(const KeyValues& kv);
std::vector<std::pair<std::string, std::string>> geometry_entries(const CbctGeometry& geom);
CbctGeometry load_geometry(const fs::path& path);
void save_geometry(const fs::path& path, const CbctGeometry& geom);

enum class DataKind { projections, volume };

/// Sidecar describing a dataset directory. Samples are always IEEE-754
/// single precision, little-endian.
struct DatasetMeta {
  CbctGeometry geometry;
  DataKind kind = DataKind::projections;
  ProjectionKind projection_kind = ProjectionKind::raw;  ///< projections only
  VolumeLayout layout = VolumeLayout::i_major;            ///< volumes only

  bool operator==(const DatasetMeta&) const = default;
};

inline constexpr const char* kMetaFile = "dataset.meta";
inline constexpr const char* kSampleType = "float32le";

void write_meta(const fs::path& dir, const DatasetMeta& meta);
/// Throws IoError("missing metadata ...") when the sidecar is absent.
DatasetMeta read_meta(const fs::path& dir);

std::string projection_file_name(int view);
std::string slice_file_name(int k);

/// One `proj_#####.raw` per view plus the sidecar.
void write_projections(const fs::path& dir, std::span<const Projection> stack, const DatasetMeta& meta);

struct ProjectionDataset {
  std::vector<Projection> stack;
  DatasetMeta meta;
};
ProjectionDataset read_projections(const fs::path& dir);

/// Reads one projection of a dataset; errors name the file.
Projection read_projection_file(const fs::path& file, int width, int height, ProjectionKind kind);

struct SliceSet {
  fs::path directory;
  int n_z = 0;
  int n_x = 0;
  int n_y = 0;
};

/// n_z files `slice_#####.raw`, slice k holding plane k row-major (n_x
/// fastest). Needs an i-major volume; throws ValidationError otherwise.
SliceSet write_volume_slices(const Volume& vol, const DatasetMeta& meta, const fs::path& dir);
Volume read_volume_slices(const fs::path& dir);

/// Writes floats as little-endian IEEE-754 regardless of host order.
void write_floats(const fs::path& file, std::span<const float> values);
std::vector<float> read_floats(const fs::path& file, std::size_t expected_count);

}  // namespace cbct
