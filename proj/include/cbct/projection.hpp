// Copyright 2026 The cbct Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cbct {

enum class ProjectionKind { raw, filtered, transposed_filtered };

const char* to_string(ProjectionKind kind);

/// A 2D detector image in row-major order, `width` samples per row.
/// A transposed projection stores detector columns as rows, so its width
/// is the detector height.
class Projection {
 public:
  Projection() = default;
  Projection(int width, int height, ProjectionKind kind = ProjectionKind::raw)
      : width_(width), height_(height), kind_(kind),
        samples_(static_cast<std::size_t>(width) * height, 0.0f) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  ProjectionKind kind() const noexcept { return kind_; }
  void set_kind(ProjectionKind kind) noexcept { kind_ = kind; }

  float& at(int col, int row) { return samples_[static_cast<std::size_t>(row) * width_ + col]; }
  float at(int col, int row) const { return samples_[static_cast<std::size_t>(row) * width_ + col]; }

  std::span<float> row(int r) { return {samples_.data() + static_cast<std::size_t>(r) * width_, static_cast<std::size_t>(width_)}; }
  std::span<const float> row(int r) const {
    return {samples_.data() + static_cast<std::size_t>(r) * width_, static_cast<std::size_t>(width_)};
  }

  std::vector<float>& samples() noexcept { return samples_; }
  const std::vector<float>& samples() const noexcept { return samples_; }
  const float* data() const noexcept { return samples_.data(); }

  bool same_shape(const Projection& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  ProjectionKind kind_ = ProjectionKind::raw;
  std::vector<float> samples_;
};

}  // namespace cbct
