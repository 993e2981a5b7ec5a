// Copyright 2026 The cbct Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

namespace cbct {

/// i_major: index = k*n_y*n_x + j*n_x + i (slices are contiguous).
/// k_major: index = i*n_y*n_z + j*n_z + k (z-columns are contiguous).
enum class VolumeLayout { i_major, k_major };

const char* to_string(VolumeLayout layout);

class Volume {
 public:
  Volume() = default;
  Volume(int n_x, int n_y, int n_z, VolumeLayout layout = VolumeLayout::i_major)
      : n_x_(n_x), n_y_(n_y), n_z_(n_z), layout_(layout),
        samples_(static_cast<std::size_t>(n_x) * n_y * n_z, 0.0f) {}

  int n_x() const noexcept { return n_x_; }
  int n_y() const noexcept { return n_y_; }
  int n_z() const noexcept { return n_z_; }
  VolumeLayout layout() const noexcept { return layout_; }
  std::size_t size() const noexcept { return samples_.size(); }

  std::size_t index(int i, int j, int k) const noexcept {
    if (layout_ == VolumeLayout::i_major) {
      return (static_cast<std::size_t>(k) * n_y_ + j) * n_x_ + i;
    }
    return (static_cast<std::size_t>(i) * n_y_ + j) * n_z_ + k;
  }
  float& at(int i, int j, int k) { return samples_[index(i, j, k)]; }
  float at(int i, int j, int k) const { return samples_[index(i, j, k)]; }

  std::vector<float>& samples() noexcept { return samples_; }
  const std::vector<float>& samples() const noexcept { return samples_; }

  bool same_shape(const Volume& other) const {
    return n_x_ == other.n_x_ && n_y_ == other.n_y_ && n_z_ == other.n_z_;
  }

 private:
  int n_x_ = 0;
  int n_y_ = 0;
  int n_z_ = 0;
  VolumeLayout layout_ = VolumeLayout::i_major;
  std::vector<float> samples_;
};

}  // namespace cbct
