// Copyright 2026 The tumorroi Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace tumorroi {

struct Dims {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t depth = 0;

  std::size_t plane() const noexcept { return width * height; }
  std::size_t voxels() const noexcept { return width * height * depth; }
  friend bool operator==(const Dims&, const Dims&) = default;
};

enum class VolumeKind { Intensity, Label };

/// Scalar 3-D grid stored x-fastest: data[x + y*W + z*W*H].
///
/// Intensity volumes hold finite non-negative values; label volumes hold
/// integers in {0,1,2,3,4}. Both are checked on construction and the object
/// is immutable afterwards.
class Volume {
 public:
  using Spacing = std::array<double, 3>;

  Volume(Dims dims, std::vector<double> data, VolumeKind kind = VolumeKind::Intensity,
         Spacing spacing = {1.0, 1.0, 1.0});

  static Volume zeros(Dims dims, VolumeKind kind = VolumeKind::Intensity);

  const Dims& dims() const noexcept { return dims_; }
  VolumeKind kind() const noexcept { return kind_; }
  const Spacing& spacing() const noexcept { return spacing_; }
  std::span<const double> data() const noexcept { return data_; }

  /// 0-based voxel access.
  double at(std::size_t x, std::size_t y, std::size_t z) const noexcept {
    return data_[x + y * dims_.width + z * dims_.plane()];
  }

 private:
  Dims dims_;
  std::vector<double> data_;
  VolumeKind kind_;
  Spacing spacing_;
};

/// 2-D scalar image, row-major with the column fastest (matching the x-fastest
/// volume layout: col == x, row == y). `index` is the 1-based axial slice number
/// it came from, or 0 for images not tied to one slice.
class Slice {
 public:
  Slice(std::size_t width, std::size_t height, int index, std::vector<double> data);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  int index() const noexcept { return index_; }
  std::span<const double> data() const noexcept { return data_; }
  double at(std::size_t row, std::size_t col) const noexcept { return data_[col + row * width_]; }

 private:
  std::size_t width_;
  std::size_t height_;
  int index_;
  std::vector<double> data_;
};

/// Binary image with the same layout as Slice.
class Mask {
 public:
  Mask() = default;
  Mask(std::size_t width, std::size_t height);
  Mask(std::size_t width, std::size_t height, std::vector<std::uint8_t> bits);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return bits_.size(); }
  std::span<const std::uint8_t> data() const noexcept { return bits_; }

  bool at(std::size_t row, std::size_t col) const noexcept { return bits_[col + row * width_] != 0; }
  void set(std::size_t row, std::size_t col, bool on = true) noexcept {
    bits_[col + row * width_] = on ? 1 : 0;
  }

  std::size_t count() const noexcept;
  bool empty() const noexcept { return count() == 0; }

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Axial plane at 1-based `index`. Throws BoundsError outside 1..depth.
Slice extract_slice(const Volume& volume, int index);

}  // namespace tumorroi
