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

#include "tumorroi/volume.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tumorroi/errors.hpp"

namespace tumorroi {

Volume::Volume(Dims dims, std::vector<double> data, VolumeKind kind, Spacing spacing)
    : dims_(dims), data_(std::move(data)), kind_(kind), spacing_(spacing) {
  if (dims_.width == 0 || dims_.height == 0 || dims_.depth == 0) {
    throw ValidationError("volume dimensions must be positive");
  }
  if (data_.size() != dims_.voxels()) {
    throw ValidationError("volume data length " + std::to_string(data_.size()) +
                          " does not match dimensions (" + std::to_string(dims_.voxels()) + ")");
  }
  if (kind_ == VolumeKind::Label) {
    for (double v : data_) {
      if (!(v == 0 || v == 1 || v == 2 || v == 3 || v == 4)) {
        throw ValidationError("label volume contains value outside {0,1,2,3,4}: " +
                              std::to_string(v));
      }
    }
  } else {
    for (double v : data_) {
      if (!std::isfinite(v) || v < 0) {
        throw ValidationError("intensity volume contains negative or non-finite value: " +
                              std::to_string(v));
      }
    }
  }
}

Volume Volume::zeros(Dims dims, VolumeKind kind) {
  return Volume(dims, std::vector<double>(dims.voxels(), 0.0), kind);
}

Slice::Slice(std::size_t width, std::size_t height, int index, std::vector<double> data)
    : width_(width), height_(height), index_(index), data_(std::move(data)) {
  if (width_ == 0 || height_ == 0) throw ValidationError("slice dimensions must be positive");
  if (data_.size() != width_ * height_) {
    throw ValidationError("slice data length does not match width*height");
  }
  if (index_ < 0) throw ValidationError("slice index must be >= 0");
}

Mask::Mask(std::size_t width, std::size_t height)
    : width_(width), height_(height), bits_(width * height, 0) {}

Mask::Mask(std::size_t width, std::size_t height, std::vector<std::uint8_t> bits)
    : width_(width), height_(height), bits_(std::move(bits)) {
  if (bits_.size() != width_ * height_) {
    throw ValidationError("mask data length does not match width*height");
  }
  for (auto& b : bits_) b = b ? 1 : 0;
}

std::size_t Mask::count() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

Slice extract_slice(const Volume& volume, int index) {
  const auto& d = volume.dims();
  if (index < 1 || static_cast<std::size_t>(index) > d.depth) {
    throw BoundsError("slice index " + std::to_string(index) + " outside 1.." +
                      std::to_string(d.depth));
  }
  auto begin = volume.data().begin() + static_cast<std::ptrdiff_t>((index - 1) * d.plane());
  std::vector<double> plane(begin, begin + static_cast<std::ptrdiff_t>(d.plane()));
  return Slice(d.width, d.height, index, std::move(plane));
}

}  // namespace tumorroi
