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

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "tumorroi/volume.hpp"

namespace tumorroi {

/// Min-max rescale to [0,1]. A constant slice maps to all zeros.
Slice normalize(const Slice& slice);

/// Per-slice tumor location atlas: counts(row, col) is the number of training
/// patients whose ground truth is non-zero at that pixel of slice `slice_index`.
class Atlas {
 public:
  Atlas(int slice_index, std::size_t width, std::size_t height, int num_patients,
        std::vector<std::int32_t> counts);

  int slice_index() const noexcept { return slice_index_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  int num_patients() const noexcept { return num_patients_; }
  std::span<const std::int32_t> counts() const noexcept { return counts_; }
  std::int32_t at(std::size_t row, std::size_t col) const noexcept { return counts_[col + row * width_]; }
  std::int32_t max_count() const noexcept;

  friend bool operator==(const Atlas&, const Atlas&) = default;

 private:
  int slice_index_;
  std::size_t width_;
  std::size_t height_;
  int num_patients_;
  std::vector<std::int32_t> counts_;
};

/// Sums binarized ground-truth slices, one per patient. All slices must share
/// dims and slice index.
Atlas build_atlas(std::span<const Slice> gt_slices);

/// Mean of the strictly positive pixels (the skull-stripped brain), 0 if none.
double brain_threshold(const Slice& slice);

struct EnhanceParams {
  double gain_up = 1.25;
  double gain_down = 0.8;
  int atlas_min_count = 1;

  void validate() const;
};

/// Atlas-gated contrast stretch. With t = brain_threshold(slice):
///   atlas count >= min_count, value > t   -> value * gain_up
///   atlas count >= min_count, value <= t  -> value * gain_down
///   atlas count <  min_count, value > 0   -> value * gain_down
/// Zeros stay zero; results are clamped to [0,1].
Slice enhance_contrast(const Slice& slice, const Atlas& atlas, const EnhanceParams& params);

void save_atlas(const Atlas& atlas, const std::filesystem::path& path);
Atlas load_atlas(const std::filesystem::path& path);

nlohmann::json atlas_to_json(const Atlas& atlas);
/// Throws FormatError for malformed documents, ValidationError for invariant
/// violations (e.g. counts above num_patients).
Atlas atlas_from_json(const nlohmann::json& j);

}  // namespace tumorroi
