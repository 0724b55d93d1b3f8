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
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "tumorroi/clustering.hpp"
#include "tumorroi/components.hpp"
#include "tumorroi/volume.hpp"

namespace tumorroi {

/// Axial slices that carry the largest tumor areas in the training statistics.
inline const std::vector<int> kRepresentativeSlices{50, 66, 87, 89, 92, 110};

struct TumorMap {
  Mask mask;
  int slice_index = 0;
  bool empty_flag = true;
  /// Segmentation class of the accepted component, 0 when nothing was found.
  int source_class = 0;
  /// Area of the accepted component before the disk was added.
  std::size_t component_area = 0;
};

TumorMap make_tumor_map(Mask mask, int slice_index = 0);

/// Inclusive 0-based pixel rectangle.
struct BBox {
  std::size_t row_min = 0;
  std::size_t col_min = 0;
  std::size_t row_max = 0;
  std::size_t col_max = 0;
  std::size_t margin_applied = 0;

  std::size_t rows() const noexcept { return row_max - row_min + 1; }
  std::size_t cols() const noexcept { return col_max - col_min + 1; }
  std::size_t area() const noexcept { return rows() * cols(); }
  bool contains(std::size_t r, std::size_t c) const noexcept {
    return r >= row_min && r <= row_max && c >= col_min && c <= col_max;
  }
  bool contains(const BBox& o) const noexcept {
    return o.row_min >= row_min && o.row_max <= row_max && o.col_min >= col_min && o.col_max <= col_max;
  }
  friend bool operator==(const BBox&, const BBox&) = default;
};

struct ExtractParams {
  double area_min = 50.0;
  /// Absolute upper area bound; when unset, area_max_fraction of the slice's
  /// brain pixel count is used.
  std::optional<double> area_max;
  double area_max_fraction = 0.5;
  /// Disk radius = ceil(radius_margin * sqrt(area / pi)).
  double radius_margin = 1.0;
  int vote_threshold = 2;
  int min_quadrant_pixels = 1;
  std::vector<int> representative_slices = kRepresentativeSlices;
  std::size_t bbox_margin = 0;

  void validate() const;
  double resolved_area_max(std::size_t brain_pixels) const;
};

/// Cascade over the two brightest classes (k, then k-1): take the largest
/// 8-connected component; if its area lies in [area_min, area_max] the map is
/// that component plus the filled disk at its centroid. Otherwise the map is
/// empty.
TumorMap extract_tumor_map(const LabelMap& labels, const ExtractParams& params, int slice_index = 0);

/// Quadrant index 0..3 (top-left, top-right, bottom-left, bottom-right) using
/// a ceil split, so odd sizes give the extra row/column to the top/left.
int quadrant_of(std::size_t row, std::size_t col, std::size_t width, std::size_t height) noexcept;

/// votes[q] = number of maps with >= min_quadrant_pixels set pixels in quadrant q.
std::array<int, 4> quadrant_votes(std::span<const TumorMap> maps, const ExtractParams& params);

struct FusedMap {
  TumorMap map;
  std::array<int, 4> votes{};
  std::array<bool, 4> winning{};
  /// No quadrant reached the threshold; map is the plain union of all inputs.
  bool fallback = false;
};

FusedMap fuse_maps(std::span<const TumorMap> maps, const ExtractParams& params);

/// Minimal box around the set pixels, grown by `margin` and clamped to the
/// image. Throws NoTumorError on an empty mask.
BBox bounding_box(const Mask& mask, std::size_t margin = 0);
BBox bounding_box(const TumorMap& map, std::size_t margin = 0);

void to_json(nlohmann::json& j, const BBox& b);
void from_json(const nlohmann::json& j, BBox& b);
std::string bbox_csv_header();
std::string bbox_csv_row(const BBox& b);

}  // namespace tumorroi
