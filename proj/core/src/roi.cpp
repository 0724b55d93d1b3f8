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

#include "tumorroi/roi.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "tumorroi/errors.hpp"

namespace tumorroi {

TumorMap make_tumor_map(Mask mask, int slice_index) {
  TumorMap m;
  m.empty_flag = mask.empty();
  m.mask = std::move(mask);
  m.slice_index = slice_index;
  return m;
}

void ExtractParams::validate() const {
  if (!(area_min > 0)) throw ValidationError("area_min must be > 0");
  if (area_max && !(*area_max > area_min)) throw ValidationError("area_max must exceed area_min");
  if (!(area_max_fraction > 0 && area_max_fraction <= 1)) {
    throw ValidationError("area_max_fraction must be in (0,1]");
  }
  if (!(radius_margin >= 1.0)) throw ValidationError("radius_margin must be >= 1");
  if (vote_threshold < 1) throw ValidationError("vote_threshold must be >= 1");
  if (min_quadrant_pixels < 1) throw ValidationError("min_quadrant_pixels must be >= 1");
  if (representative_slices.empty()) throw ValidationError("representative slice list is empty");
  for (int s : representative_slices) {
    if (s < 1) throw ValidationError("representative slices are 1-based");
  }
}

double ExtractParams::resolved_area_max(std::size_t brain_pixels) const {
  return area_max ? *area_max : area_max_fraction * static_cast<double>(brain_pixels);
}

TumorMap extract_tumor_map(const LabelMap& labels, const ExtractParams& params, int slice_index) {
  params.validate();
  const std::size_t w = labels.width, h = labels.height;
  TumorMap out = make_tumor_map(Mask(w, h), slice_index);
  if (labels.k < 2) return out;

  const double area_max = params.resolved_area_max(labels.brain_pixels);
  for (int cls = labels.k; cls >= labels.k - 1; --cls) {
    Mask class_mask(w, h);
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t c = 0; c < w; ++c) {
        if (labels.at(r, c) == cls) class_mask.set(r, c);
      }
    }
    auto comps = connected_components(class_mask, 8);
    if (comps.empty()) continue;
    const Component& best = comps.front();
    const double area = static_cast<double>(best.area);
    if (area < params.area_min || area > area_max) continue;

    Mask map(w, h);
    for (const auto& p : best.pixels) map.set(p.row, p.col);
    const double radius = std::ceil(params.radius_margin * std::sqrt(area / std::numbers::pi));
    const double r2 = radius * radius;
    const auto r_lo = static_cast<long>(std::floor(best.centroid_row - radius));
    const auto r_hi = static_cast<long>(std::ceil(best.centroid_row + radius));
    const auto c_lo = static_cast<long>(std::floor(best.centroid_col - radius));
    const auto c_hi = static_cast<long>(std::ceil(best.centroid_col + radius));
    for (long r = std::max(r_lo, 0L); r <= std::min(r_hi, static_cast<long>(h) - 1); ++r) {
      for (long c = std::max(c_lo, 0L); c <= std::min(c_hi, static_cast<long>(w) - 1); ++c) {
        const double dr = static_cast<double>(r) - best.centroid_row;
        const double dc = static_cast<double>(c) - best.centroid_col;
        if (dr * dr + dc * dc <= r2) map.set(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
      }
    }
    out = make_tumor_map(std::move(map), slice_index);
    out.source_class = cls;
    out.component_area = best.area;
    return out;
  }
  return out;
}

int quadrant_of(std::size_t row, std::size_t col, std::size_t width, std::size_t height) noexcept {
  const bool bottom = row >= (height + 1) / 2;
  const bool right = col >= (width + 1) / 2;
  return (bottom ? 2 : 0) + (right ? 1 : 0);
}

namespace {

void check_same_dims(std::span<const TumorMap> maps) {
  if (maps.empty()) throw ValidationError("no tumor maps to combine");
  const auto w = maps.front().mask.width(), h = maps.front().mask.height();
  for (const auto& m : maps) {
    if (m.mask.width() != w || m.mask.height() != h) {
      throw ValidationError("tumor maps have mismatched dimensions");
    }
  }
}

}  // namespace

std::array<int, 4> quadrant_votes(std::span<const TumorMap> maps, const ExtractParams& params) {
  check_same_dims(maps);
  std::array<int, 4> votes{};
  for (const auto& m : maps) {
    std::array<int, 4> hits{};
    const auto w = m.mask.width(), h = m.mask.height();
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t c = 0; c < w; ++c) {
        if (m.mask.at(r, c)) ++hits[quadrant_of(r, c, w, h)];
      }
    }
    for (int q = 0; q < 4; ++q) votes[q] += hits[q] >= params.min_quadrant_pixels ? 1 : 0;
  }
  return votes;
}

FusedMap fuse_maps(std::span<const TumorMap> maps, const ExtractParams& params) {
  FusedMap fused;
  fused.votes = quadrant_votes(maps, params);
  const auto w = maps.front().mask.width(), h = maps.front().mask.height();
  bool any = false;
  for (int q = 0; q < 4; ++q) {
    fused.winning[q] = fused.votes[q] >= params.vote_threshold;
    any = any || fused.winning[q];
  }
  fused.fallback = !any;

  Mask out(w, h);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      if (!fused.fallback && !fused.winning[quadrant_of(r, c, w, h)]) continue;
      for (const auto& m : maps) {
        if (m.mask.at(r, c)) {
          out.set(r, c);
          break;
        }
      }
    }
  }
  fused.map = make_tumor_map(std::move(out), 0);
  return fused;
}

BBox bounding_box(const Mask& mask, std::size_t margin) {
  const std::size_t w = mask.width(), h = mask.height();
  BBox b{h, w, 0, 0, margin};
  bool found = false;
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      if (!mask.at(r, c)) continue;
      found = true;
      b.row_min = std::min(b.row_min, r);
      b.row_max = std::max(b.row_max, r);
      b.col_min = std::min(b.col_min, c);
      b.col_max = std::max(b.col_max, c);
    }
  }
  if (!found) throw NoTumorError("no tumor pixels to bound");
  b.row_min = b.row_min >= margin ? b.row_min - margin : 0;
  b.col_min = b.col_min >= margin ? b.col_min - margin : 0;
  b.row_max = std::min(b.row_max + margin, h - 1);
  b.col_max = std::min(b.col_max + margin, w - 1);
  return b;
}

BBox bounding_box(const TumorMap& map, std::size_t margin) {
  if (map.empty_flag) throw NoTumorError("tumor map is empty");
  return bounding_box(map.mask, margin);
}

void to_json(nlohmann::json& j, const BBox& b) {
  j = nlohmann::json{{"row_min", b.row_min},
                     {"col_min", b.col_min},
                     {"row_max", b.row_max},
                     {"col_max", b.col_max},
                     {"margin_applied", b.margin_applied}};
}

void from_json(const nlohmann::json& j, BBox& b) {
  j.at("row_min").get_to(b.row_min);
  j.at("col_min").get_to(b.col_min);
  j.at("row_max").get_to(b.row_max);
  j.at("col_max").get_to(b.col_max);
  b.margin_applied = j.value("margin_applied", std::size_t{0});
}

std::string bbox_csv_header() { return "row_min,col_min,row_max,col_max,margin_applied"; }

std::string bbox_csv_row(const BBox& b) {
  return std::to_string(b.row_min) + "," + std::to_string(b.col_min) + "," + std::to_string(b.row_max) + "," +
         std::to_string(b.col_max) + "," + std::to_string(b.margin_applied);
}

}  // namespace tumorroi
