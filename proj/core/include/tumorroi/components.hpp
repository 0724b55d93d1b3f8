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

#include <cstddef>
#include <vector>

#include "tumorroi/volume.hpp"

namespace tumorroi {

struct Pixel {
  std::size_t row = 0;
  std::size_t col = 0;
  friend auto operator<=>(const Pixel&, const Pixel&) = default;
};

struct Component {
  /// Member pixels in raster order.
  std::vector<Pixel> pixels;
  std::size_t area = 0;
  double centroid_row = 0.0;
  double centroid_col = 0.0;
  /// Segmentation class the component was taken from (0 if unspecified).
  int label_class = 0;
};

/// Maximal 4- or 8-connected groups of set pixels, largest first; equal areas
/// are ordered by their first pixel in raster order.
///
/// Two-pass labeling with a union-find equivalence table.
std::vector<Component> connected_components(const Mask& mask, int connectivity = 8);

}  // namespace tumorroi
