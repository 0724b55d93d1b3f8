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

#include "tumorroi/components.hpp"

#include <algorithm>
#include <cstdint>

#include "tumorroi/errors.hpp"

namespace tumorroi {
namespace {

class DisjointSet {
 public:
  std::uint32_t make() {
    parent_.push_back(static_cast<std::uint32_t>(parent_.size()));
    return parent_.back();
  }

  std::uint32_t find(std::uint32_t x) {
    std::uint32_t root = x;
    while (parent_[root] != root) root = parent_[root];
    while (parent_[x] != root) {
      const std::uint32_t next = parent_[x];
      parent_[x] = root;
      x = next;
    }
    return root;
  }

  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    // Keep the smaller label as root so provisional labels stay in raster order.
    if (a < b) {
      parent_[b] = a;
    } else {
      parent_[a] = b;
    }
  }

 private:
  std::vector<std::uint32_t> parent_;
};

}  // namespace

std::vector<Component> connected_components(const Mask& mask, int connectivity) {
  if (connectivity != 4 && connectivity != 8) {
    throw ValidationError("connectivity must be 4 or 8");
  }
  const std::size_t w = mask.width(), h = mask.height();
  constexpr std::uint32_t kNone = 0xFFFFFFFFu;
  std::vector<std::uint32_t> label(w * h, kNone);
  DisjointSet ds;

  // First pass: provisional labels from the already-visited neighbours
  // (west, north-west, north, north-east).
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      if (!mask.at(r, c)) continue;
      std::uint32_t current = kNone;
      auto visit = [&](std::size_t rr, std::size_t cc) {
        const std::uint32_t l = label[cc + rr * w];
        if (l == kNone) return;
        if (current == kNone) {
          current = l;
        } else {
          ds.unite(current, l);
        }
      };
      if (c > 0) visit(r, c - 1);
      if (r > 0) {
        visit(r - 1, c);
        if (connectivity == 8) {
          if (c > 0) visit(r - 1, c - 1);
          if (c + 1 < w) visit(r - 1, c + 1);
        }
      }
      label[c + r * w] = current == kNone ? ds.make() : current;
    }
  }

  // Second pass: resolve roots and gather pixels.
  std::vector<Component> out;
  std::vector<std::int64_t> slot;
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      const std::uint32_t l = label[c + r * w];
      if (l == kNone) continue;
      const std::uint32_t root = ds.find(l);
      if (root >= slot.size()) slot.resize(root + 1, -1);
      if (slot[root] < 0) {
        slot[root] = static_cast<std::int64_t>(out.size());
        out.emplace_back();
      }
      auto& comp = out[static_cast<std::size_t>(slot[root])];
      comp.pixels.push_back({r, c});
      comp.centroid_row += static_cast<double>(r);
      comp.centroid_col += static_cast<double>(c);
    }
  }
  for (auto& comp : out) {
    comp.area = comp.pixels.size();
    comp.centroid_row /= static_cast<double>(comp.area);
    comp.centroid_col /= static_cast<double>(comp.area);
  }
  std::stable_sort(out.begin(), out.end(), [](const Component& a, const Component& b) {
    if (a.area != b.area) return a.area > b.area;
    return a.pixels.front() < b.pixels.front();
  });
  return out;
}

}  // namespace tumorroi
