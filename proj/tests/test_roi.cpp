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

#include <cmath>
#include <random>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "tumorroi/errors.hpp"
#include "tumorroi/roi.hpp"

namespace tumorroi {
namespace {

constexpr double kPi = 3.14159265358979323846;

LabelMap label_map(std::size_t w, std::size_t h, int fill = 1) {
  LabelMap lm;
  lm.width = w;
  lm.height = h;
  lm.k = 5;
  lm.labels.assign(w * h, fill);
  lm.brain_pixels = fill ? w * h : 0;
  return lm;
}

void paint(LabelMap& lm, std::size_t r0, std::size_t c0, std::size_t r1, std::size_t c1, int label) {
  for (std::size_t r = r0; r <= r1; ++r) {
    for (std::size_t c = c0; c <= c1; ++c) lm.labels[c + r * lm.width] = label;
  }
}

ExtractParams bounds(double lo, double hi) {
  ExtractParams p;
  p.area_min = lo;
  p.area_max = hi;
  return p;
}

TumorMap map_with(std::size_t w, std::size_t h, std::initializer_list<Pixel> pixels, int index = 0) {
  Mask m(w, h);
  for (const auto& p : pixels) m.set(p.row, p.col);
  return make_tumor_map(std::move(m), index);
}

// ---- tumor map extraction ----

TEST(ExtractTumorMap, SmallBlobGetsDisk) {
  LabelMap lm = label_map(30, 30);
  paint(lm, 10, 10, 11, 14, 5);  // 2x5 = 10 pixels
  ExtractParams p = bounds(5, 1000);
  p.radius_margin = 1.0;
  const TumorMap m = extract_tumor_map(lm, p, 66);
  EXPECT_FALSE(m.empty_flag);
  EXPECT_EQ(m.source_class, 5);
  EXPECT_EQ(m.component_area, 10u);
  EXPECT_EQ(m.slice_index, 66);
  const double cr = 10.5, cc = 12.0;
  const double radius = std::ceil(std::sqrt(10 / kPi));
  EXPECT_EQ(radius, 2.0);
  for (std::size_t r = 0; r < 30; ++r) {
    for (std::size_t c = 0; c < 30; ++c) {
      const bool in_blob = lm.labels[c + r * 30] == 5;
      const bool in_disk = (r - cr) * (r - cr) + (c - cc) * (c - cc) <= radius * radius;
      ASSERT_EQ(m.mask.at(r, c), in_blob || in_disk) << r << "," << c;
    }
  }
}

TEST(ExtractTumorMap, OversizedBrightClassFallsToLabelFour) {
  LabelMap lm = label_map(40, 40, 5);  // label 5 covers everything...
  paint(lm, 5, 5, 12, 12, 4);          // ...except a 64 pixel label-4 blob
  const TumorMap m = extract_tumor_map(lm, bounds(20, 400), 87);
  EXPECT_FALSE(m.empty_flag);
  EXPECT_EQ(m.source_class, 4);
  EXPECT_EQ(m.component_area, 64u);
}

TEST(ExtractTumorMap, NoSuitableComponentGivesBlackMap) {
  LabelMap lm = label_map(20, 20);
  paint(lm, 0, 0, 0, 1, 5);  // 2 pixels, too small
  paint(lm, 5, 5, 5, 7, 4);  // 3 pixels, too small
  const TumorMap m = extract_tumor_map(lm, bounds(10, 100));
  EXPECT_TRUE(m.empty_flag);
  EXPECT_EQ(m.mask.count(), 0u);
  EXPECT_EQ(m.source_class, 0);
}

TEST(ExtractTumorMap, DefaultUpperBoundIsHalfTheBrain) {
  LabelMap lm = label_map(20, 20);
  paint(lm, 0, 0, 9, 19, 5);  // exactly half of 400 brain pixels
  EXPECT_EQ(extract_tumor_map(lm, ExtractParams{}).source_class, 5);
  paint(lm, 10, 0, 10, 0, 5);  // one more pixel tips it over
  EXPECT_NE(extract_tumor_map(lm, ExtractParams{}).source_class, 5);
}

TEST(ExtractTumorMap, PrefersSuitableLabelFive) {
  std::mt19937_64 rng(31);
  std::discrete_distribution<int> lab({0.0, 0.6, 0.1, 0.1, 0.1, 0.1});
  const ExtractParams p = bounds(3, 60);
  for (int t = 0; t < 100; ++t) {
    LabelMap lm = label_map(24, 24);
    for (auto& l : lm.labels) l = lab(rng);
    const TumorMap m = extract_tumor_map(lm, p);
    Mask five(24, 24);
    for (std::size_t i = 0; i < lm.labels.size(); ++i) {
      if (lm.labels[i] == 5) five.set(i / 24, i % 24);
    }
    const auto comps = connected_components(five, 8);
    const bool suitable = !comps.empty() && comps[0].area >= 3 && comps[0].area <= 60;
    if (suitable) {
      ASSERT_EQ(m.source_class, 5);
      for (const auto& px : comps[0].pixels) ASSERT_TRUE(m.mask.at(px.row, px.col));
    }
    ASSERT_EQ(m.empty_flag, m.mask.count() == 0);
  }
}

TEST(ExtractParams, Validation) {
  EXPECT_NO_THROW(ExtractParams{}.validate());
  ExtractParams p;
  p.area_min = 0;
  EXPECT_THROW(p.validate(), ValidationError);
  p = bounds(10, 10);
  EXPECT_THROW(p.validate(), ValidationError);
  p = {};
  p.radius_margin = 0.9;
  EXPECT_THROW(p.validate(), ValidationError);
  p = {};
  p.vote_threshold = 0;
  EXPECT_THROW(p.validate(), ValidationError);
  p = {};
  p.representative_slices = {};
  EXPECT_THROW(p.validate(), ValidationError);
}

// ---- votes ----

TEST(Quadrants, CeilSplitForOddSizes) {
  EXPECT_EQ(quadrant_of(0, 0, 5, 5), 0);
  EXPECT_EQ(quadrant_of(2, 2, 5, 5), 0);
  EXPECT_EQ(quadrant_of(2, 3, 5, 5), 1);
  EXPECT_EQ(quadrant_of(3, 2, 5, 5), 2);
  EXPECT_EQ(quadrant_of(3, 3, 5, 5), 3);
  EXPECT_EQ(quadrant_of(119, 120, 240, 240), 1);
}

TEST(QuadrantVotes, AllEmpty) {
  const std::vector<TumorMap> maps(6, map_with(10, 10, {}));
  EXPECT_EQ(quadrant_votes(maps, {}), (std::array<int, 4>{0, 0, 0, 0}));
}

TEST(QuadrantVotes, ExactlyThreeMapsInQuadrantTwo) {
  std::vector<TumorMap> maps;
  for (int i = 0; i < 3; ++i) maps.push_back(map_with(10, 10, {{1, 7}, {2, 8}}));
  for (int i = 0; i < 3; ++i) maps.push_back(map_with(10, 10, {}));
  const auto votes = quadrant_votes(maps, {});
  // Independent count.
  std::array<int, 4> want{};
  for (const auto& m : maps) {
    std::array<bool, 4> hit{};
    for (std::size_t r = 0; r < 10; ++r) {
      for (std::size_t c = 0; c < 10; ++c) {
        if (m.mask.at(r, c)) hit[(r >= 5) * 2 + (c >= 5)] = true;
      }
    }
    for (int q = 0; q < 4; ++q) want[q] += hit[q];
  }
  EXPECT_EQ(votes, want);
  EXPECT_EQ(votes, (std::array<int, 4>{0, 3, 0, 0}));
}

TEST(QuadrantVotes, MinQuadrantPixels) {
  const std::vector<TumorMap> maps{map_with(10, 10, {{1, 1}}), map_with(10, 10, {{1, 1}, {1, 2}})};
  ExtractParams p;
  p.min_quadrant_pixels = 2;
  EXPECT_EQ(quadrant_votes(maps, p), (std::array<int, 4>{1, 0, 0, 0}));
}

TEST(QuadrantVotes, MismatchedDims) {
  const std::vector<TumorMap> maps{map_with(10, 10, {}), map_with(10, 9, {})};
  EXPECT_THROW(quadrant_votes(maps, {}), ValidationError);
}

TEST(QuadrantVotes, BoundedAndMonotone) {
  std::mt19937_64 rng(32);
  for (int t = 0; t < 50; ++t) {
    std::vector<TumorMap> maps;
    for (int i = 0; i < 6; ++i) {
      maps.push_back(make_tumor_map(Mask(16, 12, testing::random_bits(rng, 16 * 12, 0.01))));
    }
    const auto before = quadrant_votes(maps, {});
    for (int v : before) ASSERT_TRUE(v >= 0 && v <= 6);
    std::uniform_int_distribution<std::size_t> pick(0, 16 * 12 - 1);
    for (auto& m : maps) {
      const std::size_t i = pick(rng);
      m.mask.set(i / 16, i % 16);
      m = make_tumor_map(m.mask);
    }
    const auto after = quadrant_votes(maps, {});
    for (int q = 0; q < 4; ++q) ASSERT_GE(after[q], before[q]);
  }
}

// ---- fusion ----

// Six maps shaped after the voting figure: a lesion in the lower half seen
// on several slices, plus one spurious detection in the top-left quadrant.
std::vector<TumorMap> voting_fixture() {
  std::vector<TumorMap> maps;
  maps.push_back(map_with(20, 20, {{14, 8}, {14, 9}, {15, 9}}));
  maps.push_back(map_with(20, 20, {{14, 9}, {14, 10}, {15, 11}}));
  maps.push_back(map_with(20, 20, {{13, 10}, {14, 11}}));
  maps.push_back(map_with(20, 20, {{3, 3}, {3, 4}}));
  maps.push_back(map_with(20, 20, {}));
  maps.push_back(map_with(20, 20, {{15, 12}}));
  return maps;
}

TEST(FuseMaps, SixIdenticalMaps) {
  const TumorMap m = map_with(10, 10, {{1, 1}, {2, 2}, {2, 3}});
  const std::vector<TumorMap> maps(6, m);
  const FusedMap f = fuse_maps(maps, {});
  EXPECT_EQ(f.map.mask, m.mask);
  EXPECT_FALSE(f.fallback);
  EXPECT_EQ(f.votes, (std::array<int, 4>{6, 0, 0, 0}));
}

TEST(FuseMaps, SingleDetectionFallsBackToUnion) {
  std::vector<TumorMap> maps(5, map_with(10, 10, {}));
  maps.push_back(map_with(10, 10, {{1, 8}}));
  const FusedMap f = fuse_maps(maps, {});
  EXPECT_TRUE(f.fallback);
  EXPECT_EQ(f.map.mask, maps.back().mask);
  EXPECT_FALSE(f.map.empty_flag);
}

TEST(FuseMaps, AllEmptyIsEmpty) {
  const std::vector<TumorMap> maps(6, map_with(10, 10, {}));
  const FusedMap f = fuse_maps(maps, {});
  EXPECT_TRUE(f.fallback);
  EXPECT_TRUE(f.map.empty_flag);
}

TEST(FuseMaps, VotingFixtureDropsLoneDetection) {
  const auto maps = voting_fixture();
  const FusedMap f = fuse_maps(maps, {});
  EXPECT_EQ(f.votes, (std::array<int, 4>{1, 0, 2, 3}));
  EXPECT_EQ(f.winning, (std::array<bool, 4>{false, false, true, true}));
  EXPECT_FALSE(f.fallback);
  for (std::size_t r = 0; r < 20; ++r) {
    for (std::size_t c = 0; c < 20; ++c) {
      bool any = false;
      for (const auto& m : maps) any = any || m.mask.at(r, c);
      ASSERT_EQ(f.map.mask.at(r, c), any && r >= 10) << r << "," << c;
    }
  }
  EXPECT_FALSE(f.map.mask.at(3, 3));
}

TEST(FuseMaps, OutputWithinUnionAndWinningQuadrants) {
  std::mt19937_64 rng(33);
  for (int t = 0; t < 50; ++t) {
    std::vector<TumorMap> maps;
    for (int i = 0; i < 6; ++i) {
      maps.push_back(make_tumor_map(Mask(15, 13, testing::random_bits(rng, 15 * 13, 0.02))));
    }
    const FusedMap f = fuse_maps(maps, {});
    for (std::size_t r = 0; r < 13; ++r) {
      for (std::size_t c = 0; c < 15; ++c) {
        if (!f.map.mask.at(r, c)) continue;
        bool any = false;
        for (const auto& m : maps) any = any || m.mask.at(r, c);
        ASSERT_TRUE(any);
        if (!f.fallback) {
          ASSERT_TRUE(f.winning[quadrant_of(r, c, 15, 13)]);
        }
      }
    }
  }
}

// ---- bounding box ----

TEST(BoundingBox, SinglePixel) {
  Mask m(10, 10);
  m.set(4, 7);
  EXPECT_EQ(bounding_box(m), (BBox{4, 7, 4, 7, 0}));
}

TEST(BoundingBox, EnvelopeOfExtremes) {
  Mask m(40, 40);
  m.set(10, 20);
  m.set(30, 5);
  EXPECT_EQ(bounding_box(m), (BBox{10, 5, 30, 20, 0}));
}

TEST(BoundingBox, MarginIsClamped) {
  Mask m(10, 8);
  m.set(1, 8);
  EXPECT_EQ(bounding_box(m, 3), (BBox{0, 5, 4, 9, 3}));
}

TEST(BoundingBox, EmptyThrowsNoTumor) {
  EXPECT_THROW(bounding_box(Mask(5, 5)), NoTumorError);
  EXPECT_THROW(bounding_box(make_tumor_map(Mask(5, 5))), NoTumorError);
}

TEST(BoundingBox, MatchesMinMaxScan) {
  std::mt19937_64 rng(34);
  for (int t = 0; t < 50; ++t) {
    const auto bits = testing::random_bits(rng, 37 * 29, 0.005);
    oracle::Rect want{};
    if (!oracle::min_max_scan(bits, 37, 29, 3, want)) continue;
    const BBox b = bounding_box(Mask(37, 29, bits), 3);
    EXPECT_EQ(b.row_min, want.row_min);
    EXPECT_EQ(b.col_min, want.col_min);
    EXPECT_EQ(b.row_max, want.row_max);
    EXPECT_EQ(b.col_max, want.col_max);
    EXPECT_EQ(b.margin_applied, 3u);
  }
}

TEST(BoundingBox, MinimalAtZeroMargin) {
  std::mt19937_64 rng(35);
  for (int t = 0; t < 50; ++t) {
    const Mask m(20, 20, testing::random_bits(rng, 400, 0.02));
    if (m.empty()) continue;
    const BBox b = bounding_box(m);
    bool top = false, bottom = false, left = false, right = false;
    for (std::size_t r = 0; r < 20; ++r) {
      for (std::size_t c = 0; c < 20; ++c) {
        if (!m.at(r, c)) continue;
        ASSERT_TRUE(b.contains(r, c));
        top |= r == b.row_min;
        bottom |= r == b.row_max;
        left |= c == b.col_min;
        right |= c == b.col_max;
      }
    }
    EXPECT_TRUE(top && bottom && left && right);
  }
}

TEST(BBox, JsonAndCsv) {
  const BBox b{3, 4, 10, 12, 2};
  const nlohmann::json j = b;
  EXPECT_EQ(j.at("row_min"), 3);
  EXPECT_EQ(j.at("col_max"), 12);
  EXPECT_EQ(j.get<BBox>(), b);
  EXPECT_EQ(bbox_csv_header(), "row_min,col_min,row_max,col_max,margin_applied");
  EXPECT_EQ(bbox_csv_row(b), "3,4,10,12,2");
  EXPECT_EQ(b.area(), 8u * 9u);
}

}  // namespace
}  // namespace tumorroi
