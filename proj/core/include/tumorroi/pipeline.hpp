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
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tumorroi/clustering.hpp"
#include "tumorroi/preprocess.hpp"
#include "tumorroi/roi.hpp"
#include "tumorroi/volume.hpp"

namespace tumorroi {

struct PipelineConfig {
  ClusterMethod method = ClusterMethod::EM;
  ClusterConfig cluster;
  EnhanceParams enhance;
  ExtractParams extract;
  bool cluster_background = false;
  /// Treat a vote without any winning quadrant as "no tumor" instead of
  /// falling back to the union of all maps.
  bool strict = false;
  /// Representative slices processed concurrently (1 = sequential).
  int slice_jobs = 1;

  void validate() const;
};

/// Atlases keyed by 1-based slice index.
class AtlasSet {
 public:
  AtlasSet() = default;
  explicit AtlasSet(std::vector<Atlas> atlases);

  void add(Atlas atlas);
  const Atlas* find(int slice_index) const;
  /// Throws ConfigError naming the first slice without an atlas.
  void require(std::span<const int> slices) const;
  std::vector<int> slices() const;
  std::size_t size() const noexcept { return atlases_.size(); }

  static std::filesystem::path file_name(int slice_index);
  /// Loads `atlas_NNN.json` for every requested slice.
  static AtlasSet load_dir(const std::filesystem::path& dir, std::span<const int> slices);
  void save_dir(const std::filesystem::path& dir) const;

 private:
  std::map<int, Atlas> atlases_;
};

/// Builds one atlas per slice from binarized ground-truth volumes.
AtlasSet build_atlases(std::span<const Volume> gt_volumes, std::span<const int> slices);

struct SliceReport {
  int slice_index = 0;
  std::size_t brain_pixels = 0;
  std::size_t tumor_pixels = 0;
  int source_class = 0;
  bool empty = true;
  bool degenerate_segmentation = false;
  /// Quadrants in which this map has >= min_quadrant_pixels pixels.
  std::array<bool, 4> quadrant_hits{};
  TumorMap tumor_map;
  Segmentation segmentation;
};

struct PipelineReport {
  ClusterMethod method = ClusterMethod::EM;
  std::vector<SliceReport> slices;
  std::array<int, 4> votes{};
  std::array<bool, 4> winning{};
  bool fallback = false;
  TumorMap fused;
  std::optional<BBox> bbox;
  std::vector<std::string> warnings;
  /// Wall time per stage, summed over slices.
  std::vector<std::pair<std::string, double>> timings_ms;
};

/// Runs every stage and records the outcome; a missing tumor is reported
/// through an empty `bbox` rather than an exception. Throws ConfigError when a
/// representative slice is deeper than the volume or has no atlas.
PipelineReport analyze_volume(const Volume& volume, const AtlasSet& atlases, const PipelineConfig& cfg);

struct PipelineResult {
  BBox bbox;
  PipelineReport report;
};

/// As analyze_volume, but throws NoTumorError (with the report as JSON
/// diagnostics) when no box could be produced.
PipelineResult run_pipeline(const Volume& volume, const AtlasSet& atlases, const PipelineConfig& cfg);

nlohmann::json report_to_json(const PipelineReport& report, bool include_timings = true);

/// Accumulates tumor pixel counts per axial slice over training ground truths.
class SliceStatistics {
 public:
  void add(const Volume& gt_volume);
  std::span<const std::int64_t> counts() const noexcept { return counts_; }
  /// The `count` slices (1-based) in [first, last] with the most tumor pixels,
  /// ties to the lower index, returned ascending.
  std::vector<int> top(int count, int first = 32, int last = 118) const;

 private:
  std::vector<std::int64_t> counts_;
};

std::vector<int> select_representatives(std::span<const Volume> gt_volumes, int count, int first = 32,
                                        int last = 118);

}  // namespace tumorroi
