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

#include "tumorroi/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <future>
#include <numeric>

#include "tumorroi/errors.hpp"

namespace tumorroi {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct SliceTimings {
  double extract = 0, normalize = 0, enhance = 0, segment = 0, tumor_map = 0;
};

SliceReport process_slice(const Volume& volume, const Atlas& atlas, int index, const PipelineConfig& cfg,
                          SliceTimings& t) {
  auto t0 = Clock::now();
  const Slice raw = extract_slice(volume, index);
  t.extract = ms_since(t0);

  t0 = Clock::now();
  const Slice norm = normalize(raw);
  t.normalize = ms_since(t0);

  t0 = Clock::now();
  const Slice enhanced = enhance_contrast(norm, atlas, cfg.enhance);
  t.enhance = ms_since(t0);

  t0 = Clock::now();
  SliceReport rep;
  rep.slice_index = index;
  rep.segmentation = segment_slice(enhanced, cfg.method, cfg.cluster, cfg.cluster_background);
  t.segment = ms_since(t0);

  t0 = Clock::now();
  rep.tumor_map = extract_tumor_map(rep.segmentation.labels, cfg.extract, index);
  t.tumor_map = ms_since(t0);

  rep.brain_pixels = rep.segmentation.labels.brain_pixels;
  rep.tumor_pixels = rep.tumor_map.mask.count();
  rep.source_class = rep.tumor_map.source_class;
  rep.empty = rep.tumor_map.empty_flag;
  rep.degenerate_segmentation = rep.segmentation.labels.degenerate;
  return rep;
}

}  // namespace

void PipelineConfig::validate() const {
  cluster.validate();
  enhance.validate();
  extract.validate();
  if (slice_jobs < 1) throw ValidationError("slice_jobs must be >= 1");
}

AtlasSet::AtlasSet(std::vector<Atlas> atlases) {
  for (auto& a : atlases) add(std::move(a));
}

void AtlasSet::add(Atlas atlas) {
  const int idx = atlas.slice_index();
  atlases_.insert_or_assign(idx, std::move(atlas));
}

const Atlas* AtlasSet::find(int slice_index) const {
  auto it = atlases_.find(slice_index);
  return it == atlases_.end() ? nullptr : &it->second;
}

void AtlasSet::require(std::span<const int> slices) const {
  for (int s : slices) {
    if (!find(s)) throw ConfigError("no atlas for representative slice " + std::to_string(s));
  }
}

std::vector<int> AtlasSet::slices() const {
  std::vector<int> out;
  for (const auto& [k, v] : atlases_) out.push_back(k);
  return out;
}

std::filesystem::path AtlasSet::file_name(int slice_index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "atlas_%03d.json", slice_index);
  return buf;
}

AtlasSet AtlasSet::load_dir(const std::filesystem::path& dir, std::span<const int> slices) {
  AtlasSet set;
  for (int s : slices) {
    const auto path = dir / file_name(s);
    if (!std::filesystem::exists(path)) {
      throw ConfigError("no atlas for representative slice " + std::to_string(s) + " (expected " +
                        path.string() + ")");
    }
    Atlas a = load_atlas(path);
    if (a.slice_index() != s) {
      throw ConfigError(path.string() + " holds the atlas of slice " + std::to_string(a.slice_index()));
    }
    set.add(std::move(a));
  }
  return set;
}

void AtlasSet::save_dir(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  for (const auto& [idx, atlas] : atlases_) save_atlas(atlas, dir / file_name(idx));
}

AtlasSet build_atlases(std::span<const Volume> gt_volumes, std::span<const int> slices) {
  if (gt_volumes.empty()) throw ValidationError("no ground-truth volumes for the atlas");
  AtlasSet set;
  for (int s : slices) {
    std::vector<Slice> gts;
    gts.reserve(gt_volumes.size());
    for (const auto& v : gt_volumes) gts.push_back(extract_slice(v, s));
    set.add(build_atlas(gts));
  }
  return set;
}

PipelineReport analyze_volume(const Volume& volume, const AtlasSet& atlases, const PipelineConfig& cfg) {
  cfg.validate();
  const auto& slices = cfg.extract.representative_slices;
  for (int s : slices) {
    if (static_cast<std::size_t>(s) > volume.dims().depth) {
      throw ConfigError("representative slice " + std::to_string(s) + " exceeds volume depth " +
                        std::to_string(volume.dims().depth));
    }
  }
  atlases.require(slices);

  PipelineReport report;
  report.method = cfg.method;
  report.slices.resize(slices.size());
  std::vector<SliceTimings> timings(slices.size());

  if (cfg.slice_jobs > 1) {
    std::vector<std::future<void>> pending;
    std::size_t next = 0;
    while (next < slices.size() || !pending.empty()) {
      while (next < slices.size() && pending.size() < static_cast<std::size_t>(cfg.slice_jobs)) {
        const std::size_t i = next++;
        pending.push_back(std::async(std::launch::async, [&, i] {
          report.slices[i] = process_slice(volume, *atlases.find(slices[i]), slices[i], cfg, timings[i]);
        }));
      }
      pending.front().get();
      pending.erase(pending.begin());
    }
  } else {
    for (std::size_t i = 0; i < slices.size(); ++i) {
      report.slices[i] = process_slice(volume, *atlases.find(slices[i]), slices[i], cfg, timings[i]);
    }
  }

  auto t0 = Clock::now();
  std::vector<TumorMap> maps;
  maps.reserve(report.slices.size());
  for (const auto& s : report.slices) maps.push_back(s.tumor_map);
  FusedMap fused = fuse_maps(maps, cfg.extract);
  const double fuse_ms = ms_since(t0);

  for (auto& s : report.slices) {
    const auto w = s.tumor_map.mask.width(), h = s.tumor_map.mask.height();
    std::array<int, 4> hits{};
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t c = 0; c < w; ++c) {
        if (s.tumor_map.mask.at(r, c)) ++hits[quadrant_of(r, c, w, h)];
      }
    }
    for (int q = 0; q < 4; ++q) s.quadrant_hits[q] = hits[q] >= cfg.extract.min_quadrant_pixels;
  }

  report.votes = fused.votes;
  report.winning = fused.winning;
  report.fallback = fused.fallback;
  if (fused.fallback && !fused.map.empty_flag) {
    report.warnings.emplace_back("no quadrant reached the vote threshold; using the union of all tumor maps");
    spdlog::warn("{}", report.warnings.back());
  }

  t0 = Clock::now();
  if (fused.fallback && cfg.strict) {
    report.warnings.emplace_back("strict mode: no winning quadrant, no tumor reported");
  } else if (!fused.map.empty_flag) {
    report.bbox = bounding_box(fused.map, cfg.extract.bbox_margin);
  } else {
    report.warnings.emplace_back("no tumor detected in any representative slice");
  }
  const double bbox_ms = ms_since(t0);
  report.fused = std::move(fused.map);

  SliceTimings total;
  for (const auto& t : timings) {
    total.extract += t.extract;
    total.normalize += t.normalize;
    total.enhance += t.enhance;
    total.segment += t.segment;
    total.tumor_map += t.tumor_map;
  }
  report.timings_ms = {{"extract_slice", total.extract}, {"normalize", total.normalize},
                       {"enhance_contrast", total.enhance}, {"segment", total.segment},
                       {"tumor_map", total.tumor_map},     {"fuse", fuse_ms},
                       {"bounding_box", bbox_ms}};
  return report;
}

PipelineResult run_pipeline(const Volume& volume, const AtlasSet& atlases, const PipelineConfig& cfg) {
  PipelineReport report = analyze_volume(volume, atlases, cfg);
  if (!report.bbox) {
    throw NoTumorError("no tumor detected", report_to_json(report, false).dump());
  }
  BBox box = *report.bbox;
  return PipelineResult{box, std::move(report)};
}

nlohmann::json report_to_json(const PipelineReport& report, bool include_timings) {
  nlohmann::json slices = nlohmann::json::array();
  for (const auto& s : report.slices) {
    nlohmann::json contribution = nlohmann::json::array();
    for (int q = 0; q < 4; ++q) {
      if (s.quadrant_hits[q]) contribution.push_back(q + 1);
    }
    slices.push_back({{"slice_index", s.slice_index},
                      {"votes_contribution", contribution},
                      {"tumor_pixel_count", s.tumor_pixels},
                      {"brain_pixel_count", s.brain_pixels},
                      {"source_class", s.source_class},
                      {"flags", {{"empty", s.empty}, {"degenerate_segmentation", s.degenerate_segmentation}}}});
  }
  nlohmann::json winning = nlohmann::json::array();
  for (int q = 0; q < 4; ++q) {
    if (report.winning[q]) winning.push_back(q + 1);
  }
  nlohmann::json j{{"method", to_string(report.method)},
                   {"slices", slices},
                   {"quadrant_votes", report.votes},
                   {"winning_quadrants", winning},
                   {"fallback", report.fallback},
                   {"bbox", report.bbox ? nlohmann::json(*report.bbox) : nlohmann::json(nullptr)},
                   {"warnings", report.warnings}};
  if (include_timings) {
    nlohmann::json t = nlohmann::json::object();
    for (const auto& [stage, ms] : report.timings_ms) t[stage] = ms;
    j["timings_ms"] = t;
  }
  return j;
}

void SliceStatistics::add(const Volume& gt) {
  const auto& d = gt.dims();
  if (counts_.size() < d.depth) counts_.resize(d.depth, 0);
  const auto data = gt.data();
  for (std::size_t z = 0; z < d.depth; ++z) {
    const auto plane = data.subspan(z * d.plane(), d.plane());
    counts_[z] += std::count_if(plane.begin(), plane.end(), [](double v) { return v != 0; });
  }
}

std::vector<int> SliceStatistics::top(int count, int first, int last) const {
  if (count < 1) throw ValidationError("slice count must be >= 1");
  if (first < 1 || last < first) throw ValidationError("invalid slice range");
  std::vector<int> candidates;
  for (int s = first; s <= last && static_cast<std::size_t>(s) <= counts_.size(); ++s) candidates.push_back(s);
  if (candidates.size() < static_cast<std::size_t>(count)) {
    throw ValidationError("fewer candidate slices than requested");
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](int a, int b) { return counts_[a - 1] > counts_[b - 1]; });
  candidates.resize(count);
  std::sort(candidates.begin(), candidates.end());
  return candidates;
}

std::vector<int> select_representatives(std::span<const Volume> gt_volumes, int count, int first, int last) {
  if (gt_volumes.empty()) throw ValidationError("no ground-truth volumes given");
  SliceStatistics stats;
  for (const auto& v : gt_volumes) stats.add(v);
  return stats.top(count, first, last);
}

}  // namespace tumorroi
