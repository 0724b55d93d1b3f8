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

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tumorroi/pipeline.hpp"
#include "tumorroi/roi.hpp"
#include "tumorroi/volume.hpp"

namespace tumorroi {

enum class DiceFormula {
  /// 2|A n B| / (|A| + |B|)
  Standard,
  /// 2|A n B| / |A u B|; exceeds 1 for overlapping boxes, 2 for identical ones.
  PaperUnion,
};

enum class Cohort { HGG, LGG, Phantom };

std::string_view to_string(DiceFormula f);
DiceFormula parse_dice_formula(std::string_view s);
std::string_view to_string(Cohort c);
Cohort parse_cohort(std::string_view s);

/// 1 where the label is non-zero.
Mask binarize_gt(const Slice& gt_slice);

/// Projection of the binarized ground truth over all slices.
Mask cumulative_gt(const Volume& gt_volume);

/// Minimal box of the cumulative ground truth. Throws NoTumorError if empty.
BBox gt_box(const Mask& cumulative);

/// Box overlap in closed form. Throws ValidationError if a box leaves the
/// width x height image.
double dice_box(const BBox& a, const BBox& b, std::size_t width, std::size_t height,
                DiceFormula formula = DiceFormula::Standard);

struct CaseResult {
  std::string case_id;
  Cohort cohort = Cohort::Phantom;
  ClusterMethod method = ClusterMethod::EM;
  double dice = 0.0;
  /// The pipeline found no tumor; dice is 0 by convention.
  bool failed = false;
  std::optional<BBox> predicted;
  BBox truth;
  double wall_ms = 0.0;
  std::string message;
};

/// Scores run_pipeline(volume) against gt_box(cumulative_gt(gt)). A missing
/// detection is a failed case with dice 0; an empty ground truth throws.
CaseResult evaluate_case(const Volume& volume, const Volume& gt_volume, const AtlasSet& atlases,
                         const PipelineConfig& cfg, DiceFormula formula = DiceFormula::Standard);

struct ManifestEntry {
  std::filesystem::path intensity_path;
  std::filesystem::path gt_path;
  Cohort cohort = Cohort::Phantom;

  std::string case_id() const;
};

/// CSV with header `intensity_path,gt_path,cohort`; relative paths resolve
/// against the manifest's directory. A zero-byte file is an empty manifest.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);

struct CaseError {
  std::string case_id;
  std::string message;
};

struct CohortResult {
  Cohort cohort = Cohort::Phantom;
  ClusterMethod method = ClusterMethod::EM;
  DiceFormula formula = DiceFormula::Standard;
  std::vector<CaseResult> cases;
  double mean_dice = 0.0;
  std::size_t n_failed = 0;
  /// Cases that could not be scored (unreadable files, empty ground truth).
  std::vector<CaseError> errors;
};

struct EvalOptions {
  DiceFormula formula = DiceFormula::Standard;
  /// Build each case's atlases from every other manifest case's ground truth.
  bool leave_one_out = false;
  int jobs = 1;
};

struct EvaluationReport {
  std::vector<CohortResult> cohorts;  // in order of first appearance
  CohortResult overall;
};

/// `atlases` may be null only with leave_one_out.
EvaluationReport evaluate_cohort(const std::vector<ManifestEntry>& manifest, const AtlasSet* atlases,
                                 const PipelineConfig& cfg, const EvalOptions& options);

std::string cohort_csv(const EvaluationReport& report, bool include_timing = true);
nlohmann::json cohort_summary_json(const CohortResult& result);
nlohmann::json evaluation_summary_json(const EvaluationReport& report);

}  // namespace tumorroi
