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
#include <string_view>

#include <nlohmann/json.hpp>

#include "tumorroi/eval.hpp"
#include "tumorroi/pipeline.hpp"

namespace tumorroi::cli {

/// Every tunable of a run. Defaults are the library defaults; a JSON config
/// file overrides them and command-line flags override the file.
struct RunConfig {
  PipelineConfig pipeline;
  DiceFormula formula = DiceFormula::Standard;
  int jobs = 1;
  bool leave_one_out = false;

  void validate() const { pipeline.validate(); }
};

/// Overlays the keys present in `j`; unknown keys raise ConfigError.
///
/// Layout:
///   { "method": "em", "seed": 1, "dice_formula": "standard", "strict": false,
///     "cluster_background": false, "jobs": 1, "loo": false,
///     "cluster": {"k", "max_iter", "tol", "n_restarts", "init"},
///     "enhance": {"gain_up", "gain_down", "atlas_min_count"},
///     "extract": {"area_min", "area_max", "area_max_fraction", "radius_margin",
///                 "vote_threshold", "min_quadrant_pixels",
///                 "representative_slices", "bbox_margin"} }
void apply_config_json(RunConfig& cfg, const nlohmann::json& j);
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);
nlohmann::json config_to_json(const RunConfig& cfg);

ClusterInit parse_init(std::string_view s);
std::string_view to_string(ClusterInit init);

}  // namespace tumorroi::cli
