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

#include "run_config.hpp"

#include <set>
#include <string>

#include "tumorroi/errors.hpp"
#include "tumorroi/mha_io.hpp"

namespace tumorroi::cli {
namespace {

void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError("config section '" + where + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) throw ConfigError("unknown config key '" + where + key + "'");
  }
}

template <typename T>
void take(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) j.at(key).get_to(out);
}

}  // namespace

ClusterInit parse_init(std::string_view s) {
  if (s == "range") return ClusterInit::RangeSpread;
  if (s == "quantile") return ClusterInit::QuantileSpread;
  if (s == "random") return ClusterInit::RandomFromData;
  throw ConfigError("unknown init '" + std::string(s) + "' (expected range, quantile or random)");
}

std::string_view to_string(ClusterInit init) {
  switch (init) {
    case ClusterInit::RangeSpread:
      return "range";
    case ClusterInit::QuantileSpread:
      return "quantile";
    case ClusterInit::RandomFromData:
      return "random";
  }
  return "";
}

void apply_config_json(RunConfig& cfg, const nlohmann::json& j) {
  check_keys(j,
             {"method", "seed", "dice_formula", "strict", "cluster_background", "jobs", "loo", "cluster", "enhance",
              "extract"},
             "");
  try {
    auto& p = cfg.pipeline;
    if (j.contains("method")) p.method = parse_method(j.at("method").get<std::string>());
    take(j, "seed", p.cluster.seed);
    if (j.contains("dice_formula")) cfg.formula = parse_dice_formula(j.at("dice_formula").get<std::string>());
    take(j, "strict", p.strict);
    take(j, "cluster_background", p.cluster_background);
    take(j, "jobs", cfg.jobs);
    take(j, "loo", cfg.leave_one_out);
    if (j.contains("cluster")) {
      const auto& c = j.at("cluster");
      check_keys(c, {"k", "max_iter", "tol", "n_restarts", "init"}, "cluster.");
      take(c, "k", p.cluster.k);
      take(c, "max_iter", p.cluster.max_iter);
      take(c, "tol", p.cluster.tol);
      take(c, "n_restarts", p.cluster.n_restarts);
      if (c.contains("init")) p.cluster.init = parse_init(c.at("init").get<std::string>());
    }
    if (j.contains("enhance")) {
      const auto& e = j.at("enhance");
      check_keys(e, {"gain_up", "gain_down", "atlas_min_count"}, "enhance.");
      take(e, "gain_up", p.enhance.gain_up);
      take(e, "gain_down", p.enhance.gain_down);
      take(e, "atlas_min_count", p.enhance.atlas_min_count);
    }
    if (j.contains("extract")) {
      const auto& x = j.at("extract");
      check_keys(x,
                 {"area_min", "area_max", "area_max_fraction", "radius_margin", "vote_threshold",
                  "min_quadrant_pixels", "representative_slices", "bbox_margin"},
                 "extract.");
      take(x, "area_min", p.extract.area_min);
      if (x.contains("area_max")) {
        if (x.at("area_max").is_null()) {
          p.extract.area_max.reset();
        } else {
          p.extract.area_max = x.at("area_max").get<double>();
        }
      }
      take(x, "area_max_fraction", p.extract.area_max_fraction);
      take(x, "radius_margin", p.extract.radius_margin);
      take(x, "vote_threshold", p.extract.vote_threshold);
      take(x, "min_quadrant_pixels", p.extract.min_quadrant_pixels);
      take(x, "representative_slices", p.extract.representative_slices);
      take(x, "bbox_margin", p.extract.bbox_margin);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
}

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  apply_config_json(cfg, j);
}

nlohmann::json config_to_json(const RunConfig& cfg) {
  const auto& p = cfg.pipeline;
  return {{"method", to_string(p.method)},
          {"seed", p.cluster.seed},
          {"dice_formula", to_string(cfg.formula)},
          {"strict", p.strict},
          {"cluster_background", p.cluster_background},
          {"jobs", cfg.jobs},
          {"loo", cfg.leave_one_out},
          {"cluster",
           {{"k", p.cluster.k},
            {"max_iter", p.cluster.max_iter},
            {"tol", p.cluster.tol},
            {"n_restarts", p.cluster.n_restarts},
            {"init", to_string(p.cluster.init)}}},
          {"enhance",
           {{"gain_up", p.enhance.gain_up},
            {"gain_down", p.enhance.gain_down},
            {"atlas_min_count", p.enhance.atlas_min_count}}},
          {"extract",
           {{"area_min", p.extract.area_min},
            {"area_max", p.extract.area_max ? nlohmann::json(*p.extract.area_max) : nlohmann::json(nullptr)},
            {"area_max_fraction", p.extract.area_max_fraction},
            {"radius_margin", p.extract.radius_margin},
            {"vote_threshold", p.extract.vote_threshold},
            {"min_quadrant_pixels", p.extract.min_quadrant_pixels},
            {"representative_slices", p.extract.representative_slices},
            {"bbox_margin", p.extract.bbox_margin}}}};
}

}  // namespace tumorroi::cli
