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

#include "tumorroi/eval.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "tumorroi/errors.hpp"
#include "tumorroi/mha_io.hpp"

namespace tumorroi {

std::string_view to_string(DiceFormula f) { return f == DiceFormula::Standard ? "standard" : "paper-union"; }

DiceFormula parse_dice_formula(std::string_view s) {
  if (s == "standard") return DiceFormula::Standard;
  if (s == "paper-union") return DiceFormula::PaperUnion;
  throw ConfigError("unknown dice formula '" + std::string(s) + "' (expected standard or paper-union)");
}

std::string_view to_string(Cohort c) {
  switch (c) {
    case Cohort::HGG:
      return "HGG";
    case Cohort::LGG:
      return "LGG";
    case Cohort::Phantom:
      return "Phantom";
  }
  return "";
}

Cohort parse_cohort(std::string_view s) {
  std::string u(s);
  std::transform(u.begin(), u.end(), u.begin(), [](unsigned char c) { return std::toupper(c); });
  if (u == "HGG") return Cohort::HGG;
  if (u == "LGG") return Cohort::LGG;
  if (u == "PHANTOM") return Cohort::Phantom;
  throw FormatError("unknown cohort '" + std::string(s) + "'", "cohort");
}

Mask binarize_gt(const Slice& gt) {
  std::vector<std::uint8_t> bits(gt.size());
  const auto d = gt.data();
  for (std::size_t i = 0; i < d.size(); ++i) bits[i] = d[i] != 0 ? 1 : 0;
  return Mask(gt.width(), gt.height(), std::move(bits));
}

Mask cumulative_gt(const Volume& gt) {
  const auto& d = gt.dims();
  std::vector<std::uint8_t> bits(d.plane(), 0);
  const auto data = gt.data();
  for (std::size_t z = 0; z < d.depth; ++z) {
    const std::size_t base = z * d.plane();
    for (std::size_t i = 0; i < d.plane(); ++i) {
      if (data[base + i] != 0) bits[i] = 1;
    }
  }
  return Mask(d.width, d.height, std::move(bits));
}

BBox gt_box(const Mask& cumulative) {
  if (cumulative.empty()) throw NoTumorError("ground truth contains no tumor");
  return bounding_box(cumulative, 0);
}

double dice_box(const BBox& a, const BBox& b, std::size_t width, std::size_t height, DiceFormula formula) {
  for (const BBox* box : {&a, &b}) {
    if (box->row_min > box->row_max || box->col_min > box->col_max || box->row_max >= height ||
        box->col_max >= width) {
      throw ValidationError("box outside the image");
    }
  }
  const std::size_t r0 = std::max(a.row_min, b.row_min), r1 = std::min(a.row_max, b.row_max);
  const std::size_t c0 = std::max(a.col_min, b.col_min), c1 = std::min(a.col_max, b.col_max);
  const double inter = (r0 <= r1 && c0 <= c1) ? static_cast<double>((r1 - r0 + 1) * (c1 - c0 + 1)) : 0.0;
  const double sa = static_cast<double>(a.area()), sb = static_cast<double>(b.area());
  const double denom = formula == DiceFormula::Standard ? sa + sb : sa + sb - inter;
  return 2.0 * inter / denom;
}

CaseResult evaluate_case(const Volume& volume, const Volume& gt_volume, const AtlasSet& atlases,
                         const PipelineConfig& cfg, DiceFormula formula) {
  const auto t0 = std::chrono::steady_clock::now();
  if (volume.dims().width != gt_volume.dims().width || volume.dims().height != gt_volume.dims().height) {
    throw ValidationError("intensity and ground-truth volumes differ in size");
  }
  CaseResult res;
  res.method = cfg.method;
  res.truth = gt_box(cumulative_gt(gt_volume));
  PipelineReport report = analyze_volume(volume, atlases, cfg);
  if (report.bbox) {
    res.predicted = report.bbox;
    res.dice = dice_box(*report.bbox, res.truth, volume.dims().width, volume.dims().height, formula);
  } else {
    res.failed = true;
    res.dice = 0.0;
    res.message = report.warnings.empty() ? "no tumor detected" : report.warnings.back();
  }
  res.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

std::string ManifestEntry::case_id() const {
  std::string stem = intensity_path.filename().string();
  for (const char* ext : {".mha", ".mhd"}) {
    if (stem.size() > 4 && stem.ends_with(ext)) stem.resize(stem.size() - 4);
  }
  return stem;
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    const auto a = field.find_first_not_of(" \t\r");
    const auto b = field.find_last_not_of(" \t\r");
    out.push_back(a == std::string::npos ? std::string{} : field.substr(a, b - a + 1));
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

CohortResult summarize(Cohort cohort, ClusterMethod method, DiceFormula formula, std::vector<CaseResult> cases,
                       std::vector<CaseError> errors) {
  CohortResult r;
  r.cohort = cohort;
  r.method = method;
  r.formula = formula;
  r.cases = std::move(cases);
  r.errors = std::move(errors);
  double sum = 0.0;
  for (const auto& c : r.cases) {
    sum += c.dice;
    r.n_failed += c.failed ? 1 : 0;
  }
  r.mean_dice = r.cases.empty() ? 0.0 : sum / static_cast<double>(r.cases.size());
  return r;
}

}  // namespace

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::string line;
  if (!std::getline(in, line)) return {};
  const auto header = split_csv(line);
  if (header.size() < 3 || header[0] != "intensity_path" || header[1] != "gt_path" || header[2] != "cohort") {
    throw FormatError("manifest header must be intensity_path,gt_path,cohort");
  }
  const auto base = path.parent_path();
  std::vector<ManifestEntry> out;
  while (std::getline(in, line)) {
    const auto fields = split_csv(line);
    if (fields.empty() || (fields.size() == 1 && fields[0].empty())) continue;
    if (fields.size() < 3) throw FormatError("manifest row has fewer than 3 fields: " + line);
    ManifestEntry e;
    e.intensity_path = fields[0];
    e.gt_path = fields[1];
    if (e.intensity_path.is_relative()) e.intensity_path = base / e.intensity_path;
    if (e.gt_path.is_relative()) e.gt_path = base / e.gt_path;
    e.cohort = parse_cohort(fields[2]);
    out.push_back(std::move(e));
  }
  return out;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
  std::string text = "intensity_path,gt_path,cohort\n";
  const auto base = path.parent_path();
  for (const auto& e : entries) {
    text += e.intensity_path.lexically_relative(base).string() + "," +
            e.gt_path.lexically_relative(base).string() + "," + std::string(to_string(e.cohort)) + "\n";
  }
  write_file_atomic(path, text);
}

EvaluationReport evaluate_cohort(const std::vector<ManifestEntry>& manifest, const AtlasSet* atlases,
                                 const PipelineConfig& cfg, const EvalOptions& options) {
  cfg.validate();
  if (manifest.empty()) throw ValidationError("empty manifest");
  if (!options.leave_one_out && atlases == nullptr) throw ConfigError("atlases are required without leave-one-out");
  if (options.jobs < 1) throw ValidationError("jobs must be >= 1");
  const auto& slices = cfg.extract.representative_slices;
  const std::size_t n = manifest.size();

  std::vector<std::optional<CaseError>> errors(n);
  // Leave-one-out: per-case ground-truth slices and their running totals.
  std::vector<std::vector<Slice>> gt_slices(n);
  std::vector<std::vector<std::int32_t>> totals(slices.size());
  std::size_t atlas_patients = 0;
  std::size_t width = 0, height = 0;
  if (options.leave_one_out) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        const Volume gt = read_mha(manifest[i].gt_path, VolumeKind::Label);
        std::vector<Slice> per;
        for (int s : slices) per.push_back(extract_slice(gt, s));
        if (atlas_patients == 0) {
          width = gt.dims().width;
          height = gt.dims().height;
          for (auto& t : totals) t.assign(width * height, 0);
        } else if (gt.dims().width != width || gt.dims().height != height) {
          throw ValidationError("ground truth size differs from the rest of the manifest");
        }
        for (std::size_t s = 0; s < slices.size(); ++s) {
          const auto d = per[s].data();
          for (std::size_t p = 0; p < d.size(); ++p) totals[s][p] += d[p] != 0 ? 1 : 0;
        }
        gt_slices[i] = std::move(per);
        ++atlas_patients;
      } catch (const std::exception& e) {
        errors[i] = CaseError{manifest[i].case_id(), e.what()};
      }
    }
    if (atlas_patients < 2) throw ConfigError("leave-one-out needs at least two readable ground truths");
  }

  auto loo_atlases = [&](std::size_t i) {
    AtlasSet set;
    for (std::size_t s = 0; s < slices.size(); ++s) {
      std::vector<std::int32_t> counts = totals[s];
      const auto d = gt_slices[i][s].data();
      for (std::size_t p = 0; p < d.size(); ++p) counts[p] -= d[p] != 0 ? 1 : 0;
      set.add(Atlas(slices[s], width, height, static_cast<int>(atlas_patients - 1), std::move(counts)));
    }
    return set;
  };

  std::vector<std::optional<CaseResult>> results(n);
  auto run_case = [&](std::size_t i) {
    if (errors[i]) return;
    const auto& entry = manifest[i];
    try {
      const Volume vol = read_mha(entry.intensity_path, VolumeKind::Intensity);
      const Volume gt = read_mha(entry.gt_path, VolumeKind::Label);
      CaseResult r = options.leave_one_out ? evaluate_case(vol, gt, loo_atlases(i), cfg, options.formula)
                                           : evaluate_case(vol, gt, *atlases, cfg, options.formula);
      r.case_id = entry.case_id();
      r.cohort = entry.cohort;
      results[i] = std::move(r);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      spdlog::error("case {}: {}", entry.case_id(), e.what());
      errors[i] = CaseError{entry.case_id(), e.what()};
    }
  };

  if (options.jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) run_case(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr fatal;
    std::mutex fatal_mu;
    {
      std::vector<std::jthread> workers;
      for (int t = 0; t < options.jobs; ++t) {
        workers.emplace_back([&] {
          for (std::size_t i = next++; i < n; i = next++) {
            try {
              run_case(i);
            } catch (...) {
              std::lock_guard lock(fatal_mu);
              if (!fatal) fatal = std::current_exception();
            }
          }
        });
      }
    }
    if (fatal) std::rethrow_exception(fatal);
  }

  std::vector<Cohort> order;
  std::map<Cohort, std::pair<std::vector<CaseResult>, std::vector<CaseError>>> grouped;
  std::vector<CaseResult> all_cases;
  std::vector<CaseError> all_errors;
  for (std::size_t i = 0; i < n; ++i) {
    const Cohort c = manifest[i].cohort;
    if (std::find(order.begin(), order.end(), c) == order.end()) order.push_back(c);
    if (results[i]) {
      grouped[c].first.push_back(*results[i]);
      all_cases.push_back(*results[i]);
    } else if (errors[i]) {
      grouped[c].second.push_back(*errors[i]);
      all_errors.push_back(*errors[i]);
    }
  }

  EvaluationReport report;
  for (Cohort c : order) {
    auto& [cases, errs] = grouped[c];
    report.cohorts.push_back(summarize(c, cfg.method, options.formula, std::move(cases), std::move(errs)));
  }
  report.overall = summarize(order.size() == 1 ? order.front() : Cohort::Phantom, cfg.method, options.formula,
                             std::move(all_cases), std::move(all_errors));
  return report;
}

std::string cohort_csv(const EvaluationReport& report, bool include_timing) {
  std::string out = include_timing ? "case_id,cohort,method,dice,failed,wall_ms\n" : "case_id,cohort,method,dice,failed\n";
  for (const auto& cohort : report.cohorts) {
    for (const auto& c : cohort.cases) {
      out += c.case_id + "," + std::string(to_string(c.cohort)) + "," + std::string(to_string(c.method)) + "," +
             format_double(c.dice) + "," + (c.failed ? "1" : "0");
      if (include_timing) out += "," + format_double(c.wall_ms);
      out += "\n";
    }
  }
  return out;
}

nlohmann::json cohort_summary_json(const CohortResult& r) {
  nlohmann::json errors = nlohmann::json::array();
  for (const auto& e : r.errors) errors.push_back({{"case_id", e.case_id}, {"error", e.message}});
  bool above_one = false;
  for (const auto& c : r.cases) above_one = above_one || c.dice > 1.0;
  return {{"cohort", to_string(r.cohort)},
          {"method", to_string(r.method)},
          {"formula", to_string(r.formula)},
          {"mean_dice", r.mean_dice},
          {"n", r.cases.size()},
          {"n_failed", r.n_failed},
          {"n_errors", r.errors.size()},
          {"dice_above_one", above_one},
          {"errors", errors}};
}

nlohmann::json evaluation_summary_json(const EvaluationReport& report) {
  nlohmann::json cohorts = nlohmann::json::array();
  for (const auto& c : report.cohorts) cohorts.push_back(cohort_summary_json(c));
  nlohmann::json overall = cohort_summary_json(report.overall);
  overall["cohort"] = "all";
  return {{"cohorts", cohorts}, {"overall", overall}};
}

}  // namespace tumorroi
