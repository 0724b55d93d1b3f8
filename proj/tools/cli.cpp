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

#include "cli.hpp"

#include <array>
#include <cstdio>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "run_config.hpp"
#include "tumorroi/errors.hpp"
#include "tumorroi/eval.hpp"
#include "tumorroi/mha_io.hpp"
#include "tumorroi/phantom.hpp"
#include "tumorroi/pipeline.hpp"
#include "tumorroi/preprocess.hpp"

namespace tumorroi::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void setup_logging(int verbosity, bool quiet) {
  static std::once_flag once;
  std::call_once(once, [] { spdlog::set_default_logger(spdlog::stderr_color_mt("tumorroi")); });
  if (quiet) {
    spdlog::set_level(spdlog::level::err);
  } else if (verbosity >= 2) {
    spdlog::set_level(spdlog::level::debug);
  } else if (verbosity == 1) {
    spdlog::set_level(spdlog::level::info);
  } else {
    spdlog::set_level(spdlog::level::warn);
  }
}

std::string numbered(const char* pattern, int value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, value);
  return buf;
}

void write_json(const fs::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

// Pipeline flags shared by `extract` and `eval`. Only flags given on the
// command line override the config file.
struct PipelineFlags {
  std::string config_path;
  std::string method;
  std::uint64_t seed = 0;
  std::string init;
  std::size_t margin = 0;
  double radius_margin = 0.0;
  double area_min = 0.0;
  int vote_threshold = 0;
  std::vector<int> slices;
  int slice_jobs = 1;

  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> overrides;
  CLI::Option* config_opt = nullptr;

  void add_to(CLI::App* app) {
    config_opt = app->add_option("--config", config_path, "JSON run configuration (flags override it)");
    bind(app->add_option("--method", method, "Clustering method")->check(CLI::IsMember({"em", "kmeans"})),
         [this](RunConfig& c) { c.pipeline.method = parse_method(method); });
    bind(app->add_option("--seed", seed, "Clustering seed"), [this](RunConfig& c) { c.pipeline.cluster.seed = seed; });
    bind(app->add_option("--init", init, "Cluster initialization")->check(CLI::IsMember({"range", "quantile", "random"})),
         [this](RunConfig& c) { c.pipeline.cluster.init = parse_init(init); });
    bind(app->add_option("--margin", margin, "Bounding-box margin in pixels"),
         [this](RunConfig& c) { c.pipeline.extract.bbox_margin = margin; });
    bind(app->add_option("--radius-margin", radius_margin, "Disk radius multiplier"),
         [this](RunConfig& c) { c.pipeline.extract.radius_margin = radius_margin; });
    bind(app->add_option("--area-min", area_min, "Smallest accepted component area"),
         [this](RunConfig& c) { c.pipeline.extract.area_min = area_min; });
    bind(app->add_option("--vote-threshold", vote_threshold, "Votes a quadrant needs to win"),
         [this](RunConfig& c) { c.pipeline.extract.vote_threshold = vote_threshold; });
    bind(app->add_option("--slices", slices, "Representative slices (1-based, comma separated)")->delimiter(','),
         [this](RunConfig& c) { c.pipeline.extract.representative_slices = slices; });
    bind(app->add_option("--slice-jobs", slice_jobs, "Slices processed concurrently"),
         [this](RunConfig& c) { c.pipeline.slice_jobs = slice_jobs; });
    bind(app->add_flag("--strict", "Report no tumor instead of falling back to the union of maps"),
         [](RunConfig& c) { c.pipeline.strict = true; });
    bind(app->add_flag("--cluster-background", "Cluster zero-valued pixels too"),
         [](RunConfig& c) { c.pipeline.cluster_background = true; });
  }

  void bind(CLI::Option* opt, std::function<void(RunConfig&)> apply) { overrides.emplace_back(opt, std::move(apply)); }

  RunConfig resolve() const {
    RunConfig cfg;
    if (config_opt->count() > 0) apply_config_file(cfg, config_path);
    for (const auto& [opt, apply] : overrides) {
      if (opt->count() > 0) apply(cfg);
    }
    return cfg;
  }
};

// Ground-truth paths from a manifest or an explicit list.
std::vector<fs::path> gt_paths(const std::string& manifest, const std::vector<std::string>& gts) {
  std::vector<fs::path> out;
  if (!manifest.empty()) {
    for (const auto& e : read_manifest(manifest)) out.push_back(e.gt_path);
  }
  for (const auto& g : gts) out.emplace_back(g);
  if (out.empty()) throw ConfigError("no ground-truth volumes given (empty manifest)");
  return out;
}

struct AtlasBuildArgs {
  std::string manifest;
  std::vector<std::string> gts;
  std::vector<int> slices;
  std::string out_dir;
};

int cmd_atlas_build(const AtlasBuildArgs& a, std::ostream& out) {
  const auto paths = gt_paths(a.manifest, a.gts);
  const std::vector<int> slices = a.slices.empty() ? ExtractParams{}.representative_slices : a.slices;

  // Only the requested slices are kept, one volume in memory at a time.
  std::vector<std::vector<Slice>> per_slice(slices.size());
  for (const auto& p : paths) {
    spdlog::info("reading {}", p.string());
    const Volume gt = read_mha(p, VolumeKind::Label);
    for (std::size_t i = 0; i < slices.size(); ++i) per_slice[i].push_back(extract_slice(gt, slices[i]));
  }
  AtlasSet set;
  for (const auto& s : per_slice) set.add(build_atlas(s));
  set.save_dir(a.out_dir);

  json summary{{"num_patients", paths.size()}, {"atlases", json::array()}};
  for (int s : slices) {
    const Atlas& atlas = *set.find(s);
    summary["atlases"].push_back({{"slice_index", s},
                                  {"file", AtlasSet::file_name(s).string()},
                                  {"num_patients", atlas.num_patients()},
                                  {"max_count", atlas.max_count()}});
  }
  out << summary.dump(2) << "\n";
  return kExitOk;
}

struct ExtractArgs {
  std::string volume;
  std::string atlas_dir;
  std::string report;
  std::string debug_dir;
};

int cmd_extract(const ExtractArgs& a, const PipelineFlags& flags, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = flags.resolve();
  cfg.validate();
  const AtlasSet atlases = AtlasSet::load_dir(a.atlas_dir, cfg.pipeline.extract.representative_slices);
  const Volume volume = read_mha(a.volume);
  const PipelineReport report = analyze_volume(volume, atlases, cfg.pipeline);

  if (!a.report.empty()) {
    json r = report_to_json(report);
    r["config"] = config_to_json(cfg);
    write_json(a.report, r);
  }
  if (!a.debug_dir.empty()) {
    fs::create_directories(a.debug_dir);
    const std::string suffix = "_" + std::string(to_string(cfg.pipeline.method)) + ".json";
    for (const auto& s : report.slices) {
      write_json(fs::path(a.debug_dir) / (numbered("slice_%03d", s.slice_index) + suffix),
                 segmentation_debug_json(s.segmentation, s.slice_index));
    }
  }

  json o{{"method", to_string(cfg.pipeline.method)},
         {"bbox", report.bbox ? json(*report.bbox) : json(nullptr)},
         {"fallback", report.fallback},
         {"warnings", report.warnings}};
  if (!report.bbox) o["warning"] = "no tumor detected";
  out << o.dump(2) << "\n";
  if (!report.bbox && cfg.pipeline.strict) {
    err << "no tumor detected in " << a.volume << "\n";
    return kExitNoTumor;
  }
  return kExitOk;
}

struct EvalArgs {
  std::string manifest;
  std::string atlas_dir;
  std::string out_dir;
  std::string formula;
  int jobs = 1;
  bool no_timing = false;
  CLI::Option* formula_opt = nullptr;
  CLI::Option* jobs_opt = nullptr;
  CLI::Option* loo_opt = nullptr;
};

int cmd_eval(const EvalArgs& a, const PipelineFlags& flags, std::ostream& out) {
  RunConfig cfg = flags.resolve();
  if (a.formula_opt->count() > 0) cfg.formula = parse_dice_formula(a.formula);
  if (a.jobs_opt->count() > 0) cfg.jobs = a.jobs;
  if (a.loo_opt->count() > 0) cfg.leave_one_out = true;
  cfg.validate();

  const auto manifest = read_manifest(a.manifest);
  if (manifest.empty()) throw ConfigError("manifest " + a.manifest + " lists no cases");

  std::optional<AtlasSet> atlases;
  if (cfg.leave_one_out) {
    if (!a.atlas_dir.empty()) spdlog::warn("--atlas-dir is ignored with leave-one-out atlases");
  } else {
    if (a.atlas_dir.empty()) throw ConfigError("--atlas-dir is required unless --loo is given");
    atlases = AtlasSet::load_dir(a.atlas_dir, cfg.pipeline.extract.representative_slices);
  }
  const EvalOptions options{cfg.formula, cfg.leave_one_out, cfg.jobs};
  const EvaluationReport report = evaluate_cohort(manifest, atlases ? &*atlases : nullptr, cfg.pipeline, options);

  const std::string method(to_string(cfg.pipeline.method));
  fs::create_directories(a.out_dir);
  write_file_atomic(fs::path(a.out_dir) / ("cases_" + method + ".csv"), cohort_csv(report, !a.no_timing));
  json summary = evaluation_summary_json(report);
  summary["config"] = config_to_json(cfg);
  write_json(fs::path(a.out_dir) / ("summary_" + method + ".json"), summary);
  out << summary.dump(2) << "\n";
  return kExitOk;
}

struct PhantomArgs {
  std::string spec_file;
  std::string out_dir;
  int count = 1;
  std::uint64_t seed = 1;
  bool randomize = false;
  bool exact = false;
  std::vector<std::size_t> dims;
  double tissue = 0.0;
  double offset = 0.0;
  double noise = 0.0;
  double radius = 0.0;
  std::vector<double> center;
  std::vector<double> radius_range;
  CLI::Option* dims_opt = nullptr;
  CLI::Option* tissue_opt = nullptr;
  CLI::Option* offset_opt = nullptr;
  CLI::Option* noise_opt = nullptr;
  CLI::Option* radius_opt = nullptr;
  CLI::Option* center_opt = nullptr;
  CLI::Option* range_opt = nullptr;
};

int cmd_phantom(const PhantomArgs& a, std::ostream& out) {
  PhantomSpec base;
  if (!a.spec_file.empty()) {
    const std::string text = read_text_file(a.spec_file);
    try {
      json::parse(text).get_to(base);
    } catch (const json::parse_error& e) {
      throw ValidationError(a.spec_file + ": " + e.what());
    }
  }
  if (a.dims_opt->count() > 0) base.dims = {a.dims.at(0), a.dims.at(1), a.dims.at(2)};
  if (a.tissue_opt->count() > 0) base.tissue_intensity = a.tissue;
  if (a.offset_opt->count() > 0) base.tumor.intensity_offset = a.offset;
  if (a.noise_opt->count() > 0) base.noise_sigma = a.noise;
  if (a.radius_opt->count() > 0) base.tumor.radius = a.radius;
  if (a.center_opt->count() > 0) base.tumor.center = {a.center.at(0), a.center.at(1), a.center.at(2)};

  PhantomSampler sampler{.base = base};
  if (a.range_opt->count() > 0) {
    sampler.radius_min = a.radius_range.at(0);
    sampler.radius_max = a.radius_range.at(1);
  }

  // Every spec is checked before anything is written.
  std::vector<PhantomSpec> specs;
  for (int i = 0; i < a.count; ++i) {
    const std::uint64_t seed = a.seed + static_cast<std::uint64_t>(i);
    PhantomSpec spec = base;
    if (a.randomize) {
      spec = sample_phantom_spec(sampler, seed);
    } else {
      spec.seed = seed;
    }
    validate(spec);
    specs.push_back(spec);
  }

  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  const MhaStorage storage = a.exact ? MhaStorage::Exact : MhaStorage::Single;
  std::vector<ManifestEntry> entries;
  json cases = json::array();
  for (int i = 0; i < a.count; ++i) {
    const std::string name = numbered("case_%03d", i);
    spdlog::info("generating {} (seed {})", name, specs[i].seed);
    const Phantom p = generate_phantom(specs[i]);
    ManifestEntry e{dir / (name + ".mha"), dir / (name + "_gt.mha"), Cohort::Phantom};
    write_mha(p.intensity, e.intensity_path, storage);
    write_mha(p.ground_truth, e.gt_path);
    entries.push_back(e);
    cases.push_back({{"case_id", name}, {"spec", specs[i]}});
  }
  write_manifest(dir / "manifest.csv", entries);
  out << json{{"manifest", "manifest.csv"}, {"cases", cases}}.dump(2) << "\n";
  return kExitOk;
}

struct SelectArgs {
  std::string manifest;
  std::vector<std::string> gts;
  int count = 6;
  int first = 32;
  int last = 118;
};

int cmd_select_slices(const SelectArgs& a, std::ostream& out) {
  SliceStatistics stats;
  for (const auto& p : gt_paths(a.manifest, a.gts)) stats.add(read_mha(p, VolumeKind::Label));
  const auto top = stats.top(a.count, a.first, a.last);
  out << json{{"slices", top}, {"first", a.first}, {"last", a.last}}.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Brain-tumor region-of-interest extraction from MR volumes"};
  app.set_version_flag("--version", "tumorroi 0.1.0");
  app.require_subcommand(1);
  // -v/-q are accepted before or after the subcommand.
  app.fallthrough();
  int verbosity = 0;
  bool quiet = false;
  app.add_flag("-v,--verbose", verbosity, "More log output on stderr (repeatable)");
  app.add_flag("-q,--quiet", quiet, "Only errors on stderr");

  auto* atlas = app.add_subcommand("atlas", "Location atlases");
  atlas->require_subcommand(1);
  AtlasBuildArgs ab;
  auto* atlas_build = atlas->add_subcommand("build", "Count tumor pixels per location over training ground truths");
  atlas_build->add_option("--manifest,--gt-manifest", ab.manifest, "Manifest CSV (gt_path column is used)");
  atlas_build->add_option("--gt", ab.gts, "Ground-truth volumes");
  atlas_build->add_option("--slices", ab.slices, "Slices (1-based, comma separated)")->delimiter(',');
  atlas_build->add_option("--out", ab.out_dir, "Output directory")->required();

  PipelineFlags extract_flags;
  ExtractArgs ex;
  auto* extract = app.add_subcommand("extract", "Tumor bounding box of one volume");
  extract->add_option("--volume", ex.volume, "Intensity volume (.mha/.mhd)")->required();
  extract->add_option("--atlas-dir", ex.atlas_dir, "Directory of atlas_NNN.json files")->required();
  extract->add_option("--report", ex.report, "Write the pipeline report JSON here");
  extract->add_option("--debug-dir", ex.debug_dir, "Write per-slice clustering traces here");
  extract_flags.add_to(extract);

  PipelineFlags eval_flags;
  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Box Dice over a manifest of cases");
  eval->add_option("--manifest", ev.manifest, "Manifest CSV")->required();
  eval->add_option("--atlas-dir", ev.atlas_dir, "Directory of atlas_NNN.json files");
  eval->add_option("--out-dir", ev.out_dir, "Output directory")->required();
  ev.formula_opt = eval->add_option("--dice-formula", ev.formula, "Dice formula")
                       ->check(CLI::IsMember({"standard", "paper-union"}));
  ev.jobs_opt = eval->add_option("--jobs", ev.jobs, "Cases evaluated concurrently");
  ev.loo_opt = eval->add_flag("--loo", "Leave-one-out atlases from the other cases");
  eval->add_flag("--no-timing", ev.no_timing, "Omit the wall_ms column");
  eval_flags.add_to(eval);

  PhantomArgs ph;
  auto* phantom = app.add_subcommand("phantom", "Synthetic volumes with a spherical tumor");
  phantom->add_option("--spec", ph.spec_file, "Phantom spec JSON (flags override it)");
  phantom->add_option("--out", ph.out_dir, "Output directory")->required();
  phantom->add_option("--count", ph.count, "Number of cases")->check(CLI::PositiveNumber);
  phantom->add_option("--seed", ph.seed, "Seed of the first case; later cases use seed+1, seed+2, ...");
  phantom->add_flag("--randomize", ph.randomize, "Draw tumor radius and center per case");
  phantom->add_flag("--exact", ph.exact, "Store intensities in double precision");
  ph.dims_opt = phantom->add_option("--dims", ph.dims, "Width,height,depth")->delimiter(',')->expected(3);
  ph.tissue_opt = phantom->add_option("--tissue", ph.tissue, "Tissue intensity");
  ph.offset_opt = phantom->add_option("--tumor-offset", ph.offset, "Tumor intensity above tissue");
  ph.noise_opt = phantom->add_option("--noise", ph.noise, "Noise standard deviation");
  ph.radius_opt = phantom->add_option("--tumor-radius", ph.radius, "Tumor radius in voxels");
  ph.center_opt = phantom->add_option("--tumor-center", ph.center, "Tumor center x,y,z")->delimiter(',')->expected(3);
  ph.range_opt =
      phantom->add_option("--radius-range", ph.radius_range, "Radius range for --randomize")->delimiter(',')->expected(2);

  SelectArgs sel;
  auto* select = app.add_subcommand("select-slices", "Slices with the most tumor pixels over training ground truths");
  select->add_option("--manifest,--gt-manifest", sel.manifest, "Manifest CSV (gt_path column is used)");
  select->add_option("--gt", sel.gts, "Ground-truth volumes");
  select->add_option("--count", sel.count, "Number of slices")->check(CLI::PositiveNumber);
  select->add_option("--first", sel.first, "First candidate slice (1-based)");
  select->add_option("--last", sel.last, "Last candidate slice (1-based)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  setup_logging(verbosity, quiet);

  try {
    if (*atlas_build) return cmd_atlas_build(ab, out);
    if (*extract) return cmd_extract(ex, extract_flags, out, err);
    if (*eval) return cmd_eval(ev, eval_flags, out);
    if (*phantom) return cmd_phantom(ph, out);
    if (*select) return cmd_select_slices(sel, out);
    return kExitUsage;
  } catch (const NoTumorError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNoTumor;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const BoundsError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"tumorroi"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace tumorroi::cli
