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

#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "tumorroi/errors.hpp"
#include "tumorroi/eval.hpp"
#include "tumorroi/mha_io.hpp"
#include "tumorroi/phantom.hpp"

namespace tumorroi {
namespace {

using testing::kSmallSlices;
using testing::small_phantom_spec;

TEST(Binarize, NonZeroLabels) {
  const Slice s(3, 2, 4, {0, 1, 2, 4, 0, 0});
  const Mask m = binarize_gt(s);
  EXPECT_EQ(m, Mask(3, 2, {0, 1, 1, 1, 0, 0}));
}

TEST(Binarize, MatchesPointwiseOracle) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> label(0, 4);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> v(30 * 20);
    for (auto& x : v) x = label(rng);
    const Mask m = binarize_gt(Slice(30, 20, 1, v));
    for (std::size_t i = 0; i < v.size(); ++i) ASSERT_EQ(m.data()[i], v[i] != 0 ? 1 : 0);
  }
}

TEST(CumulativeGt, SingleSliceAndEmpty) {
  EXPECT_TRUE(cumulative_gt(Volume::zeros({4, 3, 5}, VolumeKind::Label)).empty());
  std::vector<double> data(4 * 3 * 5, 0.0);
  data[2 + 1 * 4 + 3 * 12] = 1;  // x=2, y=1, z=3
  Mask expected(4, 3);
  expected.set(1, 2);
  EXPECT_EQ(cumulative_gt(Volume({4, 3, 5}, data, VolumeKind::Label)), expected);
}

TEST(CumulativeGt, IsUnionOfBinarizedSlices) {
  std::mt19937_64 rng(8);
  std::bernoulli_distribution on(0.05);
  std::vector<double> data(12 * 9 * 7);
  for (auto& x : data) x = on(rng) ? 2.0 : 0.0;
  const Volume v({12, 9, 7}, data, VolumeKind::Label);
  Mask uni(12, 9);
  for (int z = 1; z <= 7; ++z) {
    const Mask m = binarize_gt(extract_slice(v, z));
    for (std::size_t r = 0; r < 9; ++r) {
      for (std::size_t c = 0; c < 12; ++c) {
        if (m.at(r, c)) uni.set(r, c);
      }
    }
  }
  EXPECT_EQ(cumulative_gt(v), uni);
}

TEST(CumulativeGt, BallProjectsToDisk) {
  const PhantomSpec spec = small_phantom_spec();
  const Mask m = cumulative_gt(generate_phantom(spec).ground_truth);
  const auto& c = spec.tumor.center;
  const double r2 = spec.tumor.radius * spec.tumor.radius;
  for (std::size_t row = 0; row < m.height(); ++row) {
    for (std::size_t col = 0; col < m.width(); ++col) {
      const double dx = col - c[0], dy = row - c[1];
      ASSERT_EQ(m.at(row, col), dx * dx + dy * dy <= r2) << row << "," << col;
    }
  }
  EXPECT_EQ(gt_box(m), (BBox{18, 36, 30, 48, 0}));
}

TEST(GtBox, EmptyThrows) { EXPECT_THROW(gt_box(Mask(4, 4)), NoTumorError); }

oracle::Rect rect(const BBox& b) { return {b.row_min, b.col_min, b.row_max, b.col_max}; }

TEST(DiceBox, ReferenceValues) {
  const BBox a{0, 0, 9, 9, 0};
  EXPECT_DOUBLE_EQ(dice_box(a, a, 20, 20), 1.0);
  EXPECT_DOUBLE_EQ(dice_box(a, BBox{10, 10, 19, 19, 0}, 20, 20), 0.0);
  // A 10x10 box against a quarter-overlapping 10x10 box.
  const BBox quarter{5, 5, 14, 14, 0};
  EXPECT_NEAR(dice_box(a, quarter, 20, 20), 0.25, 1e-12);
  EXPECT_NEAR(dice_box(a, quarter, 20, 20, DiceFormula::PaperUnion), 50.0 / 175.0, 1e-12);
  // 10x10 against 5x15: areas 100 and 75, overlap 25.
  const BBox thin{5, 5, 9, 19, 0};
  EXPECT_NEAR(dice_box(a, thin, 20, 20), 50.0 / 175.0, 1e-12);
  for (const BBox& b : {a, quarter, thin}) {
    const auto n = oracle::enumerate_boxes(rect(a), rect(b), 20, 20);
    EXPECT_NEAR(dice_box(a, b, 20, 20), 2.0 * n.inter / (n.a + n.b), 1e-12);
    EXPECT_NEAR(dice_box(a, b, 20, 20, DiceFormula::PaperUnion), 2.0 * n.inter / n.uni, 1e-12);
  }
}

BBox random_box(std::mt19937_64& rng, std::size_t w, std::size_t h) {
  std::uniform_int_distribution<std::size_t> cx(0, w - 1), ry(0, h - 1);
  std::size_t c0 = cx(rng), c1 = cx(rng), r0 = ry(rng), r1 = ry(rng);
  return BBox{std::min(r0, r1), std::min(c0, c1), std::max(r0, r1), std::max(c0, c1), 0};
}

TEST(DiceBox, MatchesEnumerationOracle) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 300; ++t) {
    const BBox a = random_box(rng, 24, 18), b = random_box(rng, 24, 18);
    const auto n = oracle::enumerate_boxes(rect(a), rect(b), 24, 18);
    const double standard = dice_box(a, b, 24, 18);
    const double uni = dice_box(a, b, 24, 18, DiceFormula::PaperUnion);
    ASSERT_NEAR(standard, 2.0 * n.inter / (n.a + n.b), 1e-12);
    ASSERT_NEAR(uni, 2.0 * n.inter / n.uni, 1e-12);
    ASSERT_DOUBLE_EQ(standard, dice_box(b, a, 24, 18));
    ASSERT_GE(standard, 0.0);
    ASSERT_LE(standard, 1.0);
    // The union denominator is never larger than the sum of areas.
    ASSERT_GE(uni, standard);
    ASSERT_LE(uni, 2.0);
  }
}

TEST(DiceBox, TranslationInvariant) {
  const BBox a{2, 3, 7, 9, 0}, b{4, 1, 10, 6, 0};
  const double base = dice_box(a, b, 40, 40);
  for (std::size_t s : {1u, 5u, 20u}) {
    const BBox as{a.row_min + s, a.col_min + s, a.row_max + s, a.col_max + s, 0};
    const BBox bs{b.row_min + s, b.col_min + s, b.row_max + s, b.col_max + s, 0};
    EXPECT_DOUBLE_EQ(dice_box(as, bs, 40, 40), base);
  }
}

TEST(DiceBox, OutOfImageRejected) {
  EXPECT_THROW(dice_box(BBox{0, 0, 5, 5, 0}, BBox{0, 0, 1, 1, 0}, 5, 10), ValidationError);
  EXPECT_THROW(dice_box(BBox{0, 0, 1, 1, 0}, BBox{0, 0, 10, 1, 0}, 5, 10), ValidationError);
}

TEST(DiceFormulaNames, RoundTrip) {
  for (auto f : {DiceFormula::Standard, DiceFormula::PaperUnion}) EXPECT_EQ(parse_dice_formula(to_string(f)), f);
  for (auto c : {Cohort::HGG, Cohort::LGG, Cohort::Phantom}) EXPECT_EQ(parse_cohort(to_string(c)), c);
  EXPECT_THROW(parse_dice_formula("jaccard"), ConfigError);
}

// Writes `n` small phantoms plus a manifest; returns the manifest path.
std::filesystem::path write_small_cohort(const testing::TempDir& dir, int n, std::uint64_t seed0 = 1) {
  std::vector<ManifestEntry> entries;
  for (int i = 0; i < n; ++i) {
    const double x = 40 + (i % 5);
    const Phantom p = generate_phantom(small_phantom_spec(seed0 + i, {x, 24, 12}));
    char name[32];
    std::snprintf(name, sizeof(name), "case_%03d", i);
    const auto img = dir / (std::string(name) + ".mha");
    const auto gt = dir / (std::string(name) + "_gt.mha");
    write_mha(p.intensity, img);
    write_mha(p.ground_truth, gt);
    entries.push_back({img, gt, Cohort::Phantom});
  }
  const auto manifest = dir / "manifest.csv";
  write_manifest(manifest, entries);
  return manifest;
}

PipelineConfig small_config() {
  PipelineConfig cfg;
  cfg.extract.representative_slices = kSmallSlices;
  return cfg;
}

AtlasSet small_atlases() {
  std::vector<Volume> gts;
  for (double dx : {-2.0, 0.0, 2.0}) gts.push_back(generate_phantom(small_phantom_spec(700, {42 + dx, 24, 12})).ground_truth);
  return build_atlases(gts, kSmallSlices);
}

TEST(EvaluateCase, ZeroVolumeFails) {
  const Phantom p = generate_phantom(small_phantom_spec());
  const CaseResult r = evaluate_case(Volume::zeros(p.intensity.dims()), p.ground_truth, small_atlases(), small_config());
  EXPECT_TRUE(r.failed);
  EXPECT_EQ(r.dice, 0.0);
  EXPECT_FALSE(r.predicted.has_value());
  EXPECT_FALSE(r.message.empty());
}

TEST(EvaluateCase, EmptyTruthThrows) {
  const Phantom p = generate_phantom(small_phantom_spec());
  const Volume empty = Volume::zeros(p.intensity.dims(), VolumeKind::Label);
  EXPECT_THROW(evaluate_case(p.intensity, empty, small_atlases(), small_config()), NoTumorError);
}

TEST(EvaluateCase, ScoresPhantom) {
  const Phantom p = generate_phantom(small_phantom_spec(9));
  const CaseResult r = evaluate_case(p.intensity, p.ground_truth, small_atlases(), small_config());
  EXPECT_FALSE(r.failed);
  ASSERT_TRUE(r.predicted.has_value());
  EXPECT_NEAR(r.dice, dice_box(*r.predicted, r.truth, 64, 64), 0.0);
  EXPECT_GT(r.dice, 0.7);
}

TEST(Manifest, RoundTripAndCaseId) {
  testing::TempDir tmp;
  const std::vector<ManifestEntry> entries{{tmp / "a.mha", tmp / "a_gt.mha", Cohort::HGG},
                                           {tmp / "sub/b.mhd", tmp / "sub/b_gt.mhd", Cohort::LGG}};
  write_manifest(tmp / "m.csv", entries);
  EXPECT_EQ(testing::read_bytes(tmp / "m.csv"), "intensity_path,gt_path,cohort\na.mha,a_gt.mha,HGG\nsub/b.mhd,sub/b_gt.mhd,LGG\n");
  const auto back = read_manifest(tmp / "m.csv");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].intensity_path, entries[1].intensity_path);
  EXPECT_EQ(back[1].cohort, Cohort::LGG);
  EXPECT_EQ(back[0].case_id(), "a");
  EXPECT_EQ(back[1].case_id(), "b");
}

TEST(Manifest, Errors) {
  testing::TempDir tmp;
  testing::write_bytes(tmp / "bad.csv", "image,label,cohort\nx,y,HGG\n");
  EXPECT_THROW(read_manifest(tmp / "bad.csv"), FormatError);
  testing::write_bytes(tmp / "short.csv", "intensity_path,gt_path,cohort\nx,y\n");
  EXPECT_THROW(read_manifest(tmp / "short.csv"), FormatError);
  testing::write_bytes(tmp / "empty.csv", "");
  EXPECT_TRUE(read_manifest(tmp / "empty.csv").empty());
  EXPECT_THROW(read_manifest(tmp / "missing.csv"), IoError);
}

class SmallCohort : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testing::TempDir();
    manifest_ = new std::vector<ManifestEntry>(read_manifest(write_small_cohort(*dir_, 5)));
    atlases_ = new AtlasSet(small_atlases());
  }
  static void TearDownTestSuite() {
    delete atlases_;
    delete manifest_;
    delete dir_;
  }
  static testing::TempDir* dir_;
  static std::vector<ManifestEntry>* manifest_;
  static AtlasSet* atlases_;
};

testing::TempDir* SmallCohort::dir_ = nullptr;
std::vector<ManifestEntry>* SmallCohort::manifest_ = nullptr;
AtlasSet* SmallCohort::atlases_ = nullptr;

TEST_F(SmallCohort, MeanIsAverageOfCases) {
  const auto rep = evaluate_cohort(*manifest_, atlases_, small_config(), {});
  ASSERT_EQ(rep.cohorts.size(), 1u);
  const auto& c = rep.overall;
  ASSERT_EQ(c.cases.size(), 5u);
  double sum = 0;
  for (const auto& r : c.cases) sum += r.dice;
  EXPECT_NEAR(c.mean_dice, sum / 5, 1e-12);
  EXPECT_TRUE(c.errors.empty());
  EXPECT_EQ(c.cases[0].case_id, "case_000");
}

TEST_F(SmallCohort, ManifestOrderDoesNotChangeScores) {
  auto shuffled = *manifest_;
  std::reverse(shuffled.begin(), shuffled.end());
  const auto a = evaluate_cohort(*manifest_, atlases_, small_config(), {});
  const auto b = evaluate_cohort(shuffled, atlases_, small_config(), {});
  EXPECT_NEAR(a.overall.mean_dice, b.overall.mean_dice, 1e-12);
  for (const auto& ca : a.overall.cases) {
    const auto it = std::find_if(b.overall.cases.begin(), b.overall.cases.end(),
                                 [&](const CaseResult& cb) { return cb.case_id == ca.case_id; });
    ASSERT_NE(it, b.overall.cases.end());
    EXPECT_EQ(it->dice, ca.dice);
  }
}

TEST_F(SmallCohort, ParallelJobsMatchSequential) {
  EvalOptions opts;
  const auto seq = cohort_csv(evaluate_cohort(*manifest_, atlases_, small_config(), opts), false);
  opts.jobs = 3;
  EXPECT_EQ(cohort_csv(evaluate_cohort(*manifest_, atlases_, small_config(), opts), false), seq);
}

TEST_F(SmallCohort, UnreadableCaseIsRecorded) {
  auto m = *manifest_;
  m.push_back({dir_->path() / "nope.mha", dir_->path() / "nope_gt.mha", Cohort::Phantom});
  const auto rep = evaluate_cohort(m, atlases_, small_config(), {});
  EXPECT_EQ(rep.overall.cases.size(), 5u);
  ASSERT_EQ(rep.overall.errors.size(), 1u);
  EXPECT_EQ(rep.overall.errors[0].case_id, "nope");
  EXPECT_EQ(cohort_summary_json(rep.overall).at("n_errors"), 1);
}

TEST_F(SmallCohort, LeaveOneOut) {
  EvalOptions opts;
  opts.leave_one_out = true;
  const auto rep = evaluate_cohort(*manifest_, nullptr, small_config(), opts);
  EXPECT_EQ(rep.overall.cases.size(), 5u);
  EXPECT_GT(rep.overall.mean_dice, 0.7);
  EXPECT_THROW(evaluate_cohort(*manifest_, nullptr, small_config(), {}), ConfigError);
  EXPECT_THROW(evaluate_cohort({}, atlases_, small_config(), {}), ValidationError);
}

TEST_F(SmallCohort, CsvAndSummaryLayout) {
  const auto rep = evaluate_cohort(*manifest_, atlases_, small_config(), {});
  const std::string csv = cohort_csv(rep, false);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "case_id,cohort,method,dice,failed");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
  EXPECT_EQ(cohort_csv(rep).substr(0, 43), "case_id,cohort,method,dice,failed,wall_ms\nc");
  const auto j = evaluation_summary_json(rep);
  EXPECT_EQ(j.at("overall").at("cohort"), "all");
  EXPECT_EQ(j.at("cohorts")[0].at("cohort"), "Phantom");
  for (const char* key : {"method", "formula", "mean_dice", "n", "n_failed", "n_errors", "dice_above_one"}) {
    EXPECT_TRUE(j.at("overall").contains(key)) << key;
  }
}

}  // namespace
}  // namespace tumorroi
