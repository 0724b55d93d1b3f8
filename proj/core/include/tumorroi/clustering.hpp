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

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tumorroi/volume.hpp"

namespace tumorroi {

enum class ClusterInit {
  /// Centers at the (2i-1)/(2k) quantiles of the data. Deterministic, one run.
  QuantileSpread,
  /// Centers at min + (2i-1)/(2k) * (max - min). Deterministic, one run.
  RangeSpread,
  /// k distinct data values drawn from the seeded generator, best of n_restarts.
  RandomFromData,
};

enum class ClusterMethod { EM, KMeans };

std::string_view to_string(ClusterMethod m);
ClusterMethod parse_method(std::string_view s);

inline constexpr double kVarianceFloor = 1e-6;

struct ClusterConfig {
  int k = 5;
  int max_iter = 200;
  /// Relative log-likelihood change that stops EM. K-means stops when the
  /// assignment is stable.
  double tol = 1e-6;
  std::uint64_t seed = 20201013;
  int n_restarts = 5;
  ClusterInit init = ClusterInit::RangeSpread;

  void validate() const;
};

struct KMeansResult {
  std::vector<double> centroids;
  /// 1-based index into `centroids`, one per input value.
  std::vector<int> assignment;
  double objective = 0.0;
  /// Sum of squared distances after each assignment step of the winning run.
  std::vector<double> objective_trace;
  int iterations = 0;
  /// Fewer distinct values than k: the distinct values are the centroids and
  /// the last one is repeated to fill k.
  bool degenerate = false;
};

KMeansResult kmeans_1d(std::span<const double> values, const ClusterConfig& cfg);

struct GmmModel {
  int k = 0;
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> variances;
  double log_likelihood = 0.0;
};

struct GmmFit {
  GmmModel model;
  /// Row-major n x k responsibilities under `model`.
  std::vector<double> posteriors;
  /// Log-likelihood after every E-step of the winning run.
  std::vector<double> log_likelihood_trace;
  int iterations = 0;
  bool converged = false;
  bool degenerate = false;
};

/// Throws ValidationError for empty or non-finite input.
GmmFit em_gmm_1d(std::span<const double> values, const ClusterConfig& cfg);

/// Row-wise argmax of an n x k posterior matrix as 1-based labels; ties go to
/// the lower component.
std::vector<int> hard_assign(std::span<const double> posteriors, int k);

/// Per-pixel class labels. 0 marks background pixels that were not
/// clustered; 1..k are ordered by ascending mean intensity.
struct LabelMap {
  std::size_t width = 0;
  std::size_t height = 0;
  int k = 0;
  std::vector<int> labels;
  /// Number of non-zero pixels in the source slice.
  std::size_t brain_pixels = 0;
  bool degenerate = false;

  int at(std::size_t row, std::size_t col) const noexcept { return labels[col + row * width]; }
};

struct Segmentation {
  LabelMap labels;
  ClusterMethod method = ClusterMethod::EM;
  /// Class centers in label order (component means for EM, centroids for K-means).
  std::vector<double> class_means;
  /// Only meaningful for EM, components reordered to label order.
  GmmModel gmm;
  /// Log-likelihood (EM) or objective (K-means) per iteration.
  std::vector<double> trace;
  int iterations = 0;
};

/// Clusters pixel intensities into cfg.k classes. Zero pixels get label 0 and
/// are left out unless `cluster_background` is set. An all-zero slice yields
/// an all-zero, degenerate map.
Segmentation segment_slice(const Slice& slice, ClusterMethod method, const ClusterConfig& cfg,
                           bool cluster_background = false);

nlohmann::json segmentation_debug_json(const Segmentation& seg, int slice_index);

}  // namespace tumorroi
