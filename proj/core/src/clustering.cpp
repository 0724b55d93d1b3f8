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

#include "tumorroi/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include "tumorroi/errors.hpp"

namespace tumorroi {
namespace {

// Input values collapsed to sorted distinct values with multiplicities. Both
// algorithms only depend on the value multiset, so this is exact.
struct WeightedValues {
  std::vector<double> value;
  std::vector<double> count;
  std::vector<std::size_t> index_of;  // original position -> distinct index
  double total = 0.0;
};

WeightedValues compress(std::span<const double> values) {
  if (values.empty()) throw ValidationError("clustering needs at least one value");
  for (double v : values) {
    if (!std::isfinite(v)) throw ValidationError("clustering input contains a non-finite value");
  }
  WeightedValues w;
  w.value.assign(values.begin(), values.end());
  std::sort(w.value.begin(), w.value.end());
  w.value.erase(std::unique(w.value.begin(), w.value.end()), w.value.end());
  w.count.assign(w.value.size(), 0.0);
  w.index_of.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto j = static_cast<std::size_t>(
        std::lower_bound(w.value.begin(), w.value.end(), values[i]) - w.value.begin());
    w.index_of[i] = j;
    w.count[j] += 1.0;
  }
  w.total = static_cast<double>(values.size());
  return w;
}

// Value at quantile q of the weighted multiset (nearest rank).
double weighted_quantile(const WeightedValues& w, double q) {
  const double target = std::floor(q * w.total);
  double seen = 0.0;
  for (std::size_t j = 0; j < w.value.size(); ++j) {
    seen += w.count[j];
    if (seen > target) return w.value[j];
  }
  return w.value.back();
}

std::vector<double> quantile_centers(const WeightedValues& w, int k) {
  std::vector<double> centers(k);
  for (int i = 0; i < k; ++i) centers[i] = weighted_quantile(w, (2.0 * (i + 1) - 1.0) / (2.0 * k));
  std::vector<double> distinct = centers;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < static_cast<std::size_t>(k) && w.value.size() >= static_cast<std::size_t>(k)) {
    // Heavily repeated values; spread over the distinct values instead.
    const double n = static_cast<double>(w.value.size());
    for (int i = 0; i < k; ++i) {
      const auto idx = static_cast<std::size_t>(std::floor((2.0 * (i + 1) - 1.0) / (2.0 * k) * n));
      centers[i] = w.value[std::min(idx, w.value.size() - 1)];
    }
  }
  return centers;
}

std::vector<double> range_centers(const WeightedValues& w, int k) {
  const double lo = w.value.front(), hi = w.value.back();
  std::vector<double> centers(k);
  for (int i = 0; i < k; ++i) centers[i] = lo + (2.0 * (i + 1) - 1.0) / (2.0 * k) * (hi - lo);
  return centers;
}

std::vector<double> deterministic_centers(const WeightedValues& w, int k, ClusterInit init) {
  return init == ClusterInit::RangeSpread ? range_centers(w, k) : quantile_centers(w, k);
}

std::vector<double> random_centers(const WeightedValues& w, int k, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(w.value.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const std::size_t take = std::min<std::size_t>(k, idx.size());
  for (std::size_t i = 0; i < take; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  std::vector<double> centers(k);
  for (int i = 0; i < k; ++i) centers[i] = w.value[idx[std::min<std::size_t>(i, take - 1)]];
  std::sort(centers.begin(), centers.end());
  return centers;
}

int nearest(double x, const std::vector<double>& centroids) {
  int best = 0;
  double best_d = std::abs(x - centroids[0]);
  for (int j = 1; j < static_cast<int>(centroids.size()); ++j) {
    const double d = std::abs(x - centroids[j]);
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

struct LloydRun {
  std::vector<double> centroids;
  std::vector<int> assign;  // per distinct value, 0-based
  double objective = 0.0;
  std::vector<double> trace;
  int iterations = 0;
};

LloydRun lloyd(const WeightedValues& w, std::vector<double> centroids, int max_iter) {
  const int k = static_cast<int>(centroids.size());
  const std::size_t m = w.value.size();
  LloydRun run;
  std::vector<int> assign(m, -1), prev;
  auto assign_all = [&] {
    double obj = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      assign[i] = nearest(w.value[i], centroids);
      const double d = w.value[i] - centroids[assign[i]];
      obj += w.count[i] * d * d;
    }
    return obj;
  };

  int it = 0;
  double obj = 0.0;
  for (; it < max_iter; ++it) {
    obj = assign_all();
    run.trace.push_back(obj);
    if (assign == prev) break;
    prev = assign;

    std::vector<double> sum(k, 0.0), cnt(k, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      sum[assign[i]] += w.count[i] * w.value[i];
      cnt[assign[i]] += w.count[i];
    }
    std::vector<double> dist(m);
    for (std::size_t i = 0; i < m; ++i) dist[i] = std::abs(w.value[i] - centroids[assign[i]]);
    for (int j = 0; j < k; ++j) {
      if (cnt[j] > 0) {
        centroids[j] = sum[j] / cnt[j];
        continue;
      }
      // Empty cluster: move it onto the value farthest from its own centroid.
      const auto far = static_cast<std::size_t>(std::max_element(dist.begin(), dist.end()) - dist.begin());
      centroids[j] = w.value[far];
      dist[far] = 0.0;
    }
  }
  if (it == max_iter) {
    obj = assign_all();
    run.trace.push_back(obj);
  }
  run.centroids = std::move(centroids);
  run.assign = std::move(assign);
  run.objective = obj;
  run.iterations = std::min(it + 1, max_iter);
  return run;
}

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// Responsibilities for every distinct value; returns the log-likelihood.
double e_step(const WeightedValues& w, const GmmModel& m, std::vector<double>& resp) {
  const int k = m.k;
  const std::size_t n = w.value.size();
  resp.resize(n * k);
  std::vector<double> a(k), b(k);
  for (int j = 0; j < k; ++j) {
    a[j] = m.weights[j] > 0 ? std::log(m.weights[j]) - 0.5 * (kLog2Pi + std::log(m.variances[j]))
                            : -std::numeric_limits<double>::infinity();
    b[j] = 0.5 / m.variances[j];
  }
  // Neumaier-compensated sum keeps the trace monotone to well below 1e-9.
  double ll = 0.0, comp = 0.0;
  std::vector<double> lp(k);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = w.value[i];
    double hi = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < k; ++j) {
      const double d = x - m.means[j];
      lp[j] = a[j] - b[j] * d * d;
      hi = std::max(hi, lp[j]);
    }
    double s = 0.0;
    for (int j = 0; j < k; ++j) {
      lp[j] = std::exp(lp[j] - hi);
      s += lp[j];
    }
    double* row = &resp[i * k];
    for (int j = 0; j < k; ++j) row[j] = lp[j] / s;
    const double term = w.count[i] * (hi + std::log(s));
    const double t = ll + term;
    comp += std::abs(ll) >= std::abs(term) ? (ll - t) + term : (term - t) + ll;
    ll = t;
  }
  return ll + comp;
}

void m_step(const WeightedValues& w, const std::vector<double>& resp, GmmModel& m) {
  const int k = m.k;
  const std::size_t n = w.value.size();
  for (int j = 0; j < k; ++j) {
    double nk = 0.0, sx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = w.count[i] * resp[i * k + j];
      nk += r;
      sx += r * w.value[i];
    }
    if (!(nk > 0)) {
      m.weights[j] = 0.0;
      continue;
    }
    const double mu = sx / nk;
    double sv = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = w.value[i] - mu;
      sv += w.count[i] * resp[i * k + j] * d * d;
    }
    m.weights[j] = nk / w.total;
    m.means[j] = mu;
    m.variances[j] = std::max(sv / nk, kVarianceFloor);
  }
  const double total = std::accumulate(m.weights.begin(), m.weights.end(), 0.0);
  for (double& x : m.weights) x /= total;
}

double population_variance(const WeightedValues& w, double* mean_out) {
  double s = 0.0;
  for (std::size_t i = 0; i < w.value.size(); ++i) s += w.count[i] * w.value[i];
  const double mean = s / w.total;
  double v = 0.0;
  for (std::size_t i = 0; i < w.value.size(); ++i) {
    const double d = w.value[i] - mean;
    v += w.count[i] * d * d;
  }
  if (mean_out) *mean_out = mean;
  return v / w.total;
}

struct EmRun {
  GmmModel model;
  std::vector<double> resp;
  std::vector<double> trace;
  int iterations = 0;
  bool converged = false;
};

EmRun em_run(const WeightedValues& w, std::vector<double> means, double init_var, const ClusterConfig& cfg) {
  EmRun run;
  GmmModel& m = run.model;
  m.k = cfg.k;
  m.means = std::move(means);
  m.weights.assign(cfg.k, 1.0 / cfg.k);
  m.variances.assign(cfg.k, init_var);

  double ll = e_step(w, m, run.resp);
  run.trace.push_back(ll);
  int it = 0;
  while (it < cfg.max_iter) {
    m_step(w, run.resp, m);
    ++it;
    const double next = e_step(w, m, run.resp);
    run.trace.push_back(next);
    const double change = std::abs(next - ll);
    ll = next;
    if (change <= cfg.tol * std::max(std::abs(ll), std::numeric_limits<double>::min())) {
      run.converged = true;
      break;
    }
  }
  m.log_likelihood = ll;
  run.iterations = it;
  return run;
}

std::vector<double> expand_posteriors(const WeightedValues& w, const std::vector<double>& resp, int k) {
  std::vector<double> out(w.index_of.size() * k);
  for (std::size_t i = 0; i < w.index_of.size(); ++i) {
    std::copy_n(&resp[w.index_of[i] * k], k, &out[i * k]);
  }
  return out;
}

}  // namespace

std::string_view to_string(ClusterMethod m) { return m == ClusterMethod::EM ? "em" : "kmeans"; }

ClusterMethod parse_method(std::string_view s) {
  if (s == "em" || s == "EM") return ClusterMethod::EM;
  if (s == "kmeans" || s == "KMeans" || s == "k-means") return ClusterMethod::KMeans;
  throw ConfigError("unknown clustering method '" + std::string(s) + "' (expected em or kmeans)");
}

void ClusterConfig::validate() const {
  if (k < 1) throw ValidationError("cluster k must be >= 1");
  if (max_iter < 1) throw ValidationError("cluster max_iter must be >= 1");
  if (!(tol > 0)) throw ValidationError("cluster tol must be > 0");
  if (n_restarts < 1) throw ValidationError("cluster n_restarts must be >= 1");
}

KMeansResult kmeans_1d(std::span<const double> values, const ClusterConfig& cfg) {
  cfg.validate();
  const WeightedValues w = compress(values);
  const int k = cfg.k;
  KMeansResult result;

  if (w.value.size() < static_cast<std::size_t>(k)) {
    result.degenerate = true;
    result.centroids = w.value;
    result.centroids.resize(k, w.value.back());
    result.assignment.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) result.assignment[i] = static_cast<int>(w.index_of[i]) + 1;
    result.objective_trace = {0.0};
    return result;
  }

  LloydRun best;
  bool have = false;
  if (cfg.init != ClusterInit::RandomFromData) {
    best = lloyd(w, deterministic_centers(w, k, cfg.init), cfg.max_iter);
  } else {
    std::mt19937_64 rng(cfg.seed);
    for (int r = 0; r < cfg.n_restarts; ++r) {
      LloydRun run = lloyd(w, random_centers(w, k, rng), cfg.max_iter);
      if (!have || run.objective < best.objective) {
        best = std::move(run);
        have = true;
      }
    }
  }

  result.centroids = best.centroids;
  result.objective = best.objective;
  result.objective_trace = std::move(best.trace);
  result.iterations = best.iterations;
  result.assignment.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) result.assignment[i] = best.assign[w.index_of[i]] + 1;
  return result;
}

GmmFit em_gmm_1d(std::span<const double> values, const ClusterConfig& cfg) {
  cfg.validate();
  const WeightedValues w = compress(values);
  const int k = cfg.k;
  GmmFit fit;
  fit.degenerate = w.value.size() < static_cast<std::size_t>(k);

  double mean = 0.0;
  const double var = std::max(population_variance(w, &mean), kVarianceFloor);

  if (k == 1) {
    fit.model.k = 1;
    fit.model.weights = {1.0};
    fit.model.means = {mean};
    fit.model.variances = {var};
    std::vector<double> resp;
    fit.model.log_likelihood = e_step(w, fit.model, resp);
    fit.log_likelihood_trace = {fit.model.log_likelihood};
    fit.posteriors.assign(values.size(), 1.0);
    fit.converged = true;
    return fit;
  }

  EmRun best;
  bool have = false;
  if (cfg.init != ClusterInit::RandomFromData) {
    best = em_run(w, deterministic_centers(w, k, cfg.init), var, cfg);
  } else {
    std::mt19937_64 rng(cfg.seed);
    for (int r = 0; r < cfg.n_restarts; ++r) {
      EmRun run = em_run(w, random_centers(w, k, rng), var, cfg);
      if (!have || run.model.log_likelihood > best.model.log_likelihood) {
        best = std::move(run);
        have = true;
      }
    }
  }

  fit.posteriors = expand_posteriors(w, best.resp, k);
  fit.model = std::move(best.model);
  fit.log_likelihood_trace = std::move(best.trace);
  fit.iterations = best.iterations;
  fit.converged = best.converged;
  return fit;
}

std::vector<int> hard_assign(std::span<const double> posteriors, int k) {
  if (k < 1 || posteriors.size() % static_cast<std::size_t>(k) != 0) {
    throw ValidationError("posterior matrix size is not a multiple of k");
  }
  const std::size_t n = posteriors.size() / k;
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = &posteriors[i * k];
    int best = 0;
    for (int j = 1; j < k; ++j) {
      if (row[j] > row[best]) best = j;
    }
    labels[i] = best + 1;
  }
  return labels;
}

Segmentation segment_slice(const Slice& slice, ClusterMethod method, const ClusterConfig& cfg,
                           bool cluster_background) {
  cfg.validate();
  const auto data = slice.data();
  Segmentation seg;
  seg.method = method;
  LabelMap& lm = seg.labels;
  lm.width = slice.width();
  lm.height = slice.height();
  lm.k = cfg.k;
  lm.labels.assign(data.size(), 0);

  std::vector<std::size_t> pixels;
  std::vector<double> values;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i] > 0) ++lm.brain_pixels;
    if (cluster_background || data[i] != 0) {
      pixels.push_back(i);
      values.push_back(data[i]);
    }
  }
  if (lm.brain_pixels == 0) {
    lm.degenerate = true;
    return seg;
  }

  std::vector<int> raw;
  std::vector<double> centers;
  if (method == ClusterMethod::EM) {
    GmmFit fit = em_gmm_1d(values, cfg);
    raw = hard_assign(fit.posteriors, cfg.k);
    centers = fit.model.means;
    seg.gmm = std::move(fit.model);
    seg.trace = std::move(fit.log_likelihood_trace);
    seg.iterations = fit.iterations;
    lm.degenerate = fit.degenerate;
  } else {
    KMeansResult km = kmeans_1d(values, cfg);
    raw = std::move(km.assignment);
    centers = km.centroids;
    seg.trace = std::move(km.objective_trace);
    seg.iterations = km.iterations;
    lm.degenerate = km.degenerate;
  }

  // Rank components by the mean intensity of the pixels they received;
  // components without pixels fall back to their model center.
  const int k = cfg.k;
  std::vector<double> sum(k, 0.0), cnt(k, 0.0);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    sum[raw[i] - 1] += values[i];
    cnt[raw[i] - 1] += 1.0;
  }
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  auto key = [&](int j) { return cnt[j] > 0 ? sum[j] / cnt[j] : centers[j]; };
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return key(a) < key(b); });
  std::vector<int> rank(k);
  for (int r = 0; r < k; ++r) rank[order[r]] = r + 1;

  for (std::size_t i = 0; i < raw.size(); ++i) lm.labels[pixels[i]] = rank[raw[i] - 1];

  seg.class_means.resize(k);
  for (int r = 0; r < k; ++r) seg.class_means[r] = centers[order[r]];
  if (method == ClusterMethod::EM) {
    GmmModel sorted = seg.gmm;
    for (int r = 0; r < k; ++r) {
      sorted.weights[r] = seg.gmm.weights[order[r]];
      sorted.means[r] = seg.gmm.means[order[r]];
      sorted.variances[r] = seg.gmm.variances[order[r]];
    }
    seg.gmm = std::move(sorted);
  }
  return seg;
}

nlohmann::json segmentation_debug_json(const Segmentation& seg, int slice_index) {
  nlohmann::json j{{"slice_index", slice_index},
                   {"method", to_string(seg.method)},
                   {"k", seg.labels.k},
                   {"degenerate", seg.labels.degenerate},
                   {"iterations", seg.iterations},
                   {"class_means", seg.class_means},
                   {"trace", seg.trace}};
  if (seg.method == ClusterMethod::EM) {
    j["gmm"] = {{"weights", seg.gmm.weights},
                {"means", seg.gmm.means},
                {"variances", seg.gmm.variances},
                {"log_likelihood", seg.gmm.log_likelihood}};
  }
  return j;
}

}  // namespace tumorroi
