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

#include "tumorroi/preprocess.hpp"

#include <algorithm>
#include <string>

#include "tumorroi/errors.hpp"
#include "tumorroi/mha_io.hpp"

namespace tumorroi {

Slice normalize(const Slice& slice) {
  const auto data = slice.data();
  const auto [lo_it, hi_it] = std::minmax_element(data.begin(), data.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  std::vector<double> out(data.size(), 0.0);
  if (range > 0) {
    for (std::size_t i = 0; i < data.size(); ++i) out[i] = (data[i] - lo) / range;
  }
  return Slice(slice.width(), slice.height(), slice.index(), std::move(out));
}

Atlas::Atlas(int slice_index, std::size_t width, std::size_t height, int num_patients,
             std::vector<std::int32_t> counts)
    : slice_index_(slice_index),
      width_(width),
      height_(height),
      num_patients_(num_patients),
      counts_(std::move(counts)) {
  if (width_ == 0 || height_ == 0) throw ValidationError("atlas dimensions must be positive");
  if (counts_.size() != width_ * height_) {
    throw ValidationError("atlas counts length does not match width*height");
  }
  if (num_patients_ < 1) throw ValidationError("atlas num_patients must be >= 1");
  for (auto c : counts_) {
    if (c < 0 || c > num_patients_) {
      throw ValidationError("atlas count " + std::to_string(c) + " outside 0.." +
                            std::to_string(num_patients_));
    }
  }
}

std::int32_t Atlas::max_count() const noexcept {
  return counts_.empty() ? 0 : *std::max_element(counts_.begin(), counts_.end());
}

Atlas build_atlas(std::span<const Slice> gt_slices) {
  if (gt_slices.empty()) throw ValidationError("build_atlas needs at least one ground-truth slice");
  const auto& first = gt_slices.front();
  std::vector<std::int32_t> counts(first.size(), 0);
  for (const auto& s : gt_slices) {
    if (s.width() != first.width() || s.height() != first.height()) {
      throw ValidationError("build_atlas: ground-truth slices have mixed dimensions");
    }
    if (s.index() != first.index()) {
      throw ValidationError("build_atlas: ground-truth slices have mixed slice indices");
    }
    const auto d = s.data();
    for (std::size_t i = 0; i < d.size(); ++i) counts[i] += d[i] != 0 ? 1 : 0;
  }
  return Atlas(first.index(), first.width(), first.height(), static_cast<int>(gt_slices.size()),
               std::move(counts));
}

double brain_threshold(const Slice& slice) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double v : slice.data()) {
    if (v > 0) {
      sum += v;
      ++n;
    }
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

void EnhanceParams::validate() const {
  if (!(gain_up > 1.0)) throw ValidationError("gain_up must be > 1");
  if (!(gain_down > 0.0 && gain_down < 1.0)) throw ValidationError("gain_down must be in (0,1)");
  if (atlas_min_count < 1) throw ValidationError("atlas_min_count must be >= 1");
}

Slice enhance_contrast(const Slice& slice, const Atlas& atlas, const EnhanceParams& params) {
  params.validate();
  if (atlas.width() != slice.width() || atlas.height() != slice.height()) {
    throw ValidationError("enhance_contrast: atlas dimensions do not match the slice");
  }
  if (atlas.slice_index() != slice.index()) {
    throw ValidationError("enhance_contrast: atlas is for slice " + std::to_string(atlas.slice_index()) +
                          ", image is slice " + std::to_string(slice.index()));
  }
  const double t = brain_threshold(slice);
  const auto in = slice.data();
  const auto counts = atlas.counts();
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double v = in[i];
    if (v <= 0) {
      out[i] = v;
      continue;
    }
    const bool likely_tumor = counts[i] >= params.atlas_min_count;
    const double gain = likely_tumor && v > t ? params.gain_up : params.gain_down;
    out[i] = std::clamp(v * gain, 0.0, 1.0);
  }
  return Slice(slice.width(), slice.height(), slice.index(), std::move(out));
}

nlohmann::json atlas_to_json(const Atlas& atlas) {
  return nlohmann::json{{"slice_index", atlas.slice_index()},
                        {"width", atlas.width()},
                        {"height", atlas.height()},
                        {"num_patients", atlas.num_patients()},
                        {"counts", atlas.counts()}};
}

Atlas atlas_from_json(const nlohmann::json& j) {
  try {
    return Atlas(j.at("slice_index").get<int>(), j.at("width").get<std::size_t>(),
                 j.at("height").get<std::size_t>(), j.at("num_patients").get<int>(),
                 j.at("counts").get<std::vector<std::int32_t>>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed atlas document: ") + e.what());
  }
}

void save_atlas(const Atlas& atlas, const std::filesystem::path& path) {
  write_file_atomic(path, atlas_to_json(atlas).dump() + "\n");
}

Atlas load_atlas(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return atlas_from_json(j);
}

}  // namespace tumorroi
