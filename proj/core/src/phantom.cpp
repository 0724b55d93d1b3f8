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

#include "tumorroi/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "tumorroi/errors.hpp"

namespace tumorroi {
namespace {

// Normalized distance of p from the ellipsoid center; <= 1 means inside.
double ellipsoid_norm(const Ellipsoid& e, const std::array<double, 3>& p) {
  double s = 0.0;
  for (int a = 0; a < 3; ++a) {
    const double t = (p[a] - e.center[a]) / e.radii[a];
    s += t * t;
  }
  return std::sqrt(s);
}

bool tumor_strictly_inside(const PhantomSpec& spec) {
  // Every point of the ball is within |D(c - e)| + r / min(radii) of the
  // origin in normalized coordinates.
  const double min_radius = std::min({spec.brain.radii[0], spec.brain.radii[1], spec.brain.radii[2]});
  return ellipsoid_norm(spec.brain, spec.tumor.center) + spec.tumor.radius / min_radius < 1.0;
}

}  // namespace

void validate(const PhantomSpec& spec) {
  if (spec.dims.width == 0 || spec.dims.height == 0 || spec.dims.depth == 0) {
    throw ValidationError("phantom dims must be positive");
  }
  for (double r : spec.brain.radii) {
    if (!(r > 0)) throw ValidationError("brain ellipsoid radii must be positive");
  }
  if (!(spec.tumor.radius > 0)) throw ValidationError("tumor radius must be positive");
  if (!(spec.noise_sigma >= 0)) throw ValidationError("noise_sigma must be >= 0");
  if (!std::isfinite(spec.tumor.intensity_offset) || !(spec.tissue_intensity >= 0) ||
      !std::isfinite(spec.tissue_intensity)) {
    throw ValidationError("tissue intensity and tumor offset must be finite, tissue >= 0");
  }
  if (!tumor_strictly_inside(spec)) {
    throw ValidationError("tumor ball does not lie strictly inside the brain ellipsoid");
  }
}

Phantom generate_phantom(const PhantomSpec& spec) {
  validate(spec);
  const Dims d = spec.dims;
  std::vector<double> intensity(d.voxels(), 0.0);
  std::vector<double> labels(d.voxels(), 0.0);

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, spec.noise_sigma);
  const double r2 = spec.tumor.radius * spec.tumor.radius;
  const double core2 = r2 / 4.0;
  const auto& c = spec.tumor.center;

  std::size_t i = 0;
  for (std::size_t z = 0; z < d.depth; ++z) {
    for (std::size_t y = 0; y < d.height; ++y) {
      for (std::size_t x = 0; x < d.width; ++x, ++i) {
        const std::array<double, 3> p{double(x), double(y), double(z)};
        if (ellipsoid_norm(spec.brain, p) > 1.0) continue;
        double v = spec.tissue_intensity;
        const double dx = p[0] - c[0], dy = p[1] - c[1], dz = p[2] - c[2];
        const double dist2 = dx * dx + dy * dy + dz * dz;
        if (dist2 <= r2) {
          v += spec.tumor.intensity_offset;
          labels[i] = dist2 <= core2 ? 1.0 : 2.0;
        }
        if (spec.noise_sigma > 0) v += noise(rng);
        intensity[i] = std::max(v, 0.0);
      }
    }
  }
  return Phantom{Volume(d, std::move(intensity), VolumeKind::Intensity),
                 Volume(d, std::move(labels), VolumeKind::Label)};
}

PhantomSpec sample_phantom_spec(const PhantomSampler& sampler, std::uint64_t seed) {
  if (!(sampler.radius_min > 0) || sampler.radius_max < sampler.radius_min) {
    throw ValidationError("phantom sampler radius range is invalid");
  }
  std::mt19937_64 rng(seed ^ 0x9E3779B97F4A7C15ULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  PhantomSpec spec = sampler.base;
  spec.seed = seed;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    spec.tumor.radius = std::round(sampler.radius_min + unit(rng) * (sampler.radius_max - sampler.radius_min));
    for (int a = 0; a < 3; ++a) {
      spec.tumor.center[a] =
          std::round(sampler.center_min[a] + unit(rng) * (sampler.center_max[a] - sampler.center_min[a]));
    }
    if (tumor_strictly_inside(spec)) return spec;
  }
  throw ValidationError("phantom sampler could not place a tumor inside the brain");
}

void to_json(nlohmann::json& j, const PhantomSpec& s) {
  j = nlohmann::json{
      {"dims", {s.dims.width, s.dims.height, s.dims.depth}},
      {"brain_ellipsoid", {{"center", s.brain.center}, {"radii", s.brain.radii}}},
      {"tumor_blob",
       {{"center", s.tumor.center}, {"radius", s.tumor.radius}, {"intensity_offset", s.tumor.intensity_offset}}},
      {"tissue_intensity", s.tissue_intensity},
      {"noise_sigma", s.noise_sigma},
      {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, PhantomSpec& s) {
  PhantomSpec out;
  try {
    if (j.contains("dims")) {
      const auto dims = j.at("dims").get<std::array<std::size_t, 3>>();
      out.dims = {dims[0], dims[1], dims[2]};
    }
    if (j.contains("brain_ellipsoid")) {
      const auto& b = j.at("brain_ellipsoid");
      if (b.contains("center")) b.at("center").get_to(out.brain.center);
      if (b.contains("radii")) b.at("radii").get_to(out.brain.radii);
    }
    if (j.contains("tumor_blob")) {
      const auto& t = j.at("tumor_blob");
      if (t.contains("center")) t.at("center").get_to(out.tumor.center);
      if (t.contains("radius")) t.at("radius").get_to(out.tumor.radius);
      if (t.contains("intensity_offset")) t.at("intensity_offset").get_to(out.tumor.intensity_offset);
    }
    if (j.contains("tissue_intensity")) j.at("tissue_intensity").get_to(out.tissue_intensity);
    if (j.contains("noise_sigma")) j.at("noise_sigma").get_to(out.noise_sigma);
    if (j.contains("seed")) j.at("seed").get_to(out.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("invalid phantom spec JSON: ") + e.what());
  }
  s = out;
}

}  // namespace tumorroi
