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

#include <array>
#include <cstdint>

#include <nlohmann/json.hpp>

#include "tumorroi/volume.hpp"

namespace tumorroi {

// Synthetic skull-stripped FLAIR phantoms: an ellipsoidal brain of constant
// tissue intensity with a brighter spherical tumor and Gaussian noise.
// All coordinates are 0-based voxel positions (x, y, z); voxel z lies in the
// 1-based axial slice z + 1.

struct Ellipsoid {
  std::array<double, 3> center{120.0, 120.0, 77.0};
  std::array<double, 3> radii{80.0, 95.0, 65.0};
};

struct TumorBlob {
  std::array<double, 3> center{150.0, 100.0, 79.0};
  double radius = 15.0;
  double intensity_offset = 0.4;
};

struct PhantomSpec {
  Dims dims{240, 240, 155};
  Ellipsoid brain;
  TumorBlob tumor;
  double tissue_intensity = 0.5;
  double noise_sigma = 0.03;
  std::uint64_t seed = 1;
};

struct Phantom {
  Volume intensity;
  Volume ground_truth;
};

/// Throws ValidationError unless the tumor ball lies strictly inside the brain
/// ellipsoid, noise_sigma >= 0 and all sizes are positive.
void validate(const PhantomSpec& spec);

/// Deterministic in `spec` (including seed). Ground truth labels the inner half
/// radius of the ball 1 and the rest of the ball 2.
Phantom generate_phantom(const PhantomSpec& spec);

/// Draws tumor radius and center uniformly from the given ranges, rejecting
/// placements that are not strictly inside the brain.
struct PhantomSampler {
  PhantomSpec base;
  double radius_min = 12.0;
  double radius_max = 20.0;
  std::array<double, 3> center_min{80.0, 80.0, 75.0};
  std::array<double, 3> center_max{160.0, 160.0, 83.0};
};

PhantomSpec sample_phantom_spec(const PhantomSampler& sampler, std::uint64_t seed);

void to_json(nlohmann::json& j, const PhantomSpec& spec);
void from_json(const nlohmann::json& j, PhantomSpec& spec);

}  // namespace tumorroi
