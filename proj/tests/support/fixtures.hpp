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

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "tumorroi/phantom.hpp"
#include "tumorroi/volume.hpp"

namespace tumorroi::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            ("tumorroi_test_" + std::to_string(::getpid()) + "_" + std::to_string(stamp) + "_" +
             std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

/// 64x64x24 phantom whose tumor ball (radius 6, centered on slice 13) crosses
/// slices 8..18; small enough for many pipeline runs per test.
inline PhantomSpec small_phantom_spec(std::uint64_t seed = 1, std::array<double, 3> tumor_center = {42, 24, 12}) {
  PhantomSpec s;
  s.dims = {64, 64, 24};
  s.brain.center = {32, 32, 12};
  s.brain.radii = {27, 29, 14};
  s.tumor.center = tumor_center;
  s.tumor.radius = 6;
  s.seed = seed;
  return s;
}

inline const std::vector<int> kSmallSlices{10, 11, 12, 13, 14, 15};

inline std::vector<std::uint8_t> random_bits(std::mt19937_64& rng, std::size_t n, double p) {
  std::bernoulli_distribution on(p);
  std::vector<std::uint8_t> bits(n);
  for (auto& b : bits) b = on(rng) ? 1 : 0;
  return bits;
}

}  // namespace tumorroi::testing
