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

#include <filesystem>
#include <string>
#include <string_view>

#include "tumorroi/volume.hpp"

namespace tumorroi {

/// Reads an uncompressed 3-D MetaImage (.mha with LOCAL data, or .mhd with a
/// sibling raw file). Element types: MET_SHORT, MET_USHORT, MET_FLOAT, MET_DOUBLE.
///
/// Throws FormatError (missing/bad key, named in key()), UnsupportedError
/// (compression, multi-channel, other element types), TruncationError, IoError.
Volume read_mha(const std::filesystem::path& path, VolumeKind kind = VolumeKind::Intensity);

enum class MhaStorage {
  /// Narrowest of MET_SHORT, MET_USHORT, MET_FLOAT, MET_DOUBLE that holds
  /// every value exactly, so read_mha(write_mha(v)) reproduces v bit for bit.
  Exact,
  /// As Exact, but MET_FLOAT (rounded) instead of MET_DOUBLE.
  Single,
};

/// Writes a single-file .mha with LOCAL data, little-endian.
void write_mha(const Volume& volume, const std::filesystem::path& path, MhaStorage storage = MhaStorage::Exact);

/// Writes via a temporary sibling file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace tumorroi
