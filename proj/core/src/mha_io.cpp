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

#include "tumorroi/mha_io.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <vector>

#include "tumorroi/errors.hpp"

namespace tumorroi {
namespace {

enum class ElementType { Short, UShort, Float, Double };

std::size_t element_size(ElementType t) {
  switch (t) {
    case ElementType::Short:
    case ElementType::UShort:
      return 2;
    case ElementType::Float:
      return 4;
    case ElementType::Double:
      return 8;
  }
  return 0;
}

const char* element_name(ElementType t) {
  switch (t) {
    case ElementType::Short:
      return "MET_SHORT";
    case ElementType::UShort:
      return "MET_USHORT";
    case ElementType::Float:
      return "MET_FLOAT";
    case ElementType::Double:
      return "MET_DOUBLE";
  }
  return "";
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

bool parse_bool(const std::string& key, const std::string& value) {
  std::string v = value;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw FormatError("header key " + key + " is not a boolean: '" + value + "'", key);
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  std::vector<T> out;
  T x{};
  while (in >> x) out.push_back(x);
  if (!in.eof() || out.empty()) {
    throw FormatError("header key " + key + " has unparseable value '" + value + "'", key);
  }
  return out;
}

template <typename T>
T load_element(const unsigned char* p, bool msb) {
  using U = std::conditional_t<sizeof(T) == 2, std::uint16_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>;
  U raw;
  std::memcpy(&raw, p, sizeof(U));
  const bool host_msb = std::endian::native == std::endian::big;
  if (msb != host_msb) {
    U swapped = 0;
    for (std::size_t b = 0; b < sizeof(U); ++b) {
      swapped = static_cast<U>((swapped << 8) | ((raw >> (8 * b)) & 0xFF));
    }
    raw = swapped;
  }
  T value;
  std::memcpy(&value, &raw, sizeof(T));
  return value;
}

template <typename T>
void store_element(std::string& out, T value) {
  static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

ElementType narrowest_exact_type(std::span<const double> data) {
  bool fits_short = true, fits_ushort = true, fits_float = true;
  for (double v : data) {
    const bool integral = std::floor(v) == v;
    if (!integral || v < -32768.0 || v > 32767.0) fits_short = false;
    if (!integral || v < 0.0 || v > 65535.0) fits_ushort = false;
    if (static_cast<double>(static_cast<float>(v)) != v) fits_float = false;
    // -0.0 would lose its sign through an integer type.
    if (v == 0.0 && std::signbit(v)) fits_short = fits_ushort = false;
  }
  if (fits_short) return ElementType::Short;
  if (fits_ushort) return ElementType::UShort;
  if (fits_float) return ElementType::Float;
  return ElementType::Double;
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "ObjectType",     "NDims",          "DimSize",          "ElementType",
      "ElementDataFile", "ElementByteOrderMSB", "BinaryDataByteOrderMSB", "ElementSpacing",
      "CompressedData", "BinaryData",     "ElementNumberOfChannels"};
  return keys;
}

}  // namespace

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot rename " + tmp.string() + " to " + path.string());
  }
}

Volume read_mha(const std::filesystem::path& path, VolumeKind kind) {
  const std::string file = read_text_file(path);

  std::map<std::string, std::string> header;
  std::size_t pos = 0;
  std::size_t data_offset = std::string::npos;
  while (pos < file.size()) {
    auto eol = file.find('\n', pos);
    if (eol == std::string::npos) eol = file.size();
    const std::string line = trim(std::string_view(file).substr(pos, eol - pos));
    pos = eol + 1;
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError("malformed header line '" + line + "' in " + path.string());
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    header[key] = trim(std::string_view(line).substr(eq + 1));
    if (!known_keys().contains(key)) {
      spdlog::warn("{}: ignoring MetaImage header key '{}'", path.string(), key);
    }
    if (key == "ElementDataFile") {
      data_offset = std::min(pos, file.size());
      break;
    }
  }

  auto require = [&](const std::string& key) -> const std::string& {
    auto it = header.find(key);
    if (it == header.end()) {
      throw FormatError("missing header key " + key + " in " + path.string(), key);
    }
    return it->second;
  };

  if (auto it = header.find("ObjectType"); it != header.end() && it->second != "Image") {
    throw UnsupportedError("ObjectType '" + it->second + "' is not Image", "ObjectType");
  }
  const auto ndims = parse_list<int>("NDims", require("NDims"));
  if (ndims.size() != 1 || ndims[0] != 3) {
    throw UnsupportedError("only NDims = 3 is supported", "NDims");
  }
  const auto dim_size = parse_list<long long>("DimSize", require("DimSize"));
  if (dim_size.size() != 3 || std::any_of(dim_size.begin(), dim_size.end(), [](auto d) { return d <= 0; })) {
    throw FormatError("DimSize must list three positive integers", "DimSize");
  }
  if (auto it = header.find("CompressedData"); it != header.end() && parse_bool(it->first, it->second)) {
    throw UnsupportedError("compressed MetaImage data is not supported", "CompressedData");
  }
  if (auto it = header.find("ElementNumberOfChannels"); it != header.end() && it->second != "1") {
    throw UnsupportedError("multi-channel MetaImage data is not supported", "ElementNumberOfChannels");
  }

  const std::string& type_name = require("ElementType");
  ElementType type;
  if (type_name == "MET_SHORT") {
    type = ElementType::Short;
  } else if (type_name == "MET_USHORT") {
    type = ElementType::UShort;
  } else if (type_name == "MET_FLOAT") {
    type = ElementType::Float;
  } else if (type_name == "MET_DOUBLE") {
    type = ElementType::Double;
  } else {
    throw UnsupportedError("unsupported ElementType " + type_name, "ElementType");
  }

  bool msb = false;
  if (auto it = header.find("ElementByteOrderMSB"); it != header.end()) {
    msb = parse_bool(it->first, it->second);
  } else if (auto it2 = header.find("BinaryDataByteOrderMSB"); it2 != header.end()) {
    msb = parse_bool(it2->first, it2->second);
  }

  Volume::Spacing spacing{1.0, 1.0, 1.0};
  if (auto it = header.find("ElementSpacing"); it != header.end()) {
    const auto s = parse_list<double>(it->first, it->second);
    if (s.size() != 3) throw FormatError("ElementSpacing must list three values", "ElementSpacing");
    spacing = {s[0], s[1], s[2]};
  }

  const std::string& data_file = require("ElementDataFile");
  std::string external;
  std::string_view payload;
  if (data_file == "LOCAL") {
    payload = std::string_view(file).substr(data_offset);
  } else {
    if (data_file.starts_with("LIST") || data_file.find('%') != std::string::npos) {
      throw UnsupportedError("multi-file ElementDataFile is not supported", "ElementDataFile");
    }
    std::filesystem::path raw = data_file;
    if (raw.is_relative()) raw = path.parent_path() / raw;
    external = read_text_file(raw);
    payload = external;
  }

  const Dims dims{static_cast<std::size_t>(dim_size[0]), static_cast<std::size_t>(dim_size[1]),
                  static_cast<std::size_t>(dim_size[2])};
  const std::size_t esize = element_size(type);
  const std::size_t needed = dims.voxels() * esize;
  if (payload.size() < needed) {
    throw TruncationError(path.string() + ": payload has " + std::to_string(payload.size()) +
                              " bytes, dimensions require " + std::to_string(needed),
                          "ElementDataFile");
  }

  std::vector<double> data(dims.voxels());
  const auto* bytes = reinterpret_cast<const unsigned char*>(payload.data());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const unsigned char* p = bytes + i * esize;
    switch (type) {
      case ElementType::Short:
        data[i] = load_element<std::int16_t>(p, msb);
        break;
      case ElementType::UShort:
        data[i] = load_element<std::uint16_t>(p, msb);
        break;
      case ElementType::Float:
        data[i] = load_element<float>(p, msb);
        break;
      case ElementType::Double:
        data[i] = load_element<double>(p, msb);
        break;
    }
  }
  return Volume(dims, std::move(data), kind, spacing);
}

void write_mha(const Volume& volume, const std::filesystem::path& path, MhaStorage storage) {
  const auto& d = volume.dims();
  const auto& sp = volume.spacing();
  ElementType type = narrowest_exact_type(volume.data());
  if (storage == MhaStorage::Single && type == ElementType::Double) type = ElementType::Float;

  std::ostringstream hdr;
  hdr.precision(17);
  hdr << "ObjectType = Image\n"
      << "NDims = 3\n"
      << "BinaryData = True\n"
      << "BinaryDataByteOrderMSB = False\n"
      << "CompressedData = False\n"
      << "ElementSpacing = " << sp[0] << ' ' << sp[1] << ' ' << sp[2] << '\n'
      << "DimSize = " << d.width << ' ' << d.height << ' ' << d.depth << '\n'
      << "ElementType = " << element_name(type) << '\n'
      << "ElementDataFile = LOCAL\n";

  std::string out = hdr.str();
  out.reserve(out.size() + d.voxels() * element_size(type));
  for (double v : volume.data()) {
    switch (type) {
      case ElementType::Short:
        store_element(out, static_cast<std::int16_t>(v));
        break;
      case ElementType::UShort:
        store_element(out, static_cast<std::uint16_t>(v));
        break;
      case ElementType::Float:
        store_element(out, static_cast<float>(v));
        break;
      case ElementType::Double:
        store_element(out, v);
        break;
    }
  }
  write_file_atomic(path, out);
}

}  // namespace tumorroi
