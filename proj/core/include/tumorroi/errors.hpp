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

#include <stdexcept>
#include <string>

namespace tumorroi {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition or invariant violated by caller-supplied data.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent run configuration (missing atlas, bad slice list, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

class BoundsError : public Error {
 public:
  using Error::Error;
};

/// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed file content. `key()` names the offending header key, if any.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what, std::string key = {})
      : Error(what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Well-formed file using a feature this reader does not implement.
class UnsupportedError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Payload shorter than the header-declared dimensions.
class TruncationError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// No tumor region survived the pipeline (or the ground truth is empty).
class NoTumorError : public Error {
 public:
  NoTumorError(const std::string& what, std::string diagnostics = {})
      : Error(what), diagnostics_(std::move(diagnostics)) {}
  const std::string& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::string diagnostics_;
};

}  // namespace tumorroi
