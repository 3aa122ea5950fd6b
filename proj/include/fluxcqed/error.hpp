// Copyright 2026 The fluxcqed Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
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
#include <vector>

namespace fluxcqed {

enum class ErrorCode {
  kInvalidDimension,
  kInvalidArgument,
  kOutOfRange,
  kDimensionMismatch,
  kInvalidParameters,
  kDegenerateLabeling,
  kFitFailure,
  kInstability,
  kSingularSystem,
  kTimestepMismatch,
  kIntegrationFailure,
  kInsufficientCoverage,
  kConfig,
  kIo,
};

const char* to_string(ErrorCode code);

/// Single exception type for the library; `code()` lets callers (the CLI in
/// particular) map failures onto exit statuses without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// True for failures that originate in the numerics rather than in the
  /// caller's inputs.
  bool is_numerical() const noexcept {
    switch (code_) {
      case ErrorCode::kFitFailure:
      case ErrorCode::kInstability:
      case ErrorCode::kSingularSystem:
      case ErrorCode::kIntegrationFailure:
      case ErrorCode::kDegenerateLabeling:
      case ErrorCode::kInsufficientCoverage:
        return true;
      default:
        return false;
    }
  }

 private:
  ErrorCode code_;
};

/// Collects soft warnings (truncation guards, validity regimes). Functions
/// take an optional pointer; passing nullptr discards them.
struct Warnings {
  std::vector<std::string> messages;

  void add(std::string msg) { messages.push_back(std::move(msg)); }
  bool empty() const { return messages.empty(); }
};

inline void warn(Warnings* sink, std::string msg) {
  if (sink != nullptr) sink->add(std::move(msg));
}

}  // namespace fluxcqed
