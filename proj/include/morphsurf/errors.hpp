// Copyright 2026 The morphsurf Authors.
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

namespace morph {

enum class Errc {
  kInvalidArgument,
  kDimensionMismatch,
  kSingularSystem,
  kSolverFailure,
  kDivisionByZero,
  kTargetExceedsSupply,
  kNotRepresentable,
  kRepairFailure,
  kMissingComponents,
  kFormatError,
  kDegenerateCloud,
  kXYMismatch,
  kNonFiniteLoss,
  kConfigError,
};

const char* errc_name(Errc code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code) {}

  Errc code() const noexcept { return code_; }

  // Usage/config errors map to exit code 2, numeric failures to 3.
  bool is_numeric() const noexcept {
    switch (code_) {
      case Errc::kSingularSystem:
      case Errc::kSolverFailure:
      case Errc::kDivisionByZero:
      case Errc::kRepairFailure:
      case Errc::kDegenerateCloud:
      case Errc::kNonFiniteLoss:
        return true;
      default:
        return false;
    }
  }

 private:
  Errc code_;
};

inline const char* errc_name(Errc code) {
  switch (code) {
    case Errc::kInvalidArgument: return "InvalidArgument";
    case Errc::kDimensionMismatch: return "DimensionMismatch";
    case Errc::kSingularSystem: return "SingularSystem";
    case Errc::kSolverFailure: return "SolverFailure";
    case Errc::kDivisionByZero: return "DivisionByZero";
    case Errc::kTargetExceedsSupply: return "TargetExceedsSupply";
    case Errc::kNotRepresentable: return "NotRepresentable";
    case Errc::kRepairFailure: return "RepairFailure";
    case Errc::kMissingComponents: return "MissingComponents";
    case Errc::kFormatError: return "FormatError";
    case Errc::kDegenerateCloud: return "DegenerateCloud";
    case Errc::kXYMismatch: return "XYMismatch";
    case Errc::kNonFiniteLoss: return "NonFiniteLoss";
    case Errc::kConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace morph
