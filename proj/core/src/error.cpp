// Copyright 2026 The vtsim Authors
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

#include "vtsim/error.hpp"

namespace vtsim {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kUnknownShape: return "unknown_shape";
    case ErrorCode::kUnknownSensor: return "unknown_sensor";
    case ErrorCode::kOutOfGel: return "out_of_gel";
    case ErrorCode::kNonconvergentRaymarch: return "nonconvergent_raymarch";
    case ErrorCode::kDomain: return "domain";
    case ErrorCode::kNoContactTimeout: return "no_contact_timeout";
    case ErrorCode::kMarkerCountMismatch: return "marker_count_mismatch";
    case ErrorCode::kShapeMismatch: return "shape_mismatch";
    case ErrorCode::kInvariantViolation: return "invariant_violation";
    case ErrorCode::kBadMagic: return "bad_magic";
    case ErrorCode::kUnsupportedVersion: return "unsupported_version";
    case ErrorCode::kTruncatedFile: return "truncated_file";
    case ErrorCode::kDimMismatch: return "dim_mismatch";
    case ErrorCode::kCorruptRecord: return "corrupt_record";
    case ErrorCode::kTrailingData: return "trailing_data";
    case ErrorCode::kMissingManifest: return "missing_manifest";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kNonfiniteGradient: return "nonfinite_gradient";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kEmptyInput: return "empty_input";
    case ErrorCode::kConfig: return "config";
  }
  return "unknown";
}

}  // namespace vtsim
