// Copyright 2026 The softmar Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MAR_ERROR_HPP_
#define MAR_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace mar {

enum class ErrorCode {
  kDegenerateVector,
  kDimensionMismatch,
  kBatchTooSmall,
  kNonFiniteActivation,
  kEmptyAgentBank,
  kNoValidViews,
  kEmptyMiningSet,
  kLabelOutOfRange,
  kEmptyDataset,
  kNoPretrainStats,
  kInvalidScale,
  kEmptyGallery,
  kNoValidProbes,
  kInvalidSpec,
  kInvalidConfig,
  kMalformedFile,
  kIo,
  kNumericalFailure,
};

const char* to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so the
// CLI can map it onto an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Data errors exit with 2, numerical failures with 3.
int exit_status(ErrorCode code);

}  // namespace mar

#endif  // MAR_ERROR_HPP_
