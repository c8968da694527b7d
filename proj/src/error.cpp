// Copyright 2026 The hefl Authors
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

#include "hefl/error.hpp"

namespace hefl {

const char* ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kDomain: return "domain";
    case ErrorCode::kKeyMismatch: return "key_mismatch";
    case ErrorCode::kGeneration: return "generation";
    case ErrorCode::kIncomplete: return "incomplete";
    case ErrorCode::kDuplicate: return "duplicate";
    case ErrorCode::kDegenerate: return "degenerate";
    case ErrorCode::kProtocolAbort: return "protocol_abort";
    case ErrorCode::kTraining: return "training";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kOrdering: return "ordering";
    case ErrorCode::kValidation: return "validation";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kParse: return "parse";
  }
  return "unknown";
}

}  // namespace hefl
