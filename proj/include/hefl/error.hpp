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

#ifndef HEFL_ERROR_HPP_
#define HEFL_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace hefl {

enum class ErrorCode {
  kInvalidArgument = 1,
  kDomain,          // value outside the plaintext / coordinate range
  kKeyMismatch,     // ciphertext, share, or key from a different key pair
  kGeneration,      // prime search exhausted
  kIncomplete,      // missing key shares or offline parties
  kDuplicate,
  kDegenerate,      // zero slope denominator or zero sign input
  kProtocolAbort,
  kTraining,
  kDivergence,
  kOrdering,
  kValidation,
  kConfig,
  kIo,
  kParse,
};

const char* ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace hefl

#endif  // HEFL_ERROR_HPP_
