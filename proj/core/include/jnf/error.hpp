// Copyright 2026 The JNF Authors.
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

#ifndef JNF_ERROR_HPP_
#define JNF_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace jnflow {

enum class ErrorCode {
  invalid_config,
  invalid_argument,
  shape_mismatch,
  dimension_mismatch,
  label_mismatch,
  empty_class,
  training_diverged,
  not_positive_definite,
  batch_too_small,
  conditioning_mode_mismatch,
  degenerate_chains,
  non_finite_gradient,
  insufficient_samples,
  io_error,
  stage_failure,
  accuracy_below_floor,
};

const char* to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (notably the CLI) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace jnflow

#endif  // JNF_ERROR_HPP_
