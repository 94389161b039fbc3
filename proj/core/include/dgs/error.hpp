// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dgs {

enum class ErrorCode {
  UnknownTag,
  UnsortedStream,
  InvalidDiagram,
  PreconditionUnsatisfiable,
  IncompatiblePair,
  GeneratorExhausted,
  Unowned,
  NoMatch,
  StaleMessage,
  ProtocolViolation,
  InvalidProgram,
  InvalidPlan,
  InvalidInput,
  Deadlock,
  Config,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dgs
