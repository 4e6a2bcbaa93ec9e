// Copyright 2026 The genret Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace genret {

enum class ErrorCode {
  kInvalidArgument = 1,
  kIo,
  kParse,
  kDuplicate,
  kNotFound,
  kState,
  kIntegrity,
  kVersion,
  kNumeric,
  kBackendTransport,
  kBackendRequest,
  kBackendProtocol,
};

// All library failures are reported as Error; the C API maps code() onto
// its status enum.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void Require(bool condition, const std::string& message) {
  if (!condition) Fail(ErrorCode::kInvalidArgument, message);
}

}  // namespace genret
