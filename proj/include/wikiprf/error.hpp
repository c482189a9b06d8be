// Copyright 2026 The wikiprf Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wikiprf {

enum class ErrorCode {
  MissingSlot,
  UnknownSlot,
  BadMagic,
  BadHeader,
  TruncatedPixels,
  NoBox,
  DegenerateBox,
  EmptyInput,
  RemoteUnavailable,
  Timeout,
  DuplicateId,
  BadRecord,
  DimensionMismatch,
  NotFound,
  Empty,
  Io,
  VersionMismatch,
  ChecksumMismatch,
  NoScriptMatch,
  ModelFailure,
  GroupTooSmall,
  LengthMismatch,
  MissingGroundTruth,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception carrying a machine-checkable code. Callers that degrade
/// gracefully switch on code(); the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace wikiprf
