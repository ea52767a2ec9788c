// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace microgext {

enum class ErrorCode {
  WrongFrameCount,
  MixedHandedness,
  NonMonotoneTimestamps,
  AlreadyRight,
  TooFewFrames,
  NonPositiveRate,
  NullNotSupportedHere,
  ShapeMismatch,
  NonFiniteActivation,
  BatchTooSmallForContrastive,
  MissingClass,
  EmptyFold,
  EmptyValidation,
  MalformedProbs,
  OutOfOrderFrame,
  NoSelection,
  EmptyClipboard,
  UndoStackEmpty,
  VersionMismatch,
  CorruptRecord,
  JointOrderMismatch,
  HashMismatch,
  InvalidArgument,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (and tests) can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace microgext

#include <functional>

namespace microgext {

using WarningHandler = std::function<void(std::string_view)>;

/// Routes library warnings; the default handler writes to stderr.
void set_warning_handler(WarningHandler handler);
void warn(std::string_view message);

}  // namespace microgext
