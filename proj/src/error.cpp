// SPDX-License-Identifier: Apache-2.0
#include "microgext/error.hpp"

namespace microgext {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::WrongFrameCount: return "WrongFrameCount";
    case ErrorCode::MixedHandedness: return "MixedHandedness";
    case ErrorCode::NonMonotoneTimestamps: return "NonMonotoneTimestamps";
    case ErrorCode::AlreadyRight: return "AlreadyRight";
    case ErrorCode::TooFewFrames: return "TooFewFrames";
    case ErrorCode::NonPositiveRate: return "NonPositiveRate";
    case ErrorCode::NullNotSupportedHere: return "NullNotSupportedHere";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteActivation: return "NonFiniteActivation";
    case ErrorCode::BatchTooSmallForContrastive: return "BatchTooSmallForContrastive";
    case ErrorCode::MissingClass: return "MissingClass";
    case ErrorCode::EmptyFold: return "EmptyFold";
    case ErrorCode::EmptyValidation: return "EmptyValidation";
    case ErrorCode::MalformedProbs: return "MalformedProbs";
    case ErrorCode::OutOfOrderFrame: return "OutOfOrderFrame";
    case ErrorCode::NoSelection: return "NoSelection";
    case ErrorCode::EmptyClipboard: return "EmptyClipboard";
    case ErrorCode::UndoStackEmpty: return "UndoStackEmpty";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::CorruptRecord: return "CorruptRecord";
    case ErrorCode::JointOrderMismatch: return "JointOrderMismatch";
    case ErrorCode::HashMismatch: return "HashMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace microgext

#include <iostream>
#include <mutex>

namespace microgext {
namespace {

std::mutex& handler_mutex() {
  static std::mutex m;
  return m;
}

WarningHandler& handler() {
  static WarningHandler h = [](std::string_view msg) { std::cerr << "warning: " << msg << '\n'; };
  return h;
}

}  // namespace

void set_warning_handler(WarningHandler h) {
  std::lock_guard lock(handler_mutex());
  handler() = std::move(h);
}

void warn(std::string_view message) {
  std::lock_guard lock(handler_mutex());
  if (handler()) handler()(message);
}

}  // namespace microgext
