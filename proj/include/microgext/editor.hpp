// SPDX-License-Identifier: Apache-2.0
//
// Text document with caret, granularity-snapped selection, clipboard and a
// bounded undo stack. All operations are value-in, value-out.
#pragma once

#include "microgext/error.hpp"

#include <cstddef>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace microgext {

enum class Granularity { Character = 0, Word, Sentence, Paragraph };

std::string_view to_string(Granularity g) noexcept;
std::optional<Granularity> parse_granularity(std::string_view s) noexcept;

enum class CommandKind {
  MoveCaret,
  SelectRange,
  Cut,
  Copy,
  Paste,
  Undo,
  Delete,
  SelectAll,
  SetGranularity,
  ConfirmCaret,
  ResetTask,
};

struct EditCommand {
  CommandKind kind = CommandKind::ConfirmCaret;
  int delta = 0;                                 // MoveCaret / SelectRange, in units
  Granularity mode = Granularity::Character;    // SetGranularity

  static EditCommand move_caret(int d) { return {CommandKind::MoveCaret, d, {}}; }
  static EditCommand select_range(int d) { return {CommandKind::SelectRange, d, {}}; }
  static EditCommand set_granularity(Granularity g) { return {CommandKind::SetGranularity, 0, g}; }
  static EditCommand of(CommandKind k) { return {k, 0, {}}; }

  friend bool operator==(const EditCommand&, const EditCommand&) = default;
};

/// "MoveCaret +3", "SetGranularity Word", "Cut".
std::string to_string(const EditCommand& cmd);
/// Inverse of to_string; throws InvalidArgument.
EditCommand parse_command(std::string_view s);

struct Selection {
  std::size_t anchor = 0;
  std::size_t head = 0;

  std::size_t lo() const noexcept { return anchor < head ? anchor : head; }
  std::size_t hi() const noexcept { return anchor < head ? head : anchor; }
  friend bool operator==(const Selection&, const Selection&) = default;
};

struct Snapshot {
  std::string text;
  std::size_t caret = 0;
  std::optional<Selection> selection;

  friend bool operator==(const Snapshot&, const Snapshot&) = default;
};

inline constexpr std::size_t kUndoDepth = 100;

struct Document {
  std::string text;  // bytes; one byte is one character
  std::size_t caret = 0;
  std::optional<Selection> selection;
  Granularity granularity = Granularity::Character;
  std::string clipboard;
  std::deque<Snapshot> undo_stack;  // newest at the back
  Snapshot task_start;

  /// Fresh task document: caret 0, no selection, empty clipboard.
  static Document start(std::string text, Granularity g = Granularity::Character);

  Snapshot snapshot() const { return {text, caret, selection}; }
  /// Throws InvalidArgument naming the first broken invariant.
  void check_invariants() const;
};

/// Unit start indices: strictly increasing, beginning at 0. Empty text gives {0}.
std::vector<std::size_t> segment(std::string_view text, Granularity g);

/// Exclusive end index of each unit returned by segment(), trimmed of
/// trailing whitespace (Sentence and Paragraph units keep their
/// terminator). Empty text gives {0}.
std::vector<std::size_t> unit_ends(std::string_view text, Granularity g);

/// Moves the caret |delta| unit starts (end of text counts as one) and
/// clears the selection. No undo entry.
Document move_caret(const Document& doc, int delta, Granularity g);

struct ApplyResult {
  Document doc;
  std::optional<ErrorCode> error;  // set when the command was rejected; doc is unchanged
};

ApplyResult try_apply(const Document& doc, const EditCommand& cmd);
/// Throws Error (NoSelection, EmptyClipboard, UndoStackEmpty) where try_apply reports one.
Document apply(const Document& doc, const EditCommand& cmd);

}  // namespace microgext
