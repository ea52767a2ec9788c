// SPDX-License-Identifier: Apache-2.0
#include "microgext/editor.hpp"

#include <algorithm>
#include <array>
#include <charconv>

namespace microgext {

namespace {

constexpr std::array<std::string_view, 4> kGranularityNames = {"Character", "Word", "Sentence",
                                                               "Paragraph"};
constexpr std::array<std::string_view, 11> kCommandNames = {
    "MoveCaret", "SelectRange", "Cut",           "Copy",         "Paste",    "Undo",
    "Delete",    "SelectAll",   "SetGranularity", "ConfirmCaret", "ResetTask"};

bool is_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_terminator(char c) noexcept { return c == '.' || c == '!' || c == '?'; }

// True when a unit of granularity g begins at index i (0 < i < len).
bool starts_unit(std::string_view s, std::size_t i, Granularity g) {
  switch (g) {
    case Granularity::Character:
      return true;
    case Granularity::Word:
      return !is_space(s[i]) && is_space(s[i - 1]);
    case Granularity::Sentence: {
      if (is_space(s[i]) || !is_space(s[i - 1])) return false;
      std::size_t j = i;
      while (j > 0 && is_space(s[j - 1])) --j;
      return j > 0 && is_terminator(s[j - 1]);
    }
    case Granularity::Paragraph: {
      if (s[i] == '\n') return false;
      std::size_t breaks = 0;
      for (std::size_t j = i; j > 0 && s[j - 1] == '\n'; --j) ++breaks;
      return breaks >= 2;
    }
  }
  return false;
}

void push_undo(Document& d, const Snapshot& snap) {
  d.undo_stack.push_back(snap);
  if (d.undo_stack.size() > kUndoDepth) d.undo_stack.pop_front();
}

// Unit i spans [starts[i], ends[i]); returns the unit strictly containing pos.
std::optional<std::size_t> unit_strictly_containing(const std::vector<std::size_t>& starts,
                                                    const std::vector<std::size_t>& ends,
                                                    std::size_t pos) {
  for (std::size_t i = 0; i < starts.size(); ++i) {
    if (starts[i] < pos && pos < ends[i]) return i;
  }
  return std::nullopt;
}

Document select_range(const Document& doc, int delta) {
  Document d = doc;
  if (delta == 0) return d;
  const auto starts = segment(d.text, d.granularity);
  const auto ends = unit_ends(d.text, d.granularity);
  const std::size_t len = d.text.size();
  std::size_t anchor, head;
  if (d.selection) {
    anchor = d.selection->anchor;
    head = d.selection->head;
  } else {
    head = d.caret;
    anchor = d.caret;
    if (const auto u = unit_strictly_containing(starts, ends, d.caret)) {
      anchor = delta > 0 ? starts[*u] : ends[*u];
    }
  }
  for (int step = 0; step < std::abs(delta); ++step) {
    if (delta > 0) {
      auto it = std::upper_bound(ends.begin(), ends.end(), head);
      head = it == ends.end() ? len : *it;
    } else {
      auto it = std::lower_bound(starts.begin(), starts.end(), head);
      head = it == starts.begin() ? 0 : *(it - 1);
    }
  }
  d.caret = head;
  if (head == anchor) {
    d.selection.reset();
  } else {
    d.selection = Selection{anchor, head};
  }
  return d;
}

}  // namespace

std::string_view to_string(Granularity g) noexcept { return kGranularityNames[static_cast<int>(g)]; }

std::optional<Granularity> parse_granularity(std::string_view s) noexcept {
  for (std::size_t i = 0; i < kGranularityNames.size(); ++i) {
    if (kGranularityNames[i] == s) return static_cast<Granularity>(i);
  }
  return std::nullopt;
}

std::string to_string(const EditCommand& cmd) {
  std::string out(kCommandNames[static_cast<int>(cmd.kind)]);
  if (cmd.kind == CommandKind::MoveCaret || cmd.kind == CommandKind::SelectRange) {
    out += cmd.delta >= 0 ? " +" : " ";
    out += std::to_string(cmd.delta);
  } else if (cmd.kind == CommandKind::SetGranularity) {
    out += ' ';
    out += to_string(cmd.mode);
  }
  return out;
}

EditCommand parse_command(std::string_view s) {
  const auto space = s.find(' ');
  const std::string_view name = s.substr(0, space);
  const std::string_view arg = space == std::string_view::npos ? "" : s.substr(space + 1);
  for (std::size_t i = 0; i < kCommandNames.size(); ++i) {
    if (kCommandNames[i] != name) continue;
    EditCommand cmd = EditCommand::of(static_cast<CommandKind>(i));
    if (cmd.kind == CommandKind::MoveCaret || cmd.kind == CommandKind::SelectRange) {
      std::string_view digits = arg;
      if (!digits.empty() && digits.front() == '+') digits.remove_prefix(1);
      const auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), cmd.delta);
      if (ec != std::errc() || p != digits.data() + digits.size() || digits.empty()) {
        throw Error(ErrorCode::InvalidArgument, "bad delta in command '" + std::string(s) + "'");
      }
    } else if (cmd.kind == CommandKind::SetGranularity) {
      const auto g = parse_granularity(arg);
      if (!g) throw Error(ErrorCode::InvalidArgument, "bad granularity in '" + std::string(s) + "'");
      cmd.mode = *g;
    } else if (!arg.empty()) {
      throw Error(ErrorCode::InvalidArgument, "unexpected argument in '" + std::string(s) + "'");
    }
    return cmd;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown command '" + std::string(s) + "'");
}

Document Document::start(std::string text, Granularity g) {
  Document d;
  d.text = std::move(text);
  d.granularity = g;
  d.task_start = d.snapshot();
  return d;
}

void Document::check_invariants() const {
  const auto fail = [](const char* what) { throw Error(ErrorCode::InvalidArgument, what); };
  if (caret > text.size()) fail("caret past end of text");
  if (selection) {
    if (selection->anchor > text.size() || selection->head > text.size()) fail("selection out of bounds");
    if (selection->anchor == selection->head) fail("empty selection stored");
    if (selection->head != caret) fail("caret is not the selection head");
  }
  if (undo_stack.size() > kUndoDepth) fail("undo stack too deep");
}

std::vector<std::size_t> segment(std::string_view text, Granularity g) {
  std::vector<std::size_t> starts{0};
  for (std::size_t i = 1; i < text.size(); ++i) {
    if (starts_unit(text, i, g)) starts.push_back(i);
  }
  return starts;
}

std::vector<std::size_t> unit_ends(std::string_view text, Granularity g) {
  const auto starts = segment(text, g);
  std::vector<std::size_t> ends;
  ends.reserve(starts.size());
  for (std::size_t i = 0; i < starts.size(); ++i) {
    std::size_t e = i + 1 < starts.size() ? starts[i + 1] : text.size();
    if (g != Granularity::Character) {
      while (e > starts[i] + 1 && is_space(text[e - 1])) --e;
    }
    ends.push_back(std::min(e, text.size()));
  }
  return ends;
}

Document move_caret(const Document& doc, int delta, Granularity g) {
  Document d = doc;
  d.selection.reset();
  const auto starts = segment(d.text, g);
  for (int step = 0; step < std::abs(delta); ++step) {
    if (delta > 0) {
      auto it = std::upper_bound(starts.begin(), starts.end(), d.caret);
      d.caret = it == starts.end() ? d.text.size() : *it;
    } else {
      auto it = std::lower_bound(starts.begin(), starts.end(), d.caret);
      d.caret = it == starts.begin() ? 0 : *(it - 1);
    }
  }
  return d;
}

ApplyResult try_apply(const Document& doc, const EditCommand& cmd) {
  const auto reject = [&doc](ErrorCode code) { return ApplyResult{doc, code}; };
  const Snapshot before = doc.snapshot();
  Document d = doc;
  switch (cmd.kind) {
    case CommandKind::MoveCaret:
      d = move_caret(doc, cmd.delta, doc.granularity);
      break;
    case CommandKind::SelectRange:
      d = select_range(doc, cmd.delta);
      break;
    case CommandKind::Copy:
    case CommandKind::Cut:
    case CommandKind::Delete: {
      if (!doc.selection) return reject(ErrorCode::NoSelection);
      const std::size_t lo = doc.selection->lo(), hi = doc.selection->hi();
      if (cmd.kind != CommandKind::Delete) d.clipboard = doc.text.substr(lo, hi - lo);
      if (cmd.kind != CommandKind::Copy) {
        d.text.erase(lo, hi - lo);
        d.caret = lo;
        d.selection.reset();
      }
      break;
    }
    case CommandKind::Paste: {
      if (doc.clipboard.empty()) return reject(ErrorCode::EmptyClipboard);
      std::size_t at = doc.caret;
      if (doc.selection) {
        at = doc.selection->lo();
        d.text.erase(at, doc.selection->hi() - at);
        d.selection.reset();
      }
      d.text.insert(at, doc.clipboard);
      d.caret = at + doc.clipboard.size();
      break;
    }
    case CommandKind::SelectAll:
      d.caret = d.text.size();
      if (d.text.empty()) {
        d.selection.reset();
      } else {
        d.selection = Selection{0, d.text.size()};
      }
      break;
    case CommandKind::SetGranularity:
      d.granularity = cmd.mode;
      break;
    case CommandKind::ConfirmCaret:
      break;
    case CommandKind::Undo: {
      if (doc.undo_stack.empty()) return reject(ErrorCode::UndoStackEmpty);
      const Snapshot& s = doc.undo_stack.back();
      d.text = s.text;
      d.caret = s.caret;
      d.selection = s.selection;
      d.undo_stack.pop_back();
      return {std::move(d), std::nullopt};
    }
    case CommandKind::ResetTask:
      d.text = doc.task_start.text;
      d.caret = doc.task_start.caret;
      d.selection.reset();
      d.undo_stack.clear();
      return {std::move(d), std::nullopt};
  }
  push_undo(d, before);
  return {std::move(d), std::nullopt};
}

Document apply(const Document& doc, const EditCommand& cmd) {
  ApplyResult r = try_apply(doc, cmd);
  if (r.error) throw Error(*r.error, to_string(cmd));
  return std::move(r.doc);
}

}  // namespace microgext
