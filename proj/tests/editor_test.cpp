// SPDX-License-Identifier: Apache-2.0
#include "editor_oracle.hpp"
#include "microgext/editor.hpp"

#include <gtest/gtest.h>

namespace microgext {
namespace {

using V = std::vector<std::size_t>;

TEST(Segment, Examples) {
  EXPECT_EQ(segment("", Granularity::Word), V{0});
  EXPECT_EQ(segment("", Granularity::Character), V{0});
  EXPECT_EQ(segment("A b. C d.", Granularity::Sentence), (V{0, 5}));
  EXPECT_EQ(segment("p1\n\np2", Granularity::Paragraph), (V{0, 4}));
  EXPECT_EQ(segment("hello world", Granularity::Word), (V{0, 6}));
  EXPECT_EQ(segment("abc", Granularity::Character), (V{0, 1, 2}));
  EXPECT_EQ(segment("  lead", Granularity::Word), (V{0, 2}));
  EXPECT_EQ(segment("pi is 3.14 ok. Next", Granularity::Sentence), (V{0, 15}));
  EXPECT_EQ(segment("a\nb\n\n\nc", Granularity::Paragraph), (V{0, 6}));
}

TEST(Segment, UnitEndsDropTrailingSpaceKeepTerminator) {
  EXPECT_EQ(unit_ends("A b. C d.", Granularity::Sentence), (V{4, 9}));
  EXPECT_EQ(unit_ends("hello world", Granularity::Word), (V{5, 11}));
  EXPECT_EQ(unit_ends("p1\n\np2\n", Granularity::Paragraph), (V{2, 6}));
  EXPECT_EQ(unit_ends("ab", Granularity::Character), (V{1, 2}));
}

TEST(Segment, StrictlyIncreasingFromZero) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 2000; ++i) {
    const std::string s = testing::random_text(rng);
    for (int g = 0; g < 4; ++g) {
      const V starts = segment(s, static_cast<Granularity>(g));
      ASSERT_FALSE(starts.empty());
      EXPECT_EQ(starts.front(), 0u);
      for (std::size_t k = 1; k < starts.size(); ++k) EXPECT_LT(starts[k - 1], starts[k]);
      if (!s.empty()) {
        EXPECT_LT(starts.back(), s.size());
      }
    }
  }
}

TEST(MoveCaret, WordStepAndClamp) {
  Document d = Document::start("hello world");
  EXPECT_EQ(move_caret(d, 1, Granularity::Word).caret, 6u);
  EXPECT_EQ(move_caret(d, 2, Granularity::Word).caret, 11u);
  EXPECT_EQ(move_caret(d, 0, Granularity::Word).caret, 0u);
  d.caret = 11;
  EXPECT_EQ(move_caret(d, 5, Granularity::Sentence).caret, 11u);
  EXPECT_EQ(move_caret(d, -1, Granularity::Word).caret, 6u);
  d.caret = 8;
  EXPECT_EQ(move_caret(d, -1, Granularity::Word).caret, 6u);
  EXPECT_EQ(move_caret(d, -9, Granularity::Character).caret, 0u);
}

TEST(Apply, CutCopyPasteDelete) {
  Document d = Document::start("abc");
  d.selection = Selection{0, 2};
  d.caret = 2;
  const Document cut = apply(d, EditCommand::of(CommandKind::Cut));
  EXPECT_EQ(cut.text, "c");
  EXPECT_EQ(cut.clipboard, "ab");
  EXPECT_EQ(cut.caret, 0u);
  EXPECT_FALSE(cut.selection);

  const Document copied = apply(d, EditCommand::of(CommandKind::Copy));
  EXPECT_EQ(copied.text, "abc");
  EXPECT_EQ(copied.clipboard, "ab");
  EXPECT_EQ(copied.selection, d.selection);

  Document pasted = apply(cut, EditCommand::move_caret(1));
  pasted = apply(pasted, EditCommand::of(CommandKind::Paste));
  EXPECT_EQ(pasted.text, "cab");
  EXPECT_EQ(pasted.caret, 3u);

  Document withclip = d;
  withclip.clipboard = "zz";
  const Document del = apply(withclip, EditCommand::of(CommandKind::Delete));
  EXPECT_EQ(del.text, "c");
  EXPECT_EQ(del.clipboard, "zz");
}

TEST(Apply, ErrorsLeaveDocumentUntouched) {
  const Document d = Document::start("abc");
  for (CommandKind k : {CommandKind::Cut, CommandKind::Copy, CommandKind::Delete}) {
    const ApplyResult r = try_apply(d, EditCommand::of(k));
    EXPECT_EQ(r.error, ErrorCode::NoSelection);
    EXPECT_EQ(r.doc.snapshot(), d.snapshot());
    EXPECT_TRUE(r.doc.undo_stack.empty());
  }
  EXPECT_EQ(try_apply(d, EditCommand::of(CommandKind::Paste)).error, ErrorCode::EmptyClipboard);
  EXPECT_EQ(try_apply(d, EditCommand::of(CommandKind::Undo)).error, ErrorCode::UndoStackEmpty);
  try {
    apply(d, EditCommand::of(CommandKind::Cut));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoSelection);
  }
}

TEST(Apply, SelectAllSpansDocument) {
  const Document d = apply(Document::start("two words"), EditCommand::of(CommandKind::SelectAll));
  EXPECT_EQ(d.selection, (Selection{0, 9}));
  EXPECT_EQ(d.caret, 9u);
  EXPECT_FALSE(apply(Document::start(""), EditCommand::of(CommandKind::SelectAll)).selection);
}

TEST(Apply, SelectRangeSnapsToUnits) {
  Document d = Document::start("The quick brown fox jumps over", Granularity::Word);
  d = apply(d, EditCommand::move_caret(3));
  ASSERT_EQ(d.caret, 16u);
  d = apply(d, EditCommand::select_range(2));
  EXPECT_EQ(d.selection, (Selection{16, 25}));
  EXPECT_EQ(d.text.substr(16, 9), "fox jumps");
  d = apply(d, EditCommand::select_range(-1));
  EXPECT_EQ(d.selection, (Selection{16, 20}));
  d = apply(d, EditCommand::select_range(-1));
  EXPECT_FALSE(d.selection);
  EXPECT_EQ(d.caret, 16u);

  // From inside a word, a forward selection starts at the word start and a
  // backward one at its end.
  Document mid = Document::start("alpha beta", Granularity::Word);
  mid.caret = 2;
  EXPECT_EQ(apply(mid, EditCommand::select_range(1)).selection, (Selection{0, 5}));
  mid.caret = 8;
  EXPECT_EQ(apply(mid, EditCommand::select_range(-1)).selection, (Selection{10, 6}));

  Document sent = Document::start("One two. Three four.  Five.", Granularity::Sentence);
  sent = apply(sent, EditCommand::select_range(2));
  EXPECT_EQ(sent.text.substr(0, sent.selection->hi()), "One two. Three four.");
}

TEST(Apply, UndoAndReset) {
  Document d = Document::start("abc def");
  d = apply(d, EditCommand::of(CommandKind::SelectAll));
  d = apply(d, EditCommand::of(CommandKind::Cut));
  EXPECT_EQ(d.text, "");
  d = apply(d, EditCommand::of(CommandKind::Undo));
  EXPECT_EQ(d.text, "abc def");
  EXPECT_EQ(d.selection, (Selection{0, 7}));
  d = apply(d, EditCommand::of(CommandKind::ResetTask));
  EXPECT_EQ(d.snapshot(), Document::start("abc def").snapshot());
  EXPECT_TRUE(d.undo_stack.empty());
  EXPECT_EQ(d.clipboard, "abc def");
}

TEST(Apply, UndoDepthIsBounded) {
  Document d = Document::start("x");
  for (int i = 0; i < 150; ++i) d = apply(d, EditCommand::move_caret(i % 2 ? 1 : -1));
  EXPECT_EQ(d.undo_stack.size(), kUndoDepth);
}

TEST(Commands, TextRoundTrip) {
  for (const EditCommand& c :
       {EditCommand::move_caret(3), EditCommand::move_caret(-2), EditCommand::select_range(0),
        EditCommand::set_granularity(Granularity::Paragraph), EditCommand::of(CommandKind::ResetTask)}) {
    EXPECT_EQ(parse_command(to_string(c)), c);
  }
  EXPECT_EQ(to_string(EditCommand::move_caret(3)), "MoveCaret +3");
  EXPECT_THROW(parse_command("Jump 2"), Error);
  EXPECT_THROW(parse_command("MoveCaret two"), Error);
}

TEST(EditorFuzz, AgreesWithReferenceAndKeepsInvariants) {
  const auto st = testing::fuzz_editor(2024, 2000);
  EXPECT_EQ(st.total_violations(), 0u) << st.first_problem;
  EXPECT_GT(st.commands, 10000u);
}

}  // namespace
}  // namespace microgext
