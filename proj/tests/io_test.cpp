// SPDX-License-Identifier: Apache-2.0
#include "microgext/error.hpp"
#include "microgext/io.hpp"
#include "microgext/train.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

namespace microgext {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("microgext_io_" + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

bool frames_equal(const HandFrame& a, const HandFrame& b) {
  if (a.timestamp != b.timestamp || a.handedness != b.handedness) return false;
  for (int j = 0; j < kJoints; ++j) {
    if (a.joints[j].position != b.joints[j].position) return false;
    if (a.joints[j].orientation.coeffs() != b.joints[j].orientation.coeffs()) return false;
  }
  return true;
}

void expect_clips_equal(const LabeledClip& a, const LabeledClip& b, std::size_t i) {
  ASSERT_EQ(a.gesture, b.gesture) << i;
  ASSERT_EQ(a.subject_id, b.subject_id) << i;
  ASSERT_EQ(a.duration, b.duration) << i;
  ASSERT_EQ(a.substates, b.substates) << i;
  ASSERT_EQ(a.frames.size(), b.frames.size()) << i;
  for (std::size_t k = 0; k < a.frames.size(); ++k) ASSERT_TRUE(frames_equal(a.frames[k], b.frames[k])) << i << "/" << k;
}

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::IoError;
}

void overwrite(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << bytes;
}

TEST(DatasetFile, DefaultDatasetRoundTrips) {
  TempDir dir;
  const Dataset ds = make_dataset();
  ASSERT_EQ(ds.clips.size(), 1600u);
  write_dataset(ds, dir / "d.mgd");
  const Dataset back = read_dataset(dir / "d.mgd");
  EXPECT_EQ(back.seed, ds.seed);
  EXPECT_EQ(back.frame_rate, ds.frame_rate);
  ASSERT_EQ(back.clips.size(), ds.clips.size());
  for (std::size_t i = 0; i < ds.clips.size(); ++i) expect_clips_equal(ds.clips[i], back.clips[i], i);
}

TEST(DatasetFile, WritingTwiceGivesIdenticalBytes) {
  TempDir dir;
  const Dataset ds = make_dataset(2, 1, 1, 5);
  write_dataset(ds, dir / "a.mgd");
  write_dataset(ds, dir / "b.mgd");
  EXPECT_EQ(read_file(dir / "a.mgd"), read_file(dir / "b.mgd"));
}

TEST(DatasetFile, TruncationNamesTheFailingRecord) {
  TempDir dir;
  const Dataset ds = make_dataset(1, 1, 1, 5);
  write_dataset(ds, dir / "d.mgd");
  const std::string bytes = read_file(dir / "d.mgd");

  // Cut inside the last clip: every earlier record still parses.
  overwrite(dir / "t.mgd", bytes.substr(0, bytes.size() - 100));
  try {
    read_dataset(dir / "t.mgd");
    FAIL() << "truncated file accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CorruptRecord);
    EXPECT_NE(std::string(e.what()).find("record " + std::to_string(ds.clips.size() - 1)), std::string::npos)
        << e.what();
  }
}

TEST(DatasetFile, PermutedJointOrderIsRejected) {
  TempDir dir;
  write_dataset(make_dataset(1, 1, 1, 5), dir / "d.mgd");
  std::string bytes = read_file(dir / "d.mgd");
  // Swap two equal-length joint names inside the JSON header.
  const auto c = bytes.find("\"IndexTip\"");
  const auto d = bytes.find("\"ThumbTip\"");
  ASSERT_NE(c, std::string::npos);
  ASSERT_NE(d, std::string::npos);
  bytes.replace(c, 10, "\"ThumbTip\"");
  bytes.replace(d, 10, "\"IndexTip\"");
  overwrite(dir / "p.mgd", bytes);
  EXPECT_EQ(code_of([&] { read_dataset(dir / "p.mgd"); }), ErrorCode::JointOrderMismatch);
}

TEST(DatasetFile, WrongVersionIsRejected) {
  TempDir dir;
  write_dataset(make_dataset(1, 1, 1, 5), dir / "d.mgd");
  std::string bytes = read_file(dir / "d.mgd");
  bytes[4] = 9;  // u32 version follows the magic
  overwrite(dir / "v.mgd", bytes);
  EXPECT_EQ(code_of([&] { read_dataset(dir / "v.mgd"); }), ErrorCode::VersionMismatch);
}

TEST(Checkpoint, ForwardIsBitIdenticalAfterRoundTrip) {
  TempDir dir;
  ModelParams p = ModelParams::init(16, 3);
  p.tau = 1.75;
  HyperParams hp;
  hp.hidden = 16;
  hp.max_epochs = 7;
  save_checkpoint(p, hp, dir / "m.mgc");
  HyperParams hp_back;
  const ModelParams q = load_checkpoint(dir / "m.mgc", 16, &hp_back);
  EXPECT_EQ(hp_back.max_epochs, 7);
  EXPECT_EQ(q.tau, p.tau);

  std::mt19937_64 rng(8);
  const FeatureWindow x = extract_features(testing::random_window(rng));
  const ModelOutput a = forward(p, x);
  const ModelOutput b = forward(q, x);
  EXPECT_EQ(a.class_logits, b.class_logits);
  EXPECT_EQ(a.class_probs, b.class_probs);
  EXPECT_EQ(a.state_logits, b.state_logits);
  EXPECT_EQ(a.embedding, b.embedding);
}

TEST(Checkpoint, FlippedByteFailsTheHash) {
  TempDir dir;
  save_checkpoint(ModelParams::init(8, 1), HyperParams{}, dir / "m.mgc");
  std::string bytes = read_file(dir / "m.mgc");
  bytes[bytes.size() / 2] ^= 0x01;
  overwrite(dir / "f.mgc", bytes);
  EXPECT_EQ(code_of([&] { load_checkpoint(dir / "f.mgc"); }), ErrorCode::HashMismatch);
}

TEST(Checkpoint, DifferentWidthIsAShapeMismatch) {
  TempDir dir;
  save_checkpoint(ModelParams::init(8, 1), HyperParams{}, dir / "m.mgc");
  EXPECT_EQ(code_of([&] { load_checkpoint(dir / "m.mgc", 16); }), ErrorCode::ShapeMismatch);

  // Header claims one width, tensors carry another.
  ModelParams lying = ModelParams::init(8, 1);
  lying.hidden = 16;
  save_checkpoint(lying, HyperParams{}, dir / "l.mgc");
  EXPECT_EQ(code_of([&] { load_checkpoint(dir / "l.mgc"); }), ErrorCode::ShapeMismatch);
}

MetricsReport identity_report() {
  MetricsReport r;
  r.fold = 2;
  r.seed = 11;
  r.hidden = 64;
  r.checkpoint_sha256 = "ab";
  r.dataset_sha256 = "cd";
  Predictions pred;
  pred.class_logits = Matrix::Constant(kNumClasses * 3, kNumClasses, -5.0);
  for (int i = 0; i < kNumClasses * 3; ++i) {
    pred.class_logits(i, i % kNumClasses) = 5.0;
    pred.classes.push_back(i % kNumClasses);
  }
  pred.state_logits = Matrix::Constant(kNumStates * 2, kNumStates, -5.0);
  for (int i = 0; i < kNumStates * 2; ++i) {
    pred.state_logits(i, i % kNumStates) = 5.0;
    pred.states.push_back(i % kNumStates);
  }
  r.eval = summarize(pred, 1.0);
  return r;
}

TEST(Report, IdentityRendersWithUnitDiagonal) {
  const MetricsReport r = identity_report();
  const std::string table = report_table(r);
  EXPECT_NE(table.find("1.000"), std::string::npos);
  for (int i = 0; i < kNumClasses; ++i) EXPECT_EQ(r.eval.class_accuracy[i], 1.0);
  const auto j = report_to_json(r);
  for (int i = 0; i < kNumClasses; ++i) {
    for (int k = 0; k < kNumClasses; ++k) {
      EXPECT_EQ(j["class_confusion"][i][k].get<std::int64_t>(), i == k ? 3 : 0);
    }
  }
}

TEST(Report, ReEmitIsByteIdentical) {
  TempDir dir;
  const MetricsReport r = identity_report();
  emit_report(r, dir / "a.mgr", dir / "a.txt");
  const MetricsReport back = read_report(dir / "a.mgr");
  emit_report(back, dir / "b.mgr", dir / "b.txt");
  EXPECT_EQ(read_file(dir / "a.mgr"), read_file(dir / "b.mgr"));
  EXPECT_EQ(read_file(dir / "a.txt"), read_file(dir / "b.txt"));
}

TEST(Report, MissingClassSurvivesAsNull) {
  MetricsReport r = identity_report();
  r.eval.class_accuracy[3] = std::nan("");
  const auto j = report_to_json(r);
  EXPECT_TRUE(j["class_accuracy"][3].is_null());
  EXPECT_TRUE(std::isnan(report_from_json(j).eval.class_accuracy[3]));
}

TEST(SessionFile, RoundTrip) {
  TempDir dir;
  std::mt19937_64 rng(4);
  SessionRecording rec;
  for (int i = 0; i < 30; ++i) {
    HandFrame f = testing::random_frame(rng, i / kNativeRate, i % 3 ? Handedness::Right : Handedness::Left);
    for (auto& jp : f.joints) {
      for (int k = 0; k < 3; ++k) jp.position[k] = static_cast<float>(jp.position[k]);
      for (int k = 0; k < 4; ++k) jp.orientation.coeffs()[k] = static_cast<float>(jp.orientation.coeffs()[k]);
    }
    rec.frames.push_back(f);
  }
  rec.events.push_back({GestureClass::Swipe, 0.25, 0.97, {0, 0, 1, 1, 2, kNoSwipeState}});
  rec.events.push_back({GestureClass::Fist, 0.4, 0.99, {}});
  write_session(rec, dir / "s.mgs");
  const SessionRecording back = read_session(dir / "s.mgs");
  ASSERT_EQ(back.frames.size(), rec.frames.size());
  for (std::size_t i = 0; i < rec.frames.size(); ++i) EXPECT_TRUE(frames_equal(back.frames[i], rec.frames[i])) << i;
  EXPECT_EQ(back.events, rec.events);
}

TEST(CommandLog, RoundTrip) {
  TempDir dir;
  const std::vector<CommandRecord> log = {
      {0.5, EditCommand::set_granularity(Granularity::Word), CommandSource::ModeSwitch, std::nullopt},
      {1.25, EditCommand::move_caret(-2), CommandSource::Gesture, std::nullopt},
      {2.0, EditCommand::of(CommandKind::Cut), CommandSource::Gesture, ErrorCode::NoSelection},
      {3.0, EditCommand::select_range(1), CommandSource::SwipeTracking, std::nullopt},
      {4.0, EditCommand::of(CommandKind::ConfirmCaret), CommandSource::PinchHold, std::nullopt},
  };
  write_command_log(log, dir / "c.log");
  EXPECT_EQ(read_command_log(dir / "c.log"), log);
}

TEST(DocumentJson, HistoryIsOptional) {
  Document d = Document::start("ab", Granularity::Character);
  d = apply(d, EditCommand::of(CommandKind::SelectAll));
  EXPECT_EQ(document_to_json(d).dump(),
            R"({"text":"ab","caret":2,"selection":{"anchor":0,"head":2},"granularity":"Character","clipboard":"","undo_depth":1})");
  EXPECT_FALSE(document_to_json(d, false).contains("undo_depth"));
}

}  // namespace
}  // namespace microgext
