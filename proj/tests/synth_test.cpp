// SPDX-License-Identifier: Apache-2.0
#include "microgext/error.hpp"
#include "microgext/synth.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <map>

namespace microgext {
namespace {

bool frames_equal(const HandFrame& a, const HandFrame& b) {
  if (a.timestamp != b.timestamp || a.handedness != b.handedness) return false;
  for (int j = 0; j < kJoints; ++j) {
    if (a.joints[j].position != b.joints[j].position) return false;
    if (a.joints[j].orientation.coeffs() != b.joints[j].orientation.coeffs()) return false;
  }
  return true;
}

bool clips_equal(const LabeledClip& a, const LabeledClip& b) {
  if (a.gesture != b.gesture || a.subject_id != b.subject_id || a.substates != b.substates ||
      a.frames.size() != b.frames.size())
    return false;
  for (std::size_t i = 0; i < a.frames.size(); ++i) {
    if (!frames_equal(a.frames[i], b.frames[i])) return false;
  }
  return true;
}

double thumb_index_distance(const HandFrame& f) {
  return (f[Joint::ThumbTip].position - f[Joint::IndexTip].position).norm();
}

TEST(SynthClip, DeterministicGivenSeed) {
  const SubjectParams a = make_subject(0, 42);
  EXPECT_TRUE(clips_equal(synth_clip(GestureClass::Fist, a, 1), synth_clip(GestureClass::Fist, a, 1)));
  EXPECT_FALSE(clips_equal(synth_clip(GestureClass::Fist, a, 1), synth_clip(GestureClass::Fist, a, 2)));
}

TEST(SynthClip, ClipLengths) {
  const SubjectParams s = make_subject(3, 9);
  for (GestureClass g : kCommandGestures) {
    const LabeledClip c = synth_clip(g, s, 5);
    const std::size_t expected = g == GestureClass::Swipe ? 360u : 144u;
    EXPECT_EQ(c.frames.size(), expected) << to_string(g);
    EXPECT_EQ(c.substates.size(), c.frames.size());
    EXPECT_NEAR(c.duration, g == GestureClass::Swipe ? 5.0 : 2.0, 1e-12);
  }
  EXPECT_EQ(synth_null(s, 5).frames.size(), 144u);
}

TEST(SynthClip, RejectsNull) {
  try {
    synth_clip(GestureClass::Null, make_subject(0, 1), 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NullNotSupportedHere);
  }
}

TEST(SynthClip, OpenFingertipsFartherFromPalmThanFist) {
  const std::array<Joint, 5> tips = {Joint::ThumbTip, Joint::IndexTip, Joint::MiddleTip,
                                     Joint::RingTip, Joint::PinkyTip};
  for (int subject_id = 0; subject_id < 4; ++subject_id) {
    const SubjectParams s = make_subject(subject_id, 17);
    const Vec3 palm = Vec3(0.0, -0.01, 0.05) * s.finger_length_scale;
    const LabeledClip open = synth_clip(GestureClass::Open, s, 3);
    const LabeledClip fist = synth_clip(GestureClass::Fist, s, 4);
    for (Joint tip : tips) {
      double open_min = 1e9, fist_max = 0.0;
      for (std::size_t i = 72; i < 144; ++i) {  // hold phase
        open_min = std::min(open_min, (relative_to_wrist(open.frames[i], idx(tip)).position - palm).norm());
        fist_max = std::max(fist_max, (relative_to_wrist(fist.frames[i], idx(tip)).position - palm).norm());
      }
      EXPECT_GE(open_min - fist_max, 0.02) << "subject " << subject_id << " joint " << idx(tip);
    }
  }
}

TEST(SynthClip, SwipeSweepsOutAndBack) {
  for (int subject_id = 0; subject_id < 3; ++subject_id) {
    const LabeledClip c = synth_clip(GestureClass::Swipe, make_subject(subject_id, 5), 8);
    EXPECT_LT(thumb_progress(c.frames[20]), 0.2);
    EXPECT_GT(thumb_progress(c.frames[180]), 0.85);
    EXPECT_LT(thumb_progress(c.frames[359]), 0.2);
    EXPECT_EQ(c.substates[180], 3);
    EXPECT_EQ(c.substates[20], 0);
  }
}

TEST(SynthNull, DeterministicAndLabeled) {
  const SubjectParams s = make_subject(2, 3);
  const LabeledClip a = synth_null(s, 77);
  EXPECT_TRUE(clips_equal(a, synth_null(s, 77)));
  EXPECT_EQ(a.gesture, GestureClass::Null);
  EXPECT_TRUE(std::all_of(a.substates.begin(), a.substates.end(), [](SubState v) { return v == 4; }));
}

TEST(SynthNull, RestingThumbStaysAbovePinchThreshold) {
  for (int seed = 0; seed < 10; ++seed) {
    const LabeledClip c = synth_null(make_subject(seed, 1), seed, NullVariant::Rest);
    const auto above = std::count_if(c.frames.begin(), c.frames.end(), [](const HandFrame& f) {
      return thumb_index_distance(f) > kPinchThreshold;
    });
    EXPECT_GE(static_cast<double>(above), 0.9 * c.frames.size());
  }
}

TEST(SynthNull, IncidentalPinchIsBrief) {
  for (int seed = 0; seed < 20; ++seed) {
    const LabeledClip c = synth_null(make_subject(seed % 4, 1), seed, NullVariant::Pinch);
    int run = 0, longest = 0;
    for (const auto& f : c.frames) {
      run = thumb_index_distance(f) < kPinchThreshold ? run + 1 : 0;
      longest = std::max(longest, run);
    }
    EXPECT_GT(longest, 0) << "seed " << seed;
    EXPECT_LT(longest / kNativeRate, 0.14) << "seed " << seed;
  }
}

TEST(LabelSubstates, NonSwipeIsAllFour) {
  const SubjectParams s = make_subject(1, 1);
  for (GestureClass g : kCommandGestures) {
    if (g == GestureClass::Swipe) continue;
    const auto labels = label_substates(synth_clip(g, s, 2));
    EXPECT_TRUE(std::all_of(labels.begin(), labels.end(), [](SubState v) { return v == 4; }));
  }
}

TEST(LabelSubstates, BinEndpoints) {
  EXPECT_EQ(substate_from_progress(0.0), 0);
  EXPECT_EQ(substate_from_progress(0.2499), 0);
  EXPECT_EQ(substate_from_progress(0.25), 1);
  EXPECT_EQ(substate_from_progress(0.5), 2);
  EXPECT_EQ(substate_from_progress(0.75), 3);
  EXPECT_EQ(substate_from_progress(1.0), 3);
}

TEST(LabelSubstates, IdealSwipeIsMonotoneEachWay) {
  // Closed-form triangle trajectory, no noise.
  HandPose near = canonical_pose(GestureClass::Swipe);
  HandPose far = near;
  far.swipe_u = 1.0;
  MotionTrack track;
  track.add(0.0, near);
  track.add(180 / kNativeRate, far, true);
  track.add(359 / kNativeRate, near, true);
  FrameSynthesizer synth(make_subject(0, 0), 0, /*jitter=*/false);
  LabeledClip clip;
  clip.gesture = GestureClass::Swipe;
  clip.frames = synth.render(track, 360);
  const auto labels = label_substates(clip);
  for (int i = 1; i < 180; ++i) EXPECT_GE(labels[i], labels[i - 1]) << i;
  for (int i = 181; i < 360; ++i) EXPECT_LE(labels[i], labels[i - 1]) << i;
  EXPECT_EQ(labels.front(), 0);
  EXPECT_EQ(labels[180], 3);
}

TEST(MakeDataset, Counts) {
  EXPECT_EQ(make_dataset(1, 1, 1, 3).clips.size(), 8u);
  const Dataset ds = make_dataset(3, 2, 2, 3);
  EXPECT_EQ(ds.clips.size(), 3u * (7 * 2 + 2));
  std::map<std::pair<int, int>, int> histogram;
  for (const auto& c : ds.clips) histogram[{c.subject_id, class_index(c.gesture)}]++;
  EXPECT_EQ(histogram.size(), 3u * 8u);
  for (const auto& [key, count] : histogram) EXPECT_EQ(count, 2);
}

TEST(MakeDataset, DefaultSize) {
  const Dataset ds = make_dataset();
  EXPECT_EQ(ds.clips.size(), 1600u);
}

TEST(MakeDataset, RejectsZeroCounts) { EXPECT_THROW(make_dataset(0, 1, 1, 1), Error); }

}  // namespace
}  // namespace microgext
