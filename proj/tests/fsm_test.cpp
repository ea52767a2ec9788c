// SPDX-License-Identifier: Apache-2.0
#include "fsm_oracle.hpp"
#include "microgext/error.hpp"
#include "microgext/stream.hpp"
#include "microgext/synth.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>

namespace microgext {
namespace {

using testing::make_input;

std::optional<FsmFire> feed(FsmState& s, const testing::ScriptInput& in, const FsmConfig& cfg = {}) {
  const FsmStepResult r = fsm_step(s, in.probs, cfg);
  s = r.state;
  return r.fired;
}

TEST(Fsm, TenConfidentFramesFireOnTheTenth) {
  FsmState s;
  const auto fist = make_input(GestureClass::Fist, 0.97);
  for (int i = 1; i <= 9; ++i) {
    EXPECT_FALSE(feed(s, fist)) << i;
    EXPECT_EQ(s.phase, FsmPhase::S2);
    EXPECT_EQ(s.consecutive_count, i);
  }
  const auto fired = feed(s, fist);
  ASSERT_TRUE(fired);
  EXPECT_EQ(fired->gesture, GestureClass::Fist);
  EXPECT_NEAR(fired->mean_confidence, 0.97, 1e-12);
  EXPECT_EQ(s.phase, FsmPhase::S1);
  EXPECT_EQ(s.consecutive_count, 0);
}

TEST(Fsm, NineThenWeakFrameDoesNotFire) {
  FsmState s;
  for (int i = 0; i < 9; ++i) feed(s, make_input(GestureClass::Fist, 0.97));
  EXPECT_FALSE(feed(s, make_input(GestureClass::Fist, 0.5)));
  EXPECT_EQ(s.phase, FsmPhase::S1);
  EXPECT_EQ(s.consecutive_count, 0);
}

TEST(Fsm, CompetingClassRestartsCount) {
  FsmState s;
  for (int i = 0; i < 5; ++i) feed(s, make_input(GestureClass::Fist, 0.99));
  feed(s, make_input(GestureClass::Ring, 0.96));
  EXPECT_EQ(s.phase, FsmPhase::S2);
  EXPECT_EQ(s.candidate, GestureClass::Ring);
  EXPECT_EQ(s.consecutive_count, 1);
  for (int i = 0; i < 8; ++i) EXPECT_FALSE(feed(s, make_input(GestureClass::Ring, 0.96)));
  const auto fired = feed(s, make_input(GestureClass::Ring, 0.96));
  ASSERT_TRUE(fired);
  EXPECT_EQ(fired->gesture, GestureClass::Ring);
}

TEST(Fsm, ConfidentNullNeverBecomesCandidate) {
  FsmState s;
  for (int i = 0; i < 50; ++i) {
    EXPECT_FALSE(feed(s, make_input(GestureClass::Null, 0.999)));
    EXPECT_EQ(s.phase, FsmPhase::S1);
  }
}

TEST(Fsm, LowConfidenceStreamNeverFires) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.125, 0.949);
  FsmState s;
  for (int i = 0; i < 5000; ++i) {
    EXPECT_FALSE(feed(s, make_input(static_cast<GestureClass>(i % 7), u(rng))));
  }
}

TEST(Fsm, RefractoryAndRearmSuppressRepeatFires) {
  FsmState s;
  const auto fist = make_input(GestureClass::Fist, 0.99);
  int fires = 0;
  for (int i = 0; i < 200; ++i) fires += feed(s, fist) ? 1 : 0;
  EXPECT_EQ(fires, 1);
  // A short dip inside the hold does not re-arm.
  for (int i = 0; i < 9; ++i) feed(s, make_input(GestureClass::Fist, 0.3));
  for (int i = 0; i < 10; ++i) fires += feed(s, fist) ? 1 : 0;
  EXPECT_EQ(fires, 1);
  for (int i = 0; i < 10; ++i) feed(s, make_input(GestureClass::Fist, 0.3));
  for (int i = 0; i < 10; ++i) fires += feed(s, fist) ? 1 : 0;
  EXPECT_EQ(fires, 2);
}

TEST(Fsm, SingleFrameRearm) {
  FsmConfig cfg;
  cfg.rearm_frames = 1;
  FsmState s;
  const auto fist = make_input(GestureClass::Fist, 0.99);
  int fires = 0;
  for (int i = 0; i < 200; ++i) fires += feed(s, fist, cfg) ? 1 : 0;
  feed(s, make_input(GestureClass::Fist, 0.3), cfg);
  for (int i = 0; i < 10; ++i) fires += feed(s, fist, cfg) ? 1 : 0;
  EXPECT_EQ(fires, 2);
}

TEST(Fsm, OtherClassesFireWhileOneAwaitsRelease) {
  FsmState s;
  for (int i = 0; i < 10; ++i) feed(s, make_input(GestureClass::Fist, 0.99));
  ASSERT_EQ(s.awaiting_release, GestureClass::Fist);
  int fires = 0;
  for (int i = 0; i < 30; ++i) fires += feed(s, make_input(GestureClass::Ring, 0.99)) ? 1 : 0;
  EXPECT_EQ(fires, 1);
}

TEST(Fsm, WithoutRearmAHoldRefiresAfterRefractory) {
  FsmConfig cfg;
  cfg.rearm_on_release = false;
  FsmState s;
  std::vector<int> at;
  for (int i = 1; i <= 60; ++i) {
    if (feed(s, make_input(GestureClass::Fist, 0.99), cfg)) at.push_back(i);
  }
  EXPECT_EQ(at, (std::vector<int>{10, 40}));
}

TEST(Fsm, PureFunction) {
  FsmState s;
  s.phase = FsmPhase::S2;
  s.candidate = GestureClass::Open;
  s.consecutive_count = 4;
  s.confidence_sum = 3.9;
  const auto in = make_input(GestureClass::Open, 0.99);
  const FsmStepResult a = fsm_step(s, in.probs, {});
  const FsmStepResult b = fsm_step(s, in.probs, {});
  EXPECT_EQ(a.state, b.state);
  EXPECT_EQ(a.fired.has_value(), b.fired.has_value());
}

TEST(Fsm, MalformedProbabilitiesRejected) {
  FsmState s;
  std::array<double, kNumClasses> p{};
  p.fill(0.2);
  EXPECT_THROW(fsm_step(s, p, {}), Error);
  p.fill(0.125);
  p[0] = std::nan("");
  try {
    fsm_step(s, p, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedProbs);
  }
}

struct NamedConfig {
  const char* name;
  FsmConfig cfg;
};

std::vector<NamedConfig> oracle_configs() {
  FsmConfig short_rearm{0.95, 3, 2, true};
  FsmConfig short_plain{0.95, 3, 0, false};
  FsmConfig single{0.95, 1, 1, true};
  FsmConfig instant_rearm{0.95, 3, 2, true, 1};
  FsmConfig slow_rearm{0.95, 2, 0, true, 3};
  return {{"default", FsmConfig{}},        {"N3_refractory2_rearm", short_rearm},
          {"N3_no_refractory", short_plain}, {"N1", single},
          {"N3_instant_rearm", instant_rearm}, {"N2_rearm3", slow_rearm}};
}

TEST(FsmOracle, ExhaustiveScriptsUpToLength12) {
  for (const auto& [name, cfg] : oracle_configs()) {
    const auto st = testing::explore_fsm(cfg, testing::grid_inputs(), 12);
    EXPECT_EQ(st.discrepancies, 0u) << name << ": " << st.first_problem;
    EXPECT_EQ(st.invariant_violations, 0u) << name << ": " << st.first_problem;
    EXPECT_GT(st.fires, 0u) << name;
  }
}

TEST(FsmOracle, ExplicitEnumerationOfShortScripts) {
  const auto inputs = testing::grid_inputs(true);
  const FsmConfig cfg{0.95, 2, 1, true};
  std::vector<int> script(5, 0);
  std::uint64_t mismatches = 0, scripts = 0;
  std::function<void(int)> rec = [&](int pos) {
    if (pos == static_cast<int>(script.size())) {
      ++scripts;
      FsmState s;
      testing::SimState ref;
      for (int i : script) {
        const FsmStepResult r = fsm_step(s, inputs[i].probs, cfg);
        s = r.state;
        const int want = testing::sim_step(ref, inputs[i], cfg);
        if ((r.fired ? class_index(r.fired->gesture) : -1) != want) ++mismatches;
      }
      return;
    }
    for (int i = 0; i < static_cast<int>(inputs.size()); ++i) {
      script[pos] = i;
      rec(pos + 1);
    }
  };
  rec(0);
  EXPECT_EQ(scripts, 161051u);
  EXPECT_EQ(mismatches, 0u);
}

TEST(SwipeProgress, ExpectationOverSwipeStates) {
  Eigen::RowVectorXd p(5);
  p << 1, 0, 0, 0, 0;
  EXPECT_DOUBLE_EQ(*swipe_progress_from_probs(p), 0.0);
  p << 0, 0, 0, 1, 0;
  EXPECT_DOUBLE_EQ(*swipe_progress_from_probs(p), 1.0);
  p << 0.5, 0.5, 0, 0, 0;
  EXPECT_DOUBLE_EQ(*swipe_progress_from_probs(p), 1.0 / 6.0);
  p << 0.1, 0.1, 0.1, 0.1, 0.6;
  EXPECT_FALSE(swipe_progress_from_probs(p));
}

TEST(SwipeProgress, UsesLatestFrameOfLogits) {
  Matrix logits = Matrix::Constant(kWindowFrames, kNumStates, -30.0);
  logits.col(0).setConstant(30.0);
  logits(kWindowFrames - 1, 0) = -30.0;
  logits(kWindowFrames - 1, 3) = 30.0;
  EXPECT_NEAR(*swipe_progress(FeatureWindow{}, logits), 1.0, 1e-12);
}

TEST(Stream, WarmUpRunsNoInferenceAndBufferIsBounded) {
  auto params = std::make_shared<const ModelParams>(ModelParams::init(8, 2));
  StreamRuntime rt(params);
  const LabeledClip clip = synth_clip(GestureClass::Fist, make_subject(0, 1), 4);
  for (int i = 0; i < 19; ++i) {
    EXPECT_FALSE(rt.push_frame(clip.frames[i]));
    EXPECT_FALSE(rt.last_output());
  }
  rt.push_frame(clip.frames[19]);
  EXPECT_TRUE(rt.last_output());
  for (int i = 20; i < 60; ++i) {
    rt.push_frame(clip.frames[i]);
    EXPECT_LE(rt.buffered(), static_cast<std::size_t>(kWindowFrames));
  }
}

TEST(Stream, StreamingMatchesOfflineWindow) {
  auto params = std::make_shared<const ModelParams>(ModelParams::init(16, 5));
  StreamRuntime rt(params);
  const LabeledClip clip = synth_clip(GestureClass::Ring, make_subject(1, 1), 9);
  for (int i = 0; i < 47; ++i) rt.push_frame(clip.frames[i]);
  const ModelOutput offline =
      forward(*params, extract_features(std::span(clip.frames).subspan(27, kWindowFrames)));
  for (int k = 0; k < kNumClasses; ++k) {
    EXPECT_DOUBLE_EQ(rt.last_output()->class_logits[k], offline.class_logits[k]);
  }
}

TEST(Stream, OutOfOrderAndLeftFramesRejected) {
  auto params = std::make_shared<const ModelParams>(ModelParams::init(8, 2));
  StreamRuntime rt(params);
  const LabeledClip clip = synth_clip(GestureClass::Fist, make_subject(0, 1), 4);
  rt.push_frame(clip.frames[5]);
  try {
    rt.push_frame(clip.frames[5]);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OutOfOrderFrame);
  }
  HandFrame left = clip.frames[6];
  left.handedness = Handedness::Left;
  EXPECT_THROW(rt.push_frame(left), Error);
}

TEST(Stream, ReplayGivesIdenticalEvents) {
  // Large logits on a fixed class make every window fire-capable.
  ModelParams p = ModelParams::init(8, 3);
  p.b_cls.setConstant(-20.0);
  p.b_cls(0, class_index(GestureClass::Open)) = 20.0;
  auto params = std::make_shared<const ModelParams>(p);
  const LabeledClip clip = synth_clip(GestureClass::Open, make_subject(2, 1), 4);
  std::vector<GestureEvent> runs[2];
  for (auto& events : runs) {
    StreamRuntime rt(params);
    for (const auto& f : clip.frames) {
      if (auto e = rt.push_frame(f)) events.push_back(*e);
    }
  }
  ASSERT_EQ(runs[0].size(), 1u);
  EXPECT_EQ(runs[0], runs[1]);
  EXPECT_EQ(runs[0][0].fired_at, clip.frames[kWindowFrames + 8].timestamp);
}

}  // namespace
}  // namespace microgext
