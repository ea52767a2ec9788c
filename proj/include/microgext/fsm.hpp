// SPDX-License-Identifier: Apache-2.0
//
// Confidence-gated three-phase filter: a class must be the >= delta argmax
// for N consecutive frames before it fires. S3 is transient and never
// stored; a firing step returns to S1.
#pragma once

#include "microgext/gesture.hpp"

#include <array>
#include <optional>
#include <span>

namespace microgext {

struct FsmConfig {
  double delta = 0.95;
  int n_consecutive = 10;
  int refractory = 20;  // frames ignored after a fire
  // After a fire, the fired class stays ineligible until it stops being the
  // >= delta argmax, so one long hold fires once.
  bool rearm_on_release = true;
  // Consecutive frames the fired class must be absent before it re-arms;
  // absorbs short confidence dips inside one gesture. 1 re-arms at once.
  int rearm_frames = 10;

  void validate() const;
};

enum class FsmPhase { S1, S2 };

struct FsmState {
  FsmPhase phase = FsmPhase::S1;
  std::optional<GestureClass> candidate;
  int consecutive_count = 0;
  int refractory_remaining = 0;
  std::optional<GestureClass> awaiting_release;
  int release_count = 0;  // frames the awaited class has been absent
  double confidence_sum = 0.0;  // over the current run

  friend bool operator==(const FsmState&, const FsmState&) = default;
};

struct FsmFire {
  GestureClass gesture = GestureClass::Null;
  double mean_confidence = 0.0;
};

struct FsmStepResult {
  FsmState state;
  std::optional<FsmFire> fired;
};

/// Pure transition. Throws MalformedProbs unless `probs` holds finite
/// values in [0, 1] summing to 1 within 1e-5. Argmax ties go to the lower
/// class index.
FsmStepResult fsm_step(const FsmState& state, std::span<const double, kNumClasses> probs,
                       const FsmConfig& cfg);

}  // namespace microgext
