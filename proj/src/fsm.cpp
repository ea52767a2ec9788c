// SPDX-License-Identifier: Apache-2.0
#include "microgext/fsm.hpp"

#include "microgext/error.hpp"

#include <algorithm>
#include <cmath>

namespace microgext {

void FsmConfig::validate() const {
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorCode::InvalidArgument, "delta must be in (0, 1)");
  if (n_consecutive < 1) throw Error(ErrorCode::InvalidArgument, "N must be at least 1");
  if (refractory < 0) throw Error(ErrorCode::InvalidArgument, "refractory must be non-negative");
  if (rearm_frames < 1) throw Error(ErrorCode::InvalidArgument, "rearm_frames must be at least 1");
}

FsmStepResult fsm_step(const FsmState& state, std::span<const double, kNumClasses> probs,
                       const FsmConfig& cfg) {
  double sum = 0.0;
  int k = 0;
  for (int i = 0; i < kNumClasses; ++i) {
    const double p = probs[i];
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      throw Error(ErrorCode::MalformedProbs, "probability out of range");
    }
    sum += p;
    if (p > probs[k]) k = i;
  }
  if (std::abs(sum - 1.0) > 1e-5) throw Error(ErrorCode::MalformedProbs, "probabilities do not sum to 1");

  const GestureClass top = static_cast<GestureClass>(k);
  const double p = probs[k];
  const bool confident = p >= cfg.delta;

  FsmStepResult r;
  FsmState& s = r.state;
  s = state;
  if (s.awaiting_release) {
    if (confident && top == *s.awaiting_release) {
      s.release_count = 0;
    } else if (++s.release_count >= cfg.rearm_frames) {
      s.awaiting_release.reset();
      s.release_count = 0;
    }
  }

  const auto reset = [&s] {
    s.phase = FsmPhase::S1;
    s.candidate.reset();
    s.consecutive_count = 0;
    s.confidence_sum = 0.0;
  };

  if (s.refractory_remaining > 0) {
    --s.refractory_remaining;
    reset();
    return r;
  }

  const bool eligible = confident && top != GestureClass::Null && s.awaiting_release != top;
  if (!eligible) {
    reset();
    return r;
  }
  if (s.phase == FsmPhase::S2 && s.candidate == top) {
    ++s.consecutive_count;
    s.confidence_sum += p;
  } else {
    s.phase = FsmPhase::S2;
    s.candidate = top;
    s.consecutive_count = 1;
    s.confidence_sum = p;
  }
  if (s.consecutive_count >= cfg.n_consecutive) {
    // Every summand is >= delta; the clamp only absorbs rounding in the sum.
    r.fired = FsmFire{top, std::max(cfg.delta, s.confidence_sum / s.consecutive_count)};
    reset();
    s.refractory_remaining = cfg.refractory;
    if (cfg.rearm_on_release) s.awaiting_release = top;
    s.release_count = 0;
  }
  return r;
}

}  // namespace microgext
