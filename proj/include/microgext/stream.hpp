// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "microgext/fsm.hpp"
#include "microgext/model.hpp"
#include "microgext/skeleton.hpp"

#include <Eigen/Core>

#include <array>
#include <memory>
#include <optional>
#include <vector>

namespace microgext {

struct GestureEvent {
  GestureClass gesture = GestureClass::Null;
  double fired_at = 0.0;  // timestamp of the firing frame
  double mean_confidence = 0.0;
  // Nearest sub-state (round(3u)) of each frame spent confirming a Swipe,
  // kNoSwipeState where no position was available; empty otherwise.
  std::vector<SubState> swipe_substate_trace;

  friend bool operator==(const GestureEvent&, const GestureEvent&) = default;
};

/// Normalized position along the swipe from per-frame state probabilities
/// (one row, 5 entries): expectation over states 0-3 renormalized without
/// state 4, divided by 3. None when state 4 has more than half the mass.
std::optional<double> swipe_progress_from_probs(const Eigen::Ref<const Eigen::RowVectorXd>& probs);

/// swipe_progress_from_probs applied to the softmax of the latest frame's
/// state logits. The window is accepted for interface symmetry and not read.
std::optional<double> swipe_progress(const FeatureWindow& window, const Matrix& state_logits);

/// Per-hand online recognizer: keeps the last T frames, runs the model on
/// every frame once full, and advances the FSM.
class StreamRuntime {
 public:
  StreamRuntime(std::shared_ptr<const ModelParams> params, FsmConfig cfg = {});

  /// Throws OutOfOrderFrame for a timestamp not after the previous one and
  /// MixedHandedness for a non-right frame.
  std::optional<GestureEvent> push_frame(const HandFrame& frame);

  std::size_t buffered() const noexcept { return count_ < kWindowFrames ? count_ : kWindowFrames; }
  const FsmState& fsm_state() const noexcept { return fsm_; }
  /// Output of the most recent inference, if any.
  const std::optional<ModelOutput>& last_output() const noexcept { return last_; }
  /// Swipe position of the latest frame, when the latest output carries one.
  std::optional<double> last_swipe_progress() const;
  /// Wall time of the most recent push_frame call, in milliseconds.
  double last_latency_ms() const noexcept { return latency_ms_; }
  std::size_t frames_seen() const noexcept { return count_; }

 private:
  FeatureWindow window() const;

  std::shared_ptr<const ModelParams> params_;
  FsmConfig cfg_;
  FsmState fsm_;
  std::array<std::array<double, kJoints * kFeatureDim>, kWindowFrames> rows_{};
  std::size_t count_ = 0;
  std::optional<double> last_timestamp_;
  std::optional<ModelOutput> last_;
  std::vector<SubState> trace_;
  double latency_ms_ = 0.0;
};

}  // namespace microgext
