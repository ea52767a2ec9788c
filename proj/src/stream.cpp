// SPDX-License-Identifier: Apache-2.0
#include "microgext/stream.hpp"

#include "microgext/error.hpp"

#include <chrono>
#include <cmath>

namespace microgext {

std::optional<double> swipe_progress_from_probs(const Eigen::Ref<const Eigen::RowVectorXd>& probs) {
  if (probs.size() != kNumStates) throw Error(ErrorCode::ShapeMismatch, "expected 5 state probabilities");
  if (probs(kNoSwipeState) > 0.5) return std::nullopt;
  double mass = 0.0, expect = 0.0;
  for (int s = 0; s < kNoSwipeState; ++s) {
    mass += probs(s);
    expect += s * probs(s);
  }
  if (mass <= 0.0) return std::nullopt;
  return expect / mass / 3.0;
}

std::optional<double> swipe_progress(const FeatureWindow&, const Matrix& state_logits) {
  if (state_logits.rows() < 1 || state_logits.cols() != kNumStates) {
    throw Error(ErrorCode::ShapeMismatch, "state logits must be T x 5");
  }
  const Matrix last = state_logits.bottomRows(1);
  const Matrix probs = softmax_rows(last);
  return swipe_progress_from_probs(probs.row(0));
}

StreamRuntime::StreamRuntime(std::shared_ptr<const ModelParams> params, FsmConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  if (!params_) throw Error(ErrorCode::InvalidArgument, "runtime needs model parameters");
  cfg_.validate();
}

FeatureWindow StreamRuntime::window() const {
  FeatureWindow w;
  constexpr int kRow = kJoints * kFeatureDim;
  for (int t = 0; t < kWindowFrames; ++t) {
    // Oldest frame first; the slot after the newest is the oldest.
    const auto& row = rows_[(count_ + static_cast<std::size_t>(t)) % kWindowFrames];
    std::copy(row.begin(), row.end(), w.data().begin() + t * kRow);
  }
  return w;
}

std::optional<double> StreamRuntime::last_swipe_progress() const {
  if (!last_) return std::nullopt;
  return swipe_progress(FeatureWindow{}, last_->state_logits);
}

std::optional<GestureEvent> StreamRuntime::push_frame(const HandFrame& frame) {
  const auto t0 = std::chrono::steady_clock::now();
  if (frame.handedness != Handedness::Right) {
    throw Error(ErrorCode::MixedHandedness, "runtime accepts right-hand frames only");
  }
  if (last_timestamp_ && !(frame.timestamp > *last_timestamp_)) {
    throw Error(ErrorCode::OutOfOrderFrame, "frame at t=" + std::to_string(frame.timestamp) +
                                                " does not follow t=" +
                                                std::to_string(*last_timestamp_));
  }
  last_timestamp_ = frame.timestamp;
  frame_features(frame, rows_[count_ % kWindowFrames]);
  ++count_;

  std::optional<GestureEvent> event;
  if (count_ >= static_cast<std::size_t>(kWindowFrames)) {
    last_ = forward(*params_, window());
    const FsmState before = fsm_;
    const FsmStepResult r = fsm_step(fsm_, last_->class_probs, cfg_);
    fsm_ = r.state;

    const bool swipe_run = fsm_.candidate == GestureClass::Swipe ||
                           (r.fired && r.fired->gesture == GestureClass::Swipe);
    const bool continuing = before.candidate == GestureClass::Swipe &&
                            before.phase == FsmPhase::S2;
    if (swipe_run) {
      if (!continuing) trace_.clear();
      const auto u = last_swipe_progress();
      trace_.push_back(u ? static_cast<SubState>(std::lround(3.0 * *u)) : kNoSwipeState);
    } else {
      trace_.clear();
    }
    if (r.fired) {
      event = GestureEvent{r.fired->gesture, frame.timestamp, r.fired->mean_confidence, {}};
      if (r.fired->gesture == GestureClass::Swipe) event->swipe_substate_trace = trace_;
      trace_.clear();
    }
  }
  latency_ms_ = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return event;
}

}  // namespace microgext
