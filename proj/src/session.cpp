// SPDX-License-Identifier: Apache-2.0
#include "microgext/session.hpp"

#include "microgext/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace microgext {

namespace {

constexpr std::array<Joint, 4> kTips = {Joint::IndexTip, Joint::MiddleTip, Joint::RingTip,
                                        Joint::PinkyTip};

Vec3 rel(const HandFrame& f, Joint j) { return relative_to_wrist(f, idx(j)).position; }

double pinch_distance(const HandFrame& f) {
  return (f[Joint::ThumbTip].position - f[Joint::IndexTip].position).norm();
}

// Tip distance from the wrist over the distance of the joint below it.
double extension_ratio(const HandFrame& f, Joint tip) {
  const Joint below = static_cast<Joint>(idx(tip) + 1);
  return rel(f, tip).norm() / std::max(1e-9, rel(f, below).norm());
}

}  // namespace

int swipe_delta(std::span<const SubState> trace) {
  std::optional<int> first, last;
  for (SubState s : trace) {
    if (s == kNoSwipeState) continue;
    if (!first) first = s;
    last = s;
  }
  return first ? *last - *first : 0;
}

EditCommand bind_event(const GestureEvent& event, const EditorContext& ctx) {
  switch (event.gesture) {
    case GestureClass::Scissor:
      return EditCommand::of(CommandKind::Cut);
    case GestureClass::Ring:
      return EditCommand::of(CommandKind::Copy);
    case GestureClass::Open:
      return EditCommand::of(CommandKind::Undo);
    case GestureClass::Fist:
      return EditCommand::of(CommandKind::Delete);
    case GestureClass::Vertical:
      return EditCommand::of(CommandKind::SelectAll);
    case GestureClass::Pinky:
      return EditCommand::of(CommandKind::Paste);
    case GestureClass::Swipe: {
      const int d = swipe_delta(event.swipe_substate_trace);
      return ctx.selection_armed ? EditCommand::select_range(d) : EditCommand::move_caret(d);
    }
    case GestureClass::Null:
      break;
  }
  throw Error(ErrorCode::NullNotSupportedHere, "Null events carry no command");
}

bool detect_pinch_hold(std::span<const HandFrame> frames) {
  std::size_t first = frames.size();
  while (first > 0 && pinch_distance(frames[first - 1]) < kPinchThreshold) --first;
  const std::size_t n = frames.size() - first;
  if (n < 2) return false;
  const double span = frames.back().timestamp - frames[first].timestamp;
  const double duration = span + span / static_cast<double>(n - 1);
  return duration >= kPinchHoldSeconds - 1e-9;
}

bool PinchHoldTracker::push(const HandFrame& frame) {
  if (pinch_distance(frame) >= kPinchThreshold) {
    run_.clear();
    reported_ = false;
    return false;
  }
  run_.push_back(frame.timestamp);
  if (reported_ || run_.size() < 2) return false;
  const double span = run_.back() - run_.front();
  const double duration = span + span / static_cast<double>(run_.size() - 1);
  if (duration >= kPinchHoldSeconds - 1e-9) {
    reported_ = true;
    return true;
  }
  return false;
}

bool is_thumb_up(const HandFrame& f) {
  for (Joint t : kTips) {
    if (extension_ratio(f, t) > 0.95) return false;
  }
  const double palm = rel(f, Joint::MiddleBelowTip).norm();
  return (rel(f, Joint::ThumbTip) - rel(f, Joint::MiddleBelowTip)).norm() > 0.7 * palm;
}

bool is_spread(const HandFrame& f) {
  for (Joint t : kTips) {
    if (extension_ratio(f, t) < 1.04) return false;
  }
  const Vec3 a = rel(f, Joint::IndexTip) - rel(f, Joint::IndexBelowTip);
  const Vec3 b = rel(f, Joint::PinkyTip) - rel(f, Joint::PinkyBelowTip);
  const double cosang = a.normalized().dot(b.normalized());
  return cosang <= std::cos(44.0 * std::numbers::pi / 180.0);
}

double wrist_roll(const Quat& reference, const Quat& now) {
  // Swing-twist decomposition about local z.
  const Quat d = reference.conjugate() * now;
  double roll = 2.0 * std::atan2(d.z(), d.w());
  if (roll > std::numbers::pi) roll -= 2.0 * std::numbers::pi;
  if (roll <= -std::numbers::pi) roll += 2.0 * std::numbers::pi;
  return roll;
}

Granularity sector_for_roll(double roll_rad) noexcept {
  const double deg = roll_rad * 180.0 / std::numbers::pi;
  if (deg < -45.0) return Granularity::Character;
  if (deg < 0.0) return Granularity::Word;
  if (deg < 45.0) return Granularity::Sentence;
  return Granularity::Paragraph;
}

ModeSwitchStep mode_switch_step(const ModeSwitchState& state, const HandFrame& left) {
  if (left.handedness != Handedness::Left) {
    throw Error(ErrorCode::MixedHandedness, "mode switching reads the left hand");
  }
  ModeSwitchStep r{state, std::nullopt};
  ModeSwitchState& s = r.state;
  const Quat wrist = left[Joint::Wrist].orientation;
  if (s.phase == MenuPhase::Idle) {
    s.pose_frames = is_thumb_up(left) ? s.pose_frames + 1 : 0;
    if (s.pose_frames >= kMenuPoseFrames) {
      s.phase = MenuPhase::MenuOpen;
      s.reference = wrist;
      s.roll_rad = 0.0;
      s.highlighted = sector_for_roll(0.0);
      s.pose_frames = 0;
    }
    return r;
  }
  s.roll_rad = wrist_roll(*s.reference, wrist);
  s.pose_frames = is_spread(left) ? s.pose_frames + 1 : 0;
  // The highlight freezes once the hand starts opening.
  if (s.pose_frames == 0) s.highlighted = sector_for_roll(s.roll_rad);
  if (s.pose_frames >= kMenuPoseFrames) {
    r.command = EditCommand::set_granularity(*s.highlighted);
    s = ModeSwitchState{};
  }
  return r;
}

std::string_view to_string(CommandSource s) noexcept {
  switch (s) {
    case CommandSource::Gesture:
      return "gesture";
    case CommandSource::SwipeTracking:
      return "swipe";
    case CommandSource::PinchHold:
      return "pinch-hold";
    case CommandSource::ModeSwitch:
      return "mode-switch";
    case CommandSource::Script:
      return "script";
  }
  return "?";
}

EditSession::EditSession(std::shared_ptr<const ModelParams> params, Document doc, SessionConfig cfg)
    : runtime_(std::move(params), cfg.fsm), cfg_(cfg), doc_(std::move(doc)) {}

std::optional<ErrorCode> EditSession::execute(double timestamp, const EditCommand& cmd,
                                              CommandSource source) {
  ApplyResult r = try_apply(doc_, cmd);
  doc_ = std::move(r.doc);
  log_.push_back({timestamp, cmd, source, r.error});
  if (r.error) warn(std::string(to_string(*r.error)) + ": " + to_string(cmd));
  return r.error;
}

double thumb_index_gap(const HandFrame& f) {
  const Vec3 a = f[Joint::IndexTip].position;
  const Vec3 d = f[Joint::IndexBelowTip].position - a;
  const Vec3 p = f[Joint::ThumbTip].position;
  const double len2 = d.squaredNorm();
  const double u = len2 > 0.0 ? std::clamp((p - a).dot(d) / len2, 0.0, 1.0) : 0.0;
  return (a + u * d - p).norm();
}

std::optional<int> EditSession::swipe_level(double u, std::optional<int> current) const {
  const int units = cfg_.swipe_mapping == SwipeMapping::Discrete ? 3 : cfg_.continuous_units;
  const double x = u * units;
  if (!current) return static_cast<int>(std::lround(x));
  int level = *current;
  while (x > level + 0.5 + cfg_.swipe_hysteresis) ++level;
  while (x < level - 0.5 - cfg_.swipe_hysteresis) --level;
  return level;
}

std::optional<GestureEvent> EditSession::push_right(const HandFrame& frame) {
  const std::optional<GestureEvent> event = runtime_.push_frame(frame);
  const double t = frame.timestamp;

  if (tracking_swipe_ && !event) {
    const auto& out = runtime_.last_output();
    const auto& p = out->class_probs;
    const int top = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
    if (top != class_index(GestureClass::Swipe) || p[top] < cfg_.fsm.delta) {
      tracking_swipe_ = false;
    } else if (const auto u = runtime_.last_swipe_progress();
               u && thumb_index_gap(frame) <= cfg_.swipe_contact_distance) {
      recent_u_.push_back(*u);
      if (static_cast<int>(recent_u_.size()) > cfg_.swipe_smoothing_frames) recent_u_.pop_front();
      double mean_u = 0.0;
      for (double x : recent_u_) mean_u += x;
      mean_u /= static_cast<double>(recent_u_.size());
      const auto next = swipe_level(mean_u, level_);
      if (!level_) {
        level_ = next;
      } else if (*next == *level_) {
        pending_level_.reset();
      } else {
        pending_frames_ = pending_level_ == next ? pending_frames_ + 1 : 1;
        pending_level_ = next;
        if (pending_frames_ >= cfg_.swipe_debounce_frames) {
          const int d = *next - *level_;
          execute(t, tracking_select_ ? EditCommand::select_range(d) : EditCommand::move_caret(d),
                  CommandSource::SwipeTracking);
          level_ = next;
          pending_level_.reset();
        }
      }
    } else {
      pending_level_.reset();
    }
  }

  if (event) {
    events_.push_back(*event);
    if (event->gesture == GestureClass::Swipe) {
      tracking_swipe_ = true;
      tracking_select_ = ctx_.selection_armed;
      level_.reset();
      pending_level_.reset();
      recent_u_.clear();
      int d = 0;
      if (cfg_.swipe_mapping == SwipeMapping::Discrete) {
        d = swipe_delta(event->swipe_substate_trace);
        for (auto it = event->swipe_substate_trace.rbegin(); it != event->swipe_substate_trace.rend(); ++it) {
          if (*it != kNoSwipeState) {
            level_ = *it;
            break;
          }
        }
      } else if (const auto u = runtime_.last_swipe_progress()) {
        level_ = swipe_level(*u, std::nullopt);
      }
      execute(t, tracking_select_ ? EditCommand::select_range(d) : EditCommand::move_caret(d),
              CommandSource::Gesture);
    } else {
      tracking_swipe_ = false;
      execute(t, bind_event(*event, ctx_), CommandSource::Gesture);
    }
  }

  if (pinch_.push(frame)) {
    if (ctx_.selection_armed) {
      ctx_.selection_armed = false;
      execute(t, EditCommand::of(CommandKind::ConfirmCaret), CommandSource::PinchHold);
    } else {
      ctx_.selection_armed = true;
    }
  }
  return event;
}

void EditSession::push_left(const HandFrame& frame) {
  ModeSwitchStep step = mode_switch_step(menu_, frame);
  menu_ = step.state;
  if (step.command) execute(frame.timestamp, *step.command, CommandSource::ModeSwitch);
}

}  // namespace microgext
