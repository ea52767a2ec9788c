// SPDX-License-Identifier: Apache-2.0
//
// Gesture-to-command layer: event binding, pinch-hold confirmation,
// left-hand granularity menu, and an editing session that drives a
// document from two hand streams.
#pragma once

#include "microgext/editor.hpp"
#include "microgext/stream.hpp"

#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace microgext {

struct EditorContext {
  bool selection_armed = false;  // toggled by pinch-hold
};

/// Net change between the first and last positioned entries of a swipe
/// trace; 0 when fewer than two entries carry a position.
int swipe_delta(std::span<const SubState> trace);

/// Scissor->Cut, Ring->Copy, Open->Undo, Fist->Delete, Vertical->SelectAll,
/// Pinky->Paste, Swipe->MoveCaret or SelectRange (when armed) by the
/// event's swipe_delta. Throws NullNotSupportedHere for Null.
EditCommand bind_event(const GestureEvent& event, const EditorContext& ctx);

inline constexpr double kPinchHoldSeconds = 2.0;

/// True when the trailing run of frames with thumb tip to index tip under
/// 1.5 cm lasts at least 2 s. The run spans its first to last timestamp plus
/// one mean frame interval, so 144 frames at 72 Hz count as 2.0 s.
bool detect_pinch_hold(std::span<const HandFrame> frames);

/// Incremental detect_pinch_hold: reports the single frame at which a
/// continuous contact first reaches the hold duration.
class PinchHoldTracker {
 public:
  bool push(const HandFrame& frame);
  bool in_contact() const noexcept { return !run_.empty(); }

 private:
  std::vector<double> run_;  // timestamps of the current contact
  bool reported_ = false;
};

// --- left-hand granularity menu -------------------------------------------

enum class MenuPhase { Idle, MenuOpen };

inline constexpr int kMenuPoseFrames = 6;  // consecutive frames to accept a pose

struct ModeSwitchState {
  MenuPhase phase = MenuPhase::Idle;
  std::optional<Granularity> highlighted;  // only while MenuOpen
  double roll_rad = 0.0;                   // relative to the wrist at menu open
  std::optional<Quat> reference;           // wrist orientation at menu open
  int pose_frames = 0;                     // debounce counter for the awaited pose
};

struct ModeSwitchStep {
  ModeSwitchState state;
  std::optional<EditCommand> command;  // SetGranularity on confirm
};

/// Four fingers curled (tip nearer the wrist than the joint below it) and
/// the thumb held away from the middle finger.
bool is_thumb_up(const HandFrame& frame);
/// Four fingers extended and index/pinky directions at least 44 degrees apart.
bool is_spread(const HandFrame& frame);

/// Twist of `now` relative to `reference` about the wrist's local z axis,
/// in (-pi, pi].
double wrist_roll(const Quat& reference, const Quat& now);

/// Four 45-degree sectors over [-90, 90] degrees (clamped outside).
Granularity sector_for_roll(double roll_rad) noexcept;

/// Idle: thumb-up held kMenuPoseFrames opens the menu. MenuOpen: roll picks
/// the highlighted mode; spread held kMenuPoseFrames emits SetGranularity
/// and returns to Idle. Throws MixedHandedness for right-hand frames.
ModeSwitchStep mode_switch_step(const ModeSwitchState& state, const HandFrame& left_frame);

// --- session ----------------------------------------------------------------

enum class SwipeMapping { Discrete, Continuous };

inline constexpr double kSwipeContactDistance = 0.02;  // meters

/// Distance from the thumb tip to the IndexTip-IndexBelowTip segment.
double thumb_index_gap(const HandFrame& frame);

struct SessionConfig {
  FsmConfig fsm;
  SwipeMapping swipe_mapping = SwipeMapping::Discrete;
  int continuous_units = 10;       // units per full swipe in continuous mode
  double swipe_hysteresis = 0.1;   // in units, around each level boundary
  int swipe_smoothing_frames = 5;  // in-contact progress values averaged before quantizing
  int swipe_debounce_frames = 4;   // frames a new level must persist before it is committed
  // Frames with the thumb farther than this from the index finger do not
  // move the swipe level.
  double swipe_contact_distance = kSwipeContactDistance;
};

enum class CommandSource { Gesture, SwipeTracking, PinchHold, ModeSwitch, Script };

struct CommandRecord {
  double timestamp = 0.0;
  EditCommand command;
  CommandSource source = CommandSource::Script;
  std::optional<ErrorCode> error;

  friend bool operator==(const CommandRecord&, const CommandRecord&) = default;
};

std::string_view to_string(CommandSource s) noexcept;

class EditSession {
 public:
  EditSession(std::shared_ptr<const ModelParams> params, Document doc, SessionConfig cfg = {});

  /// Right hand: recognition, swipe tracking and pinch-hold.
  std::optional<GestureEvent> push_right(const HandFrame& frame);
  /// Left hand: granularity menu.
  void push_left(const HandFrame& frame);
  /// Applies a command directly (scripted input); returns its error, if any.
  std::optional<ErrorCode> execute(double timestamp, const EditCommand& cmd,
                                   CommandSource source = CommandSource::Script);

  const Document& document() const noexcept { return doc_; }
  const EditorContext& context() const noexcept { return ctx_; }
  const std::vector<GestureEvent>& events() const noexcept { return events_; }
  const std::vector<CommandRecord>& commands() const noexcept { return log_; }
  const ModeSwitchState& menu() const noexcept { return menu_; }
  const StreamRuntime& runtime() const noexcept { return runtime_; }

 private:
  std::optional<int> swipe_level(double u, std::optional<int> current) const;

  StreamRuntime runtime_;
  SessionConfig cfg_;
  Document doc_;
  EditorContext ctx_;
  PinchHoldTracker pinch_;
  ModeSwitchState menu_;
  std::vector<GestureEvent> events_;
  std::vector<CommandRecord> log_;
  bool tracking_swipe_ = false;
  bool tracking_select_ = false;
  std::optional<int> level_;
  std::deque<double> recent_u_;
  std::optional<int> pending_level_;
  int pending_frames_ = 0;
};

}  // namespace microgext
