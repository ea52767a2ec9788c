// SPDX-License-Identifier: Apache-2.0
//
// Scripted editing sessions: a JSON description of gestures over a text,
// compiled into synthetic right- and left-hand frame streams and replayed
// through an EditSession.
#pragma once

#include "microgext/editor.hpp"
#include "microgext/session.hpp"
#include "microgext/synth.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace microgext {

enum class StepKind { Gesture, Swipe, PinchHold, ModeSwitch };

struct ScenarioStep {
  StepKind kind = StepKind::Gesture;
  GestureClass gesture = GestureClass::Fist;  // Gesture steps
  double hold = 1.0;                          // seconds in the pose (Gesture, PinchHold)
  double from = 0.0, to = 1.0;                // Swipe positions
  double sweep = 1.5;                         // Swipe travel time, seconds
  double roll_deg = 0.0;                      // ModeSwitch wrist roll
  std::optional<double> start;                // absolute start time; default follows the previous rest
};

struct Scenario {
  int version = 1;
  std::uint64_t seed = 1;
  int subject_id = 0;
  std::string text;
  Granularity granularity = Granularity::Character;
  double rest_seconds = 1.0;  // before the first step and after each step
  std::vector<ScenarioStep> steps;

  /// Number of FSM events the script is meant to produce (gesture and
  /// swipe steps).
  int expected_events() const;
};

/// Throws InvalidArgument (with the offending key) or VersionMismatch.
Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const Scenario& s);
Scenario load_scenario(const std::filesystem::path& path);

struct Interval {
  double begin = 0.0, end = 0.0;
  bool contains(double t) const noexcept { return t >= begin && t < end; }
};

struct ScenarioStreams {
  std::vector<HandFrame> right;
  std::vector<HandFrame> left;  // same timestamps as `right`
  std::vector<Interval> rest;   // both hands idle
  std::vector<Interval> steps;  // one per scenario step
};

/// Throws InvalidArgument if a step's start time falls before the end of
/// the preceding rest.
ScenarioStreams compile_scenario(const Scenario& s);

struct ReplayResult {
  Document document;
  std::vector<GestureEvent> events;
  std::vector<CommandRecord> commands;
  std::size_t events_in_rest = 0;
  std::vector<double> latencies_ms;  // per right-hand frame
};

/// Feeds both streams frame by frame (left before right at equal times).
ReplayResult replay_scenario(const Scenario& s, const ScenarioStreams& streams,
                             std::shared_ptr<const ModelParams> params, const SessionConfig& cfg = {});

}  // namespace microgext
