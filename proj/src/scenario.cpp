// SPDX-License-Identifier: Apache-2.0
#include "microgext/scenario.hpp"

#include "microgext/error.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

namespace microgext {

namespace {

constexpr double kTransition = 0.3;

double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

std::string_view kind_name(StepKind k) {
  switch (k) {
    case StepKind::Gesture:
      return "gesture";
    case StepKind::Swipe:
      return "swipe";
    case StepKind::PinchHold:
      return "pinch_hold";
    case StepKind::ModeSwitch:
      return "mode_switch";
  }
  return "?";
}

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::InvalidArgument, std::string("scenario key '") + key + "' has the wrong type");
  }
}

}  // namespace

int Scenario::expected_events() const {
  int n = 0;
  for (const auto& st : steps) n += (st.kind == StepKind::Gesture || st.kind == StepKind::Swipe) ? 1 : 0;
  return n;
}

Scenario scenario_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "scenario must be a JSON object");
  Scenario s;
  s.version = get_or(j, "version", 1);
  if (s.version != 1) {
    throw Error(ErrorCode::VersionMismatch, "scenario version " + std::to_string(s.version) + " (expected 1)");
  }
  s.seed = get_or<std::uint64_t>(j, "seed", 1);
  s.subject_id = get_or(j, "subject", 0);
  s.text = get_or<std::string>(j, "text", "");
  const auto g = parse_granularity(get_or<std::string>(j, "granularity", "Character"));
  if (!g) throw Error(ErrorCode::InvalidArgument, "unknown granularity");
  s.granularity = *g;
  s.rest_seconds = get_or(j, "rest_seconds", 1.0);
  if (!j.contains("steps") || !j["steps"].is_array()) {
    throw Error(ErrorCode::InvalidArgument, "scenario needs a 'steps' array");
  }
  for (const auto& js : j["steps"]) {
    ScenarioStep st;
    const std::string action = get_or<std::string>(js, "action", "");
    if (action == "gesture") {
      st.kind = StepKind::Gesture;
      const auto g2 = parse_gesture(get_or<std::string>(js, "gesture", ""));
      if (!g2 || *g2 == GestureClass::Null || *g2 == GestureClass::Swipe) {
        throw Error(ErrorCode::InvalidArgument, "gesture step needs a static command gesture");
      }
      st.gesture = *g2;
      st.hold = get_or(js, "hold", 1.0);
    } else if (action == "swipe") {
      st.kind = StepKind::Swipe;
      st.gesture = GestureClass::Swipe;
      st.from = get_or(js, "from", 0.0);
      st.to = get_or(js, "to", 1.0);
      st.sweep = get_or(js, "sweep", 1.5);
      if (st.from < 0.0 || st.from > 1.0 || st.to < 0.0 || st.to > 1.0 || st.sweep <= 0.0) {
        throw Error(ErrorCode::InvalidArgument, "swipe positions must lie in [0, 1]");
      }
    } else if (action == "pinch_hold") {
      st.kind = StepKind::PinchHold;
      st.hold = get_or(js, "hold", 2.4);
    } else if (action == "mode_switch") {
      st.kind = StepKind::ModeSwitch;
      st.roll_deg = get_or(js, "roll_deg", 0.0);
    } else {
      throw Error(ErrorCode::InvalidArgument, "unknown scenario action '" + action + "'");
    }
    if (st.hold <= 0.0) throw Error(ErrorCode::InvalidArgument, "hold must be positive");
    if (js.contains("start")) st.start = get_or(js, "start", 0.0);
    s.steps.push_back(st);
  }
  return s;
}

nlohmann::ordered_json to_json(const Scenario& s) {
  nlohmann::ordered_json j;
  j["version"] = s.version;
  j["seed"] = s.seed;
  j["subject"] = s.subject_id;
  j["text"] = s.text;
  j["granularity"] = std::string(to_string(s.granularity));
  j["rest_seconds"] = s.rest_seconds;
  j["steps"] = nlohmann::ordered_json::array();
  for (const auto& st : s.steps) {
    nlohmann::ordered_json js;
    js["action"] = std::string(kind_name(st.kind));
    if (st.start) js["start"] = *st.start;
    switch (st.kind) {
      case StepKind::Gesture:
        js["gesture"] = std::string(to_string(st.gesture));
        js["hold"] = st.hold;
        break;
      case StepKind::Swipe:
        js["from"] = st.from;
        js["to"] = st.to;
        js["sweep"] = st.sweep;
        break;
      case StepKind::PinchHold:
        js["hold"] = st.hold;
        break;
      case StepKind::ModeSwitch:
        js["roll_deg"] = st.roll_deg;
        break;
    }
    j["steps"].push_back(js);
  }
  return j;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return scenario_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::InvalidArgument, path.string() + ": " + e.what());
  }
}

ScenarioStreams compile_scenario(const Scenario& s) {
  const SubjectParams subject = make_subject(s.subject_id, s.seed);
  const HandPose rest = rest_pose();
  MotionTrack right, left;
  right.add(0.0, rest);
  left.add(0.0, rest);
  ScenarioStreams out;

  double t = s.rest_seconds;
  right.add(t, rest);
  left.add(t, rest);
  out.rest.push_back({0.0, t});
  for (const ScenarioStep& st : s.steps) {
    if (st.start) {
      if (*st.start < t - 1e-9) {
        throw Error(ErrorCode::InvalidArgument, "step start " + std::to_string(*st.start) +
                                                    " s overlaps the previous step or rest");
      }
      t = *st.start;
      right.add(t, rest);
      left.add(t, rest);
      out.rest.back().end = t;
    }
    const double begin = t;
    switch (st.kind) {
      case StepKind::Gesture: {
        const HandPose target = canonical_pose(st.gesture);
        right.add(t += kTransition, target);
        right.add(t += st.hold, target);
        right.add(t += kTransition, rest);
        break;
      }
      case StepKind::Swipe: {
        HandPose a = canonical_pose(GestureClass::Swipe);
        a.swipe_u = st.from;
        HandPose b = a;
        b.swipe_u = st.to;
        right.add(t += kTransition, a);
        right.add(t += 0.6, a);
        right.add(t += st.sweep, b, true);
        right.add(t += 0.3, b);
        right.add(t += kTransition, rest);
        break;
      }
      case StepKind::PinchHold: {
        const HandPose p = pinch_pose();
        right.add(t += 0.15, p);
        right.add(t += st.hold, p);
        right.add(t += 0.15, rest);
        break;
      }
      case StepKind::ModeSwitch: {
        HandPose up = thumb_up_pose();
        HandPose rolled = up;
        rolled.roll_rad = deg2rad(st.roll_deg);
        HandPose open = spread_pose();
        open.roll_rad = rolled.roll_rad;
        left.add(t += kTransition, up);
        left.add(t += 0.4, up);
        left.add(t += 0.5, rolled);
        left.add(t += 0.3, rolled);
        left.add(t += kTransition, open);
        left.add(t += 0.4, open);
        left.add(t += kTransition, rest);
        break;
      }
    }
    right.hold_until(t);
    left.hold_until(t);
    out.steps.push_back({begin, t});
    const double rest_end = t + s.rest_seconds;
    right.add(rest_end, rest);
    left.add(rest_end, rest);
    out.rest.push_back({t, rest_end});
    t = rest_end;
  }

  const int n = static_cast<int>(std::floor(t * kNativeRate)) + 1;
  FrameSynthesizer rs(subject, derive_seed(s.seed, 0x51, 0));
  FrameSynthesizer ls(subject, derive_seed(s.seed, 0x51, 1));
  out.right = rs.render(right, n, Handedness::Right);
  out.left = ls.render(left, n, Handedness::Left);
  return out;
}

ReplayResult replay_scenario(const Scenario& s, const ScenarioStreams& streams,
                             std::shared_ptr<const ModelParams> params, const SessionConfig& cfg) {
  if (streams.left.size() != streams.right.size()) {
    throw Error(ErrorCode::ShapeMismatch, "left and right streams differ in length");
  }
  EditSession session(std::move(params), Document::start(s.text, s.granularity), cfg);
  ReplayResult r;
  r.latencies_ms.reserve(streams.right.size());
  for (std::size_t i = 0; i < streams.right.size(); ++i) {
    session.push_left(streams.left[i]);
    session.push_right(streams.right[i]);
    r.latencies_ms.push_back(session.runtime().last_latency_ms());
  }
  r.document = session.document();
  r.events = session.events();
  r.commands = session.commands();
  for (const auto& e : r.events) {
    for (const auto& iv : streams.rest) r.events_in_rest += iv.contains(e.fired_at) ? 1 : 0;
  }
  return r;
}

}  // namespace microgext
