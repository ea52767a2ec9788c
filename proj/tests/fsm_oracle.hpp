// SPDX-License-Identifier: Apache-2.0
//
// Table-driven reference for the gesture FSM and an exhaustive explorer
// that runs it in lockstep with fsm_step over every input script.
#pragma once

#include "microgext/fsm.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace microgext::testing {

struct ScriptInput {
  int cls;  // class index of the argmax
  double p;
  std::array<double, kNumClasses> probs;
};

inline ScriptInput make_input(GestureClass g, double p) {
  ScriptInput in{class_index(g), p, {}};
  const double rest = (1.0 - p) / (kNumClasses - 1);
  in.probs.fill(rest);
  in.probs[in.cls] = p;
  return in;
}

/// {0.30, 0.95, 0.99} for three gestures, plus a confident Null.
inline std::vector<ScriptInput> grid_inputs(bool with_weak_null = false) {
  std::vector<ScriptInput> v;
  for (GestureClass g : {GestureClass::Fist, GestureClass::Ring, GestureClass::Swipe}) {
    for (double p : {0.30, 0.95, 0.99}) v.push_back(make_input(g, p));
  }
  v.push_back(make_input(GestureClass::Null, 0.99));
  if (with_weak_null) v.push_back(make_input(GestureClass::Null, 0.30));
  return v;
}

// Reference machine. Each frame is first classified into one relation, then
// the (phase, relation) table gives the action.
struct SimState {
  int phase = 1;  // 1 or 2
  int cand = -1;
  int count = 0;
  int refractory = 0;
  int blocked = -1;
  int absent = 0;  // frames the blocked class has been missing
  double sum = 0.0;
  auto key() const { return std::tuple(phase, cand, count, refractory, blocked, absent, sum); }
};

enum class Rel { Cooling, Weak, NullClass, Blocked, Same, Other };
enum class Act { Idle, Start, Extend, Switch };

inline const std::map<std::pair<int, Rel>, Act>& sim_table() {
  static const std::map<std::pair<int, Rel>, Act> t = {
      {{1, Rel::Cooling}, Act::Idle},   {{2, Rel::Cooling}, Act::Idle},
      {{1, Rel::Weak}, Act::Idle},      {{2, Rel::Weak}, Act::Idle},
      {{1, Rel::NullClass}, Act::Idle}, {{2, Rel::NullClass}, Act::Idle},
      {{1, Rel::Blocked}, Act::Idle},   {{2, Rel::Blocked}, Act::Idle},
      {{1, Rel::Same}, Act::Start},     {{2, Rel::Same}, Act::Extend},
      {{1, Rel::Other}, Act::Start},    {{2, Rel::Other}, Act::Switch},
  };
  return t;
}

/// Returns the fired class index, or -1.
inline int sim_step(SimState& s, const ScriptInput& in, const FsmConfig& cfg) {
  const bool strong = in.p >= cfg.delta;
  if (s.blocked >= 0) {
    if (strong && in.cls == s.blocked) {
      s.absent = 0;
    } else if (++s.absent == cfg.rearm_frames) {
      s.blocked = -1, s.absent = 0;
    }
  }
  Rel rel;
  if (s.refractory > 0) {
    rel = Rel::Cooling;
  } else if (!strong) {
    rel = Rel::Weak;
  } else if (in.cls == class_index(GestureClass::Null)) {
    rel = Rel::NullClass;
  } else if (in.cls == s.blocked) {
    rel = Rel::Blocked;
  } else {
    rel = (s.phase == 2 && in.cls == s.cand) ? Rel::Same : Rel::Other;
  }
  if (rel == Rel::Cooling) --s.refractory;
  switch (sim_table().at({s.phase, rel})) {
    case Act::Idle:
      s.phase = 1, s.cand = -1, s.count = 0, s.sum = 0.0;
      return -1;
    case Act::Start:
    case Act::Switch:
      s.phase = 2, s.cand = in.cls, s.count = 1, s.sum = in.p;
      break;
    case Act::Extend:
      s.count += 1, s.sum += in.p;
      break;
  }
  if (s.count < cfg.n_consecutive) return -1;
  const int fired = s.cand;
  s.phase = 1, s.cand = -1, s.count = 0, s.sum = 0.0;
  s.refractory = cfg.refractory;
  if (cfg.rearm_on_release) s.blocked = fired;
  s.absent = 0;
  return fired;
}

struct ExploreStats {
  std::uint64_t steps_checked = 0;
  std::uint64_t discrepancies = 0;
  std::uint64_t invariant_violations = 0;
  std::uint64_t fires = 0;
  std::string first_problem;
};

/// Runs fsm_step and the reference over every script of length <= max_len.
/// Scripts reaching the same joint (impl, reference, trailing-run) state are
/// merged, so the search is exhaustive without enumerating each script.
inline ExploreStats explore_fsm(const FsmConfig& cfg, const std::vector<ScriptInput>& inputs,
                                int max_len) {
  struct Node {
    FsmState impl;
    SimState sim;
    int run_cls = -1;  // class of the trailing run of confident detections
    int run_len = 0;
  };
  const auto key = [](const Node& n) {
    return std::tuple(static_cast<int>(n.impl.phase), n.impl.candidate ? class_index(*n.impl.candidate) : -1,
                      n.impl.consecutive_count, n.impl.refractory_remaining,
                      n.impl.awaiting_release ? class_index(*n.impl.awaiting_release) : -1, n.impl.release_count,
                      n.impl.confidence_sum, n.sim.key(), n.run_cls, n.run_len);
  };
  ExploreStats st;
  const auto problem = [&st](const std::string& what) {
    if (st.first_problem.empty()) st.first_problem = what;
  };
  std::vector<Node> frontier{Node{}};
  for (int depth = 0; depth < max_len; ++depth) {
    std::vector<Node> next;
    std::set<decltype(key(Node{}))> seen;
    for (const Node& n : frontier) {
      for (const ScriptInput& in : inputs) {
        Node m = n;
        const FsmStepResult r = fsm_step(n.impl, in.probs, cfg);
        const int ref = sim_step(m.sim, in, cfg);
        m.impl = r.state;
        const bool strong = in.p >= cfg.delta;
        if (strong && in.cls == m.run_cls) {
          ++m.run_len;
        } else {
          m.run_cls = strong ? in.cls : -1;
          m.run_len = strong ? 1 : 0;
        }
        ++st.steps_checked;
        const int got = r.fired ? class_index(r.fired->gesture) : -1;
        const bool state_match =
            static_cast<int>(m.impl.phase) + 1 == m.sim.phase &&
            (m.impl.candidate ? class_index(*m.impl.candidate) : -1) == m.sim.cand &&
            m.impl.consecutive_count == m.sim.count &&
            m.impl.refractory_remaining == m.sim.refractory &&
            (m.impl.awaiting_release ? class_index(*m.impl.awaiting_release) : -1) == m.sim.blocked &&
            m.impl.release_count == m.sim.absent;
        if (got != ref || !state_match) {
          ++st.discrepancies;
          problem("mismatch at depth " + std::to_string(depth + 1));
        }
        if (got >= 0) {
          ++st.fires;
          if (got == class_index(GestureClass::Null) || m.run_cls != got ||
              m.run_len < cfg.n_consecutive || r.fired->mean_confidence < cfg.delta) {
            ++st.invariant_violations;
            problem("fire without a qualifying run at depth " + std::to_string(depth + 1));
          }
        }
        if (m.impl.consecutive_count > cfg.n_consecutive ||
            (m.impl.phase == FsmPhase::S1 && m.impl.consecutive_count != 0) ||
            m.impl.candidate == GestureClass::Null) {
          ++st.invariant_violations;
          problem("state invariant broken at depth " + std::to_string(depth + 1));
        }
        if (seen.insert(key(m)).second) next.push_back(m);
      }
    }
    frontier = std::move(next);
  }
  return st;
}

}  // namespace microgext::testing
