// SPDX-License-Identifier: Apache-2.0
//
// JSON run configuration: model hyperparameters, FSM thresholds and session
// options. Every field is optional on input; unknown keys are rejected.
#pragma once

#include "microgext/fsm.hpp"
#include "microgext/model.hpp"
#include "microgext/session.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>

namespace microgext {

struct RunConfig {
  HyperParams hyper;
  SessionConfig session;  // includes the FSM thresholds
};

nlohmann::ordered_json to_json(const HyperParams& hp);
nlohmann::ordered_json to_json(const FsmConfig& cfg);
nlohmann::ordered_json to_json(const SessionConfig& cfg);
/// {"hyperparams": {...}, "fsm": {...}, "session": {...}}
nlohmann::ordered_json to_json(const RunConfig& cfg);

/// Overlays the keys present in `j` onto `base`. Throws InvalidArgument on
/// unknown keys or wrong types, then validates the result.
HyperParams hyperparams_from_json(const nlohmann::json& j, HyperParams base = {});
FsmConfig fsm_config_from_json(const nlohmann::json& j, FsmConfig base = {});
SessionConfig session_config_from_json(const nlohmann::json& j, SessionConfig base = {});
RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {});

RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace microgext
