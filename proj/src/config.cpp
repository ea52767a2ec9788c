// SPDX-License-Identifier: Apache-2.0
#include "microgext/config.hpp"

#include "microgext/error.hpp"

#include <fstream>
#include <set>
#include <string>

namespace microgext {

namespace {

template <class HP, class F>
void hyper_fields(HP& hp, F&& f) {
  f("hidden", hp.hidden);
  f("alpha", hp.alpha);
  f("beta", hp.beta);
  f("gamma", hp.gamma);
  f("learning_rate", hp.learning_rate);
  f("batch_size", hp.batch_size);
  f("plateau_patience", hp.plateau_patience);
  f("plateau_factor", hp.plateau_factor);
  f("plateau_threshold", hp.plateau_threshold);
  f("min_learning_rate", hp.min_learning_rate);
  f("max_epochs", hp.max_epochs);
  f("contrastive_temperature", hp.contrastive_temperature);
  f("adam_beta1", hp.adam_beta1);
  f("adam_beta2", hp.adam_beta2);
  f("adam_eps", hp.adam_eps);
  f("windows_per_clip", hp.windows_per_clip);
  f("master_seed", hp.master_seed);
}

template <class C, class F>
void fsm_fields(C& c, F&& f) {
  f("delta", c.delta);
  f("n_consecutive", c.n_consecutive);
  f("refractory", c.refractory);
  f("rearm_on_release", c.rearm_on_release);
  f("rearm_frames", c.rearm_frames);
}

template <class C, class F>
void session_fields(C& c, F&& f) {
  f("continuous_units", c.continuous_units);
  f("swipe_hysteresis", c.swipe_hysteresis);
  f("swipe_smoothing_frames", c.swipe_smoothing_frames);
  f("swipe_debounce_frames", c.swipe_debounce_frames);
  f("swipe_contact_distance", c.swipe_contact_distance);
}

void require_object(const nlohmann::json& j, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, where + " must be a JSON object");
}

/// Reads every known key present in `j` and rejects the rest.
template <class Visit>
void overlay(const nlohmann::json& j, const std::string& where, std::set<std::string> extra, Visit&& visit) {
  require_object(j, where);
  std::set<std::string> known = std::move(extra);
  visit([&](const char* key, auto& field) {
    known.insert(key);
    if (!j.contains(key)) return;
    using T = std::decay_t<decltype(field)>;
    const auto& v = j.at(key);
    const bool ok = std::is_same_v<T, bool> ? v.is_boolean()
                    : std::is_floating_point_v<T> ? v.is_number()
                                                  : v.is_number_integer();
    if (!ok) throw Error(ErrorCode::InvalidArgument, where + "." + key + " has the wrong type");
    if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
      if (v.is_number_integer() && v.get<std::int64_t>() < 0 && !v.is_number_unsigned()) {
        throw Error(ErrorCode::InvalidArgument, where + "." + key + " must be non-negative");
      }
    }
    field = v.get<T>();
  });
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw Error(ErrorCode::InvalidArgument, "unknown key " + where + "." + key);
  }
}

}  // namespace

nlohmann::ordered_json to_json(const HyperParams& hp) {
  nlohmann::ordered_json j;
  hyper_fields(hp, [&](const char* k, const auto& v) { j[k] = v; });
  return j;
}

nlohmann::ordered_json to_json(const FsmConfig& cfg) {
  nlohmann::ordered_json j;
  fsm_fields(cfg, [&](const char* k, const auto& v) { j[k] = v; });
  return j;
}

nlohmann::ordered_json to_json(const SessionConfig& cfg) {
  nlohmann::ordered_json j;
  j["swipe_mapping"] = cfg.swipe_mapping == SwipeMapping::Discrete ? "discrete" : "continuous";
  session_fields(cfg, [&](const char* k, const auto& v) { j[k] = v; });
  return j;
}

nlohmann::ordered_json to_json(const RunConfig& cfg) {
  nlohmann::ordered_json j;
  j["hyperparams"] = to_json(cfg.hyper);
  j["fsm"] = to_json(cfg.session.fsm);
  j["session"] = to_json(cfg.session);
  return j;
}

HyperParams hyperparams_from_json(const nlohmann::json& j, HyperParams base) {
  // Architecture sizes are fixed by the data layout and stored only for
  // provenance; accept them when they agree.
  overlay(j, "hyperparams", {"window", "joints", "feature_dim", "n_classes", "n_states"},
          [&](auto&& f) { hyper_fields(base, f); });
  const std::pair<const char*, int> fixed[] = {{"window", base.window},
                                              {"joints", base.joints},
                                              {"feature_dim", base.feature_dim},
                                              {"n_classes", base.n_classes},
                                              {"n_states", base.n_states}};
  for (const auto& [key, want] : fixed) {
    if (j.contains(key) && (!j.at(key).is_number_integer() || j.at(key).get<int>() != want)) {
      throw Error(ErrorCode::InvalidArgument, std::string("hyperparams.") + key + " is fixed at " +
                                                  std::to_string(want));
    }
  }
  base.validate();
  return base;
}

FsmConfig fsm_config_from_json(const nlohmann::json& j, FsmConfig base) {
  overlay(j, "fsm", {}, [&](auto&& f) { fsm_fields(base, f); });
  base.validate();
  return base;
}

SessionConfig session_config_from_json(const nlohmann::json& j, SessionConfig base) {
  overlay(j, "session", {"swipe_mapping"}, [&](auto&& f) { session_fields(base, f); });
  if (j.contains("swipe_mapping")) {
    const auto& m = j.at("swipe_mapping");
    if (m == "discrete") {
      base.swipe_mapping = SwipeMapping::Discrete;
    } else if (m == "continuous") {
      base.swipe_mapping = SwipeMapping::Continuous;
    } else {
      throw Error(ErrorCode::InvalidArgument, "session.swipe_mapping must be \"discrete\" or \"continuous\"");
    }
  }
  if (base.continuous_units < 1 || base.swipe_hysteresis < 0.0 || base.swipe_hysteresis >= 0.5 ||
      base.swipe_smoothing_frames < 1 || base.swipe_debounce_frames < 1 ||
      !(base.swipe_contact_distance > 0.0)) {
    throw Error(ErrorCode::InvalidArgument,
                "session needs continuous_units >= 1, swipe_hysteresis in [0, 0.5), "
                "smoothing and debounce frames >= 1 and a positive swipe_contact_distance");
  }
  return base;
}

RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base) {
  require_object(j, "config");
  for (const auto& [key, _] : j.items()) {
    if (key != "hyperparams" && key != "fsm" && key != "session") {
      throw Error(ErrorCode::InvalidArgument, "unknown config section '" + key + "'");
    }
  }
  if (j.contains("hyperparams")) base.hyper = hyperparams_from_json(j["hyperparams"], base.hyper);
  const FsmConfig fsm = j.contains("fsm") ? fsm_config_from_json(j["fsm"], base.session.fsm) : base.session.fsm;
  if (j.contains("session")) base.session = session_config_from_json(j["session"], base.session);
  base.session.fsm = fsm;
  return base;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return run_config_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::InvalidArgument, path.string() + ": " + e.what());
  }
}

}  // namespace microgext
