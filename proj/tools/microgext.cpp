// SPDX-License-Identifier: Apache-2.0
//
// microgext command-line driver: synth, train, eval, stream, bench.
#include "microgext/config.hpp"
#include "microgext/error.hpp"
#include "microgext/evaluate.hpp"
#include "microgext/io.hpp"
#include "microgext/parallel.hpp"
#include "microgext/scenario.hpp"
#include "microgext/train.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

namespace fs = std::filesystem;
using namespace microgext;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct Global {
  std::optional<std::uint64_t> seed;
  std::string config_path;
  std::string out = "out";
  RunConfig config;
};

/// Failed check of a requested threshold; maps to exit code 1.
struct CheckFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

fs::path prepare_out(const Global& g) {
  const fs::path out = g.out;
  fs::create_directories(out);
  write_file_atomic(out / "config.json", to_json(g.config).dump(2) + "\n");
  return out;
}

void write_json(const fs::path& p, const nlohmann::ordered_json& j) { write_file_atomic(p, j.dump(2) + "\n"); }

struct Percentiles {
  double p50 = 0.0, p95 = 0.0, p99 = 0.0, max = 0.0;
  std::size_t samples = 0;
};

/// Nearest-rank percentiles.
Percentiles percentiles(std::vector<double> v) {
  Percentiles p;
  p.samples = v.size();
  if (v.empty()) return p;
  std::sort(v.begin(), v.end());
  const auto rank = [&](double q) {
    const auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
    return v[std::clamp<std::size_t>(k, 1, v.size()) - 1];
  };
  p.p50 = rank(0.50);
  p.p95 = rank(0.95);
  p.p99 = rank(0.99);
  p.max = v.back();
  return p;
}

nlohmann::ordered_json to_json(const Percentiles& p) {
  nlohmann::ordered_json j;
  j["samples"] = p.samples;
  j["p50_ms"] = p.p50;
  j["p95_ms"] = p.p95;
  j["p99_ms"] = p.p99;
  j["max_ms"] = p.max;
  return j;
}

// --- synth ---------------------------------------------------------------------

struct SynthArgs {
  int n_subjects = 10;
  int reps = 20;
  int null_reps = 20;
};

int cmd_synth(const Global& g, const SynthArgs& a) {
  const Stopwatch clock;
  const fs::path out = prepare_out(g);
  const Dataset ds = make_dataset(a.n_subjects, a.reps, a.null_reps, g.seed.value_or(7));
  write_dataset(ds, out / "dataset.mgd");
  std::array<int, kNumClasses> hist{};
  for (const auto& c : ds.clips) ++hist[class_index(c.gesture)];
  std::printf("%zu clips -> %s\n", ds.clips.size(), (out / "dataset.mgd").c_str());
  for (int k = 0; k < kNumClasses; ++k) {
    std::printf("  %-9s %d\n", to_string(static_cast<GestureClass>(k)).data(), hist[k]);
  }
  write_json(out / "timing.json", {{"command", "synth"}, {"wall_seconds", clock.seconds()}});
  return 0;
}

// --- train ---------------------------------------------------------------------

struct TrainArgs {
  std::string dataset;
  int fold = 0;
};

int cmd_train(const Global& g, const TrainArgs& a) {
  const Stopwatch clock;
  const fs::path out = prepare_out(g);
  const Dataset ds = read_dataset(a.dataset);
  HyperParams hp = g.config.hyper;
  if (g.seed) hp.master_seed = *g.seed;

  std::ostringstream log;
  log << "epoch\ttrain_loss\tval_loss\tlearning_rate\n";
  TrainResult r = train(ds, a.fold, hp, [&](const EpochLog& e) {
    char line[160];
    std::snprintf(line, sizeof line, "%d\t%.9g\t%.9g\t%.9g\n", e.epoch, e.train_loss, e.val_loss, e.learning_rate);
    log << line;
    std::fputs(line, stdout);
    std::fflush(stdout);
  });
  const CalibrationResult cal = calibrate(r.params, tiling_windows(ds, r.split.validation));
  save_checkpoint(r.params, hp, out / "model.mgc");
  write_file_atomic(out / "train_log.tsv", log.str());

  nlohmann::ordered_json summary;
  summary["fold"] = a.fold;
  summary["validation_subject"] = r.split.validation_subject;
  summary["best_epoch"] = r.best_epoch;
  summary["tau"] = cal.tau;
  summary["nll_before"] = cal.nll_before;
  summary["nll_after"] = cal.nll_after;
  summary["ece_before"] = cal.ece_before;
  summary["ece_after"] = cal.ece_after;
  summary["validation_windows"] = cal.windows;
  summary["argmax_changed"] = cal.argmax_changed;
  write_json(out / "calibration.json", summary);
  write_json(out / "timing.json", {{"command", "train"}, {"wall_seconds", clock.seconds()}});
  std::printf("best epoch %d, tau %.4f, checkpoint %s\n", r.best_epoch, cal.tau, (out / "model.mgc").c_str());
  return 0;
}

// --- eval ----------------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint;
  std::string dataset;
  int fold = 0;
  std::optional<double> min_class_accuracy;
};

int cmd_eval(const Global& g, const EvalArgs& a) {
  const Stopwatch clock;
  const fs::path out = prepare_out(g);
  HyperParams hp;
  const ModelParams params = load_checkpoint(a.checkpoint, std::nullopt, &hp);
  const Dataset ds = read_dataset(a.dataset);
  const std::uint64_t seed = g.seed.value_or(hp.master_seed);
  const FoldSplit split = split_fold(ds, a.fold, seed);

  MetricsReport report;
  report.fold = a.fold;
  report.seed = seed;
  report.hidden = params.hidden;
  report.checkpoint_sha256 = file_sha256(a.checkpoint);
  report.dataset_sha256 = file_sha256(a.dataset);
  report.eval = evaluate(params, ds, split.test);
  emit_report(report, out / "report.mgr", out / "report.txt");
  std::fputs(report_table(report).c_str(), stdout);
  write_json(out / "timing.json", {{"command", "eval"}, {"wall_seconds", clock.seconds()}});

  if (a.min_class_accuracy) {
    for (int k = 0; k < kNumClasses; ++k) {
      const double acc = report.eval.class_accuracy[k];
      if (!(acc >= *a.min_class_accuracy)) {
        throw CheckFailed("class " + std::string(to_string(static_cast<GestureClass>(k))) + " accuracy " +
                          std::to_string(acc) + " below " + std::to_string(*a.min_class_accuracy));
      }
    }
  }
  return 0;
}

// --- stream --------------------------------------------------------------------

struct StreamArgs {
  std::string checkpoint;
  std::string recording;
  std::string script;
  std::string text;
  std::string golden;
};

std::string event_line(const GestureEvent& e) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.9g\t%s\t%.9g\t", e.fired_at, to_string(e.gesture).data(), e.mean_confidence);
  std::string s = buf;
  if (e.swipe_substate_trace.empty()) return s + "-";
  for (SubState x : e.swipe_substate_trace) s += static_cast<char>('0' + x);
  return s;
}

int cmd_stream(const Global& g, const StreamArgs& a) {
  const Stopwatch clock;
  const fs::path out = prepare_out(g);
  auto params = std::make_shared<const ModelParams>(load_checkpoint(a.checkpoint));

  Document final_doc;
  std::vector<GestureEvent> events;
  std::vector<CommandRecord> commands;
  std::vector<double> latencies;
  nlohmann::ordered_json summary;

  if (!a.script.empty()) {
    const Scenario s = load_scenario(a.script);
    const ScenarioStreams streams = compile_scenario(s);
    const ReplayResult r = replay_scenario(s, streams, params, g.config.session);
    final_doc = r.document;
    events = r.events;
    commands = r.commands;
    latencies = r.latencies_ms;
    summary["expected_events"] = s.expected_events();
    summary["events_in_rest"] = r.events_in_rest;
    SessionRecording rec;
    for (std::size_t i = 0; i < streams.right.size(); ++i) {
      rec.frames.push_back(streams.left[i]);
      rec.frames.push_back(streams.right[i]);
    }
    rec.events = r.events;
    write_session(rec, out / "session.mgs");
  } else {
    const SessionRecording rec = read_session(a.recording);
    EditSession session(params, Document::start(a.text, Granularity::Character), g.config.session);
    for (const HandFrame& f : rec.frames) {
      if (f.handedness == Handedness::Left) {
        session.push_left(f);
      } else {
        session.push_right(f);
        latencies.push_back(session.runtime().last_latency_ms());
      }
    }
    final_doc = session.document();
    events = session.events();
    commands = session.commands();
  }

  std::string ev = "# microgext event log v1\n";
  for (const auto& e : events) ev += event_line(e) + "\n";
  write_file_atomic(out / "events.log", ev);
  write_command_log(commands, out / "commands.log");
  const std::string doc_json = document_to_json(final_doc, false).dump(2) + "\n";
  write_file_atomic(out / "document.json", doc_json);
  summary["events"] = events.size();
  summary["commands"] = commands.size();
  write_json(out / "summary.json", summary);

  // Latencies skip the frames before the window fills.
  std::vector<double> steady;
  for (double l : latencies) {
    if (l > 0.0) steady.push_back(l);
  }
  nlohmann::ordered_json timing;
  timing["command"] = "stream";
  timing["wall_seconds"] = clock.seconds();
  timing["push_frame_latency"] = to_json(percentiles(steady));
  write_json(out / "timing.json", timing);

  std::printf("%zu events, %zu commands\n%s", events.size(), commands.size(), doc_json.c_str());
  if (!a.golden.empty() && read_file(a.golden) != doc_json) {
    throw CheckFailed("final document differs from " + a.golden);
  }
  return 0;
}

// --- bench ---------------------------------------------------------------------

struct BenchArgs {
  std::string checkpoint;
  int hidden = 256;
  int frames = 2000;
  int warmup = 200;
  std::optional<double> max_p99_ms;
};

int cmd_bench(const Global& g, const BenchArgs& a) {
  const fs::path out = prepare_out(g);
  auto params = std::make_shared<const ModelParams>(
      a.checkpoint.empty() ? ModelParams::init(a.hidden, g.seed.value_or(1)) : load_checkpoint(a.checkpoint));
  // Continuous rendering of mixed gestures so the FSM sees realistic input.
  MotionTrack track;
  track.add(0.0, rest_pose());
  double t = 0.0;
  const double total = (a.frames + a.warmup + kWindowFrames) / kNativeRate;
  for (int k = 0; t < total; ++k) {
    const GestureClass gc = kCommandGestures[k % kCommandGestures.size()];
    track.add(t += 0.3, canonical_pose(gc));
    track.add(t += 0.8, canonical_pose(gc));
    track.add(t += 0.3, rest_pose());
  }
  FrameSynthesizer synth(make_subject(0, g.seed.value_or(1)), g.seed.value_or(1));
  const auto frames = synth.render(track, a.frames + a.warmup + kWindowFrames - 1);

  StreamRuntime runtime(params, g.config.session.fsm);
  std::vector<double> lat;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    runtime.push_frame(frames[i]);
    if (i >= static_cast<std::size_t>(kWindowFrames - 1 + a.warmup)) lat.push_back(runtime.last_latency_ms());
  }
  const Percentiles p = percentiles(lat);
  nlohmann::ordered_json j;
  j["command"] = "bench";
  j["hidden"] = params->hidden;
  j["warmup_frames"] = a.warmup;
  j["push_frame_latency"] = to_json(p);
  j["budget_ms"] = 1000.0 / kNativeRate;
  write_json(out / "bench.json", j);
  std::printf("hidden %d, %zu frames: p50 %.3f ms, p95 %.3f ms, p99 %.3f ms (budget %.2f ms)\n", params->hidden,
              p.samples, p.p50, p.p95, p.p99, 1000.0 / kNativeRate);
  if (a.max_p99_ms && !(p.p99 < *a.max_p99_ms)) {
    throw CheckFailed("p99 " + std::to_string(p.p99) + " ms exceeds " + std::to_string(*a.max_p99_ms));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"microgext: synthetic microgesture recognition and gesture-driven text editing"};
  app.require_subcommand(1);
  Global g;
  app.add_option("--seed", g.seed, "Master seed (synth default 7, train default from config)");
  app.add_option("--config", g.config_path, "JSON run configuration (hyperparams, fsm, session)")
      ->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  int threads = 0;
  app.add_option("--threads", threads, "Worker cap (overrides MICROGEXT_THREADS)")->check(CLI::PositiveNumber);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset (.mgd)");
  synth->add_option("--n-subjects", sa.n_subjects)->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--reps", sa.reps, "Repetitions per gesture")->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--null-reps", sa.null_reps)->check(CLI::PositiveNumber)->capture_default_str();

  TrainArgs ta;
  auto* tr = app.add_subcommand("train", "Train on all subjects but the fold subject; writes model.mgc");
  tr->add_option("--dataset", ta.dataset)->required()->check(CLI::ExistingFile);
  tr->add_option("--fold", ta.fold, "Held-out test subject")->check(CLI::NonNegativeNumber)->capture_default_str();

  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on the fold subject; writes report.mgr");
  ev->add_option("--checkpoint", ea.checkpoint)->required()->check(CLI::ExistingFile);
  ev->add_option("--dataset", ea.dataset)->required()->check(CLI::ExistingFile);
  ev->add_option("--fold", ea.fold)->check(CLI::NonNegativeNumber)->capture_default_str();
  ev->add_option("--min-class-accuracy", ea.min_class_accuracy, "Exit 1 if any class falls below")
      ->check(CLI::Range(0.0, 1.0));

  StreamArgs st;
  auto* stream = app.add_subcommand("stream", "Replay a recording (.mgs) or a scenario script");
  stream->add_option("--checkpoint", st.checkpoint)->required()->check(CLI::ExistingFile);
  auto* rec_opt = stream->add_option("recording", st.recording, "Session recording")->check(CLI::ExistingFile);
  auto* script_opt = stream->add_option("--script", st.script, "Scenario JSON")->check(CLI::ExistingFile);
  rec_opt->excludes(script_opt);
  stream->add_option("--text", st.text, "Initial text when replaying a recording");
  stream->add_option("--golden", st.golden, "Exit 1 unless document.json matches this file")
      ->check(CLI::ExistingFile);

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "Per-frame push_frame latency percentiles");
  auto* ck_opt = bench->add_option("--checkpoint", ba.checkpoint)->check(CLI::ExistingFile);
  bench->add_option("--hidden", ba.hidden, "Width of untrained parameters when no checkpoint is given")
      ->check(CLI::PositiveNumber)
      ->excludes(ck_opt)
      ->capture_default_str();
  bench->add_option("--frames", ba.frames)->check(CLI::PositiveNumber)->capture_default_str();
  bench->add_option("--warmup", ba.warmup, "Frames excluded after the window fills")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  bench->add_option("--max-p99-ms", ba.max_p99_ms, "Exit 1 unless p99 is below this");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  if (stream->parsed() && st.recording.empty() && st.script.empty()) {
    std::cerr << "stream: give a recording or --script\n";
    return kExitUsage;
  }
  if (threads > 0) set_max_threads(threads);

  try {
    if (!g.config_path.empty()) g.config = load_run_config(g.config_path);
  } catch (const Error& e) {
    std::cerr << "config: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (synth->parsed()) return cmd_synth(g, sa);
    if (tr->parsed()) return cmd_train(g, ta);
    if (ev->parsed()) return cmd_eval(g, ea);
    if (stream->parsed()) return cmd_stream(g, st);
    if (bench->parsed()) return cmd_bench(g, ba);
  } catch (const CheckFailed& e) {
    std::cerr << "check failed: " << e.what() << "\n";
    return kExitFailure;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::InvalidArgument ? kExitUsage : kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
