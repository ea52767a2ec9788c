// SPDX-License-Identifier: Apache-2.0
#include "microgext/config.hpp"
#include "microgext/io.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>

namespace microgext {
namespace {

namespace fs = std::filesystem;

int run(const std::string& args) {
  const std::string cmd = std::string("\"") + MICROGEXT_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("microgext_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("--bogus synth"), 2);
  EXPECT_EQ(run("synth --n-subjects 0"), 2);
  EXPECT_EQ(run("train --dataset /nonexistent.mgd"), 2);
  EXPECT_EQ(run("bench --checkpoint /nonexistent.mgc"), 2);

  const fs::path dir = scratch("usage");
  write_file_atomic(dir / "bad.json", R"({"hyperparams": {"hiden": 8}})");
  EXPECT_EQ(run("--config \"" + (dir / "bad.json").string() + "\" --out \"" + dir.string() + "\" synth"), 2);
}

TEST(Cli, HelpExitsZero) { EXPECT_EQ(run("--help"), 0); }

TEST(Cli, CorruptCheckpointExitsOne) {
  const fs::path dir = scratch("corrupt");
  write_file_atomic(dir / "m.mgc", "MGXC not a checkpoint at all, just bytes padded out to length.......");
  EXPECT_EQ(run("--out \"" + dir.string() + "\" bench --frames 10 --warmup 0 --checkpoint \"" +
                (dir / "m.mgc").string() + "\""),
            1);
}

TEST(Cli, SynthWritesDatasetAndEchoesConfig) {
  const fs::path dir = scratch("synth");
  write_file_atomic(dir / "c.json", R"({"fsm": {"delta": 0.9}})");
  ASSERT_EQ(run("--seed 3 --config \"" + (dir / "c.json").string() + "\" --out \"" + dir.string() +
                "/o\" synth --n-subjects 2 --reps 1 --null-reps 1"),
            0);
  const Dataset ds = read_dataset(dir / "o/dataset.mgd");
  EXPECT_EQ(ds.seed, 3u);
  EXPECT_EQ(ds.clips.size(), 2u * 8u);
  const RunConfig echoed = load_run_config(dir / "o/config.json");
  EXPECT_DOUBLE_EQ(echoed.session.fsm.delta, 0.9);
  EXPECT_TRUE(fs::exists(dir / "o/timing.json"));
}

TEST(Cli, BenchReportsPercentiles) {
  const fs::path dir = scratch("bench");
  ASSERT_EQ(run("--out \"" + dir.string() + "\" bench --hidden 8 --frames 50 --warmup 5"), 0);
  const auto j = nlohmann::json::parse(read_file(dir / "bench.json"));
  EXPECT_EQ(j["push_frame_latency"]["samples"], 50);
  EXPECT_LE(j["push_frame_latency"]["p50_ms"].get<double>(), j["push_frame_latency"]["p99_ms"].get<double>());
  EXPECT_EQ(run("--out \"" + dir.string() + "\" bench --hidden 8 --frames 50 --warmup 5 --max-p99-ms 0"), 1);
}

TEST(Cli, StreamScriptWritesLogs) {
  const fs::path dir = scratch("stream");
  HyperParams hp;
  hp.hidden = 8;
  save_checkpoint(ModelParams::init(8, 2), hp, dir / "m.mgc");
  const fs::path script = fs::path(MICROGEXT_SOURCE_DIR) / "scenarios/edit_session.json";
  ASSERT_EQ(run("--out \"" + dir.string() + "/o\" stream --checkpoint \"" + (dir / "m.mgc").string() +
                "\" --script \"" + script.string() + "\""),
            0);
  EXPECT_EQ(read_file(dir / "o/events.log").rfind("# microgext event log v1\n", 0), 0u);
  const auto commands = read_command_log(dir / "o/commands.log");
  ASSERT_FALSE(commands.empty());  // the left-hand mode switch needs no model
  EXPECT_EQ(to_string(commands.front().command), "SetGranularity Word");
  const auto doc = nlohmann::json::parse(read_file(dir / "o/document.json"));
  EXPECT_FALSE(doc.contains("undo_depth"));
  EXPECT_FALSE(read_session(dir / "o/session.mgs").frames.empty());
  // A golden file that cannot match is a failed check.
  write_file_atomic(dir / "golden.json", "{}\n");
  EXPECT_EQ(run("--out \"" + dir.string() + "/o2\" stream --checkpoint \"" + (dir / "m.mgc").string() +
                "\" --script \"" + script.string() + "\" --golden \"" + (dir / "golden.json").string() + "\""),
            1);
}

}  // namespace
}  // namespace microgext
