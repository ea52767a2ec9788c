// SPDX-License-Identifier: Apache-2.0
//
// File formats: .mgd datasets, .mgc checkpoints, .mgs session recordings,
// .mgr reports, plus command logs and document snapshots. Layouts are
// specified in docs/formats.md.
#pragma once

#include "microgext/editor.hpp"
#include "microgext/evaluate.hpp"
#include "microgext/model.hpp"
#include "microgext/session.hpp"
#include "microgext/stream.hpp"
#include "microgext/synth.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace microgext {

inline constexpr int kDatasetVersion = 1;
inline constexpr int kCheckpointVersion = 1;
inline constexpr int kSessionVersion = 1;
inline constexpr int kReportVersion = 1;

void write_dataset(const Dataset& ds, const std::filesystem::path& path);
/// Throws VersionMismatch, JointOrderMismatch, or CorruptRecord naming the
/// zero-based clip index that failed to parse.
Dataset read_dataset(const std::filesystem::path& path);

/// Hyperparameters travel with the checkpoint for provenance.
void save_checkpoint(const ModelParams& params, const HyperParams& hp, const std::filesystem::path& path);
/// Throws HashMismatch when the trailing SHA-256 disagrees with the content
/// and ShapeMismatch when a tensor does not fit the stored width (or
/// `expected_hidden`, when given).
ModelParams load_checkpoint(const std::filesystem::path& path, std::optional<int> expected_hidden = {},
                            HyperParams* hp = nullptr);

/// Lower-case hex SHA-256 of a file's bytes.
std::string file_sha256(const std::filesystem::path& path);

struct SessionRecording {
  std::vector<HandFrame> frames;  // both hands, in arrival order
  std::vector<GestureEvent> events;
};

void write_session(const SessionRecording& rec, const std::filesystem::path& path);
/// Throws VersionMismatch, JointOrderMismatch, or CorruptRecord with the line number.
SessionRecording read_session(const std::filesystem::path& path);

/// One line per command: timestamp, source, command text, outcome.
void write_command_log(const std::vector<CommandRecord>& log, const std::filesystem::path& path);
std::vector<CommandRecord> read_command_log(const std::filesystem::path& path);

/// Visible document state; `with_history` adds the undo depth.
nlohmann::ordered_json document_to_json(const Document& doc, bool with_history = true);

struct MetricsReport {
  EvalReport eval;
  int fold = 0;
  std::uint64_t seed = 0;
  int hidden = 0;
  std::string checkpoint_sha256;
  std::string dataset_sha256;
};

nlohmann::ordered_json report_to_json(const MetricsReport& r);
MetricsReport report_from_json(const nlohmann::json& j);
/// Confusion matrices as row-normalized tables plus accuracies and ECE.
std::string report_table(const MetricsReport& r);

/// Writes the machine-readable report to `path` (.mgr) and, when
/// `table_path` is non-empty, the human table next to it.
void emit_report(const MetricsReport& r, const std::filesystem::path& path,
                 const std::filesystem::path& table_path = {});
MetricsReport read_report(const std::filesystem::path& path);

/// Writes `content` to `path` via a temporary sibling and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace microgext
