// Copyright 2026 The wmeval Authors
// SPDX-License-Identifier: Apache-2.0

// Persistence of runs. Layout under the store root:
//
//   runs/<run_id>/manifest.json
//   runs/<run_id>/rollouts/<policy>/<task>/<trial>/initial.vframes
//   runs/<run_id>/rollouts/<policy>/<task>/<trial>/<seed>.vframes
//   runs/<run_id>/rollouts/<policy>/<task>/<trial>/<seed>.json
//   runs/<run_id>/rollouts/<policy>/<task>/<trial>/<seed>.chunks.jsonl
//   runs/<run_id>/labels.jsonl
//   runs/<run_id>/real_results.csv
//   runs/<run_id>/report.json, report_tasks.csv, scatter.csv
//
// Nothing written here depends on wall-clock time or thread timing, so two
// identical runs produce identical directories.

#ifndef WMEVAL_STORE_H_
#define WMEVAL_STORE_H_

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "wmeval/label_fusion.h"
#include "wmeval/protocol.h"
#include "wmeval/rollout.h"

namespace wmeval {

class StoreError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Letters, digits, '.', '_' and '-', not starting with '.'. Run ids, task
// names and policy ids become path components and must pass this.
bool IsSafeName(std::string_view s);

struct PolicyEntry {
  std::string id;
  std::string endpoint;
};

struct RunManifest {
  std::string run_id;
  std::vector<TaskDefinition> tasks;
  std::vector<PolicyEntry> policies;
  std::string world_model;                // endpoint
  std::optional<std::string> classifier;  // endpoint
  int trials_per_task = 10;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  int parallelism = 1;
  std::string output_dir = ".";
  int horizon = protocol::kDefaultHorizon;
  int arm_count = 1;
  double timeout_seconds = protocol::kDefaultTimeoutSeconds;
  // Real-results CSV whose frames seed the trials; empty means generated
  // sandbox scenes.
  std::string initial_frames;
  std::string created_at;  // copied through, never generated

  // Directory relative paths resolve against; not serialized.
  std::filesystem::path base_dir;

  static RunManifest FromJson(const Json& j);
  static RunManifest Load(const std::filesystem::path& path);
  Json ToJson() const;
  // Throws std::invalid_argument describing the first problem.
  void Validate() const;

  const TaskDefinition* FindTask(std::string_view name) const;
  std::filesystem::path Resolve(const std::string& p) const;
};

std::string_view ToString(TaskDomain d);
std::optional<TaskDomain> ParseTaskDomain(std::string_view s);

inline constexpr std::string_view kClassifierRater = "classifier";

struct LabelRecord {
  std::string rollout_ref;
  std::string rater_id;
  bool outcome = false;
  bool anomaly_flag = false;
  std::optional<std::vector<bool>> rubric_checks;
  std::string timestamp;

  Json ToJson() const;
  static LabelRecord FromJson(const Json& j);
  friend bool operator==(const LabelRecord&, const LabelRecord&) = default;
};

struct RolloutKey {
  std::string policy_id;
  std::string task;
  int trial = 0;
  std::uint64_t seed = 0;

  std::string Id() const;
  friend auto operator<=>(const RolloutKey&, const RolloutKey&) = default;
};

// Inverse of RolloutRecord::Id(). Throws std::invalid_argument.
RolloutKey ParseRolloutId(std::string_view id);

struct RolloutSummary {
  RolloutKey key;
  int steps_executed = 0;
  int frame_count = 0;
  Termination termination = Termination::kStepLimit;
  std::string error;
  std::string initial_frame_ref;

  std::string Id() const { return key.Id(); }
};

Json ToJson(const RolloutRecord& record);  // metadata and action log, no pixels

class RunStore {
 public:
  explicit RunStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path RunDir(const std::string& run_id) const;
  std::filesystem::path RolloutBase(const std::string& run_id, const RolloutKey& key) const;

  std::vector<std::string> ListRuns() const;
  bool HasRun(const std::string& run_id) const;

  // Writes manifest.json. Re-writing an identical manifest is a no-op; a
  // different manifest under an existing run id is an error.
  void CreateRun(const RunManifest& manifest);
  RunManifest LoadManifest(const std::string& run_id) const;

  // Persists video, initial frame and metadata. Returns the rollout id.
  std::string StoreRollout(const std::string& run_id, const RolloutRecord& record);
  std::vector<RolloutSummary> ListRollouts(const std::string& run_id) const;
  bool HasRollout(const std::string& run_id, const std::string& rollout_id) const;
  RolloutRecord LoadRollout(const std::string& run_id, const std::string& rollout_id) const;
  VideoClip LoadVideo(const std::string& run_id, const std::string& rollout_id) const;
  std::filesystem::path VideoPath(const std::string& run_id, const std::string& rollout_id) const;

  // One label per (rollout, rater); a resubmission replaces the old one.
  // A record without a timestamp keeps the stored one, or gets
  // `default_timestamp` when new. Returns false when nothing changed.
  bool SubmitLabel(const std::string& run_id, LabelRecord record,
                   const std::string& default_timestamp = {});
  std::vector<LabelRecord> LoadLabels(const std::string& run_id) const;

  void WriteChunkLabels(const std::string& run_id, const std::string& rollout_id,
                        std::span<const LabeledSpan> labels);
  std::optional<std::vector<LabeledSpan>> LoadChunkLabels(const std::string& run_id,
                                                          const std::string& rollout_id) const;

  void WriteRealResults(const std::string& run_id, std::span<const RealResult> results);
  std::vector<RealResult> LoadRealResults(const std::string& run_id) const;

  void WriteRunFile(const std::string& run_id, const std::string& name, std::string_view text);
  std::optional<std::string> ReadRunFile(const std::string& run_id, const std::string& name) const;

 private:
  void RequireRun(const std::string& run_id) const;

  std::filesystem::path root_;
  mutable std::mutex label_mu_;  // the single writer for labels.jsonl
};

}  // namespace wmeval

#endif  // WMEVAL_STORE_H_
