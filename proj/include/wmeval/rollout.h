// Copyright 2026 The wmeval Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef WMEVAL_ROLLOUT_H_
#define WMEVAL_ROLLOUT_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wmeval/protocol.h"
#include "wmeval/session.h"

namespace wmeval {

enum class TaskDomain { kTabletop, kChole };

struct TaskDefinition {
  std::string name;
  int step_limit = 750;  // in 10 Hz actions
  std::vector<std::string> rubric;
  TaskDomain domain = TaskDomain::kTabletop;
};

struct TrialSpec {
  TaskDefinition task;
  int trial_index = 0;
  std::shared_ptr<const Frame> initial_frame;
  std::string initial_frame_ref;  // path or generator tag, for provenance
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::string policy_id;

  // Throws std::invalid_argument on empty/duplicate seeds or a missing frame.
  void Validate() const;
};

struct VideoClip {
  std::vector<Frame> frames;
  int rate_hz = protocol::kModelRateHz;

  std::size_t size() const { return frames.size(); }
  bool empty() const { return frames.empty(); }
  // Throws std::invalid_argument when frame sizes differ.
  void Validate() const;

  friend bool operator==(const VideoClip&, const VideoClip&) = default;
};

struct IterationLog {
  ActionChunk raw;        // as emitted by the policy
  ActionChunk resampled;  // 10 Hz, truncated/padded to the horizon

  friend bool operator==(const IterationLog&, const IterationLog&) = default;
};

enum class Termination { kStepLimit, kBackendError, kTimeout };

std::string_view ToString(Termination t);
std::optional<Termination> ParseTermination(std::string_view s);

struct RolloutRecord {
  std::string policy_id;
  std::string task;
  int trial_index = 0;
  std::uint64_t seed = 0;
  std::shared_ptr<const Frame> initial_frame;
  std::string initial_frame_ref;
  VideoClip video;
  std::vector<IterationLog> action_log;
  int steps_executed = 0;
  Termination termination = Termination::kStepLimit;
  std::string error;  // empty unless the rollout aborted

  // "<policy>:<task>:<trial>:<seed>"
  std::string Id() const;
};

struct RolloutConfig {
  int horizon = protocol::kDefaultHorizon;  // K
  int target_hz = protocol::kModelRateHz;
};

// Composes every source action whose timestamp falls into the same
// 1/target_hz bin: translations add, rotations multiply in order, the jaw
// keeps the last absolute value. Throws std::invalid_argument on an empty
// chunk or a source rate below the target.
ActionChunk ResampleChunk(const ActionChunk& chunk, int target_hz = protocol::kModelRateHz);

// First `horizon` actions; short chunks are padded by repeating the last one.
ActionChunk TruncateToHorizon(const ActionChunk& chunk, int horizon = protocol::kDefaultHorizon);

// Number of world-model calls a rollout makes for a given step limit.
int IterationsFor(int step_limit, int horizon);

// Runs the policy / world-model loop for one trial and seed. Backend
// failures end the rollout early; the partial video is kept.
RolloutRecord RunRollout(const TrialSpec& spec, std::uint64_t seed, Session& policy,
                         Session& world_model, const RolloutConfig& config = {});

// Opens a fresh session for `role` on behalf of a rollout of `spec`.
using SessionOpener = std::function<Session(const TrialSpec& spec, Role role)>;

// Runs every spec x seed on a pool of `parallelism` workers. The result
// order is the input order expanded by seeds, independent of which worker
// finished first.
std::vector<RolloutRecord> RunCampaign(const std::vector<TrialSpec>& specs, int parallelism,
                                       const SessionOpener& open, const RolloutConfig& config = {});

// Receives each finished record with its position in the canonical order.
// Called from worker threads, possibly concurrently.
using RecordSink = std::function<void(std::size_t index, RolloutRecord&& record)>;

// Streaming form of RunCampaign for campaigns too large to hold in memory.
void RunCampaign(const std::vector<TrialSpec>& specs, int parallelism, const SessionOpener& open,
                 const RecordSink& sink, const RolloutConfig& config = {});

// ---- real-robot outcomes ----

struct RealResult {
  std::string policy_id;
  std::string task;
  int trial = 0;
  bool success = false;
  std::string initial_frame_path;
};

class IngestError : public std::runtime_error {
 public:
  IngestError(const std::string& what, std::vector<std::string> problems)
      : std::runtime_error(what), problems_(std::move(problems)) {}
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

// Reads `policy_id,task,trial,outcome,initial_frame_path`. Relative frame
// paths resolve against the CSV's directory; every referenced frame must
// exist. All bad rows are reported together.
std::vector<RealResult> IngestRealResults(const std::string& csv_path);

}  // namespace wmeval

#endif  // WMEVAL_ROLLOUT_H_
