// Copyright 2026 The wmeval Authors
// SPDX-License-Identifier: Apache-2.0

#include "wmeval/rollout.h"

#include <algorithm>
#include <atomic>
#include <set>
#include <thread>

namespace wmeval {
namespace {

constexpr std::array<std::string_view, 3> kTerminationNames = {"STEP_LIMIT", "BACKEND_ERROR",
                                                               "TIMEOUT"};

// Folds `next` into `acc` arm by arm.
void Compose(Action& acc, const Action& next) {
  for (int i = 0; i < acc.arm_count; ++i) {
    ArmCommand& a = acc.arm(i);
    const ArmCommand& b = next.arm(i);
    a.translation += b.translation;
    a.rotation = (a.rotation * b.rotation).Normalized();
    a.jaw = b.jaw;
  }
}

}  // namespace

void TrialSpec::Validate() const {
  if (task.step_limit <= 0) throw std::invalid_argument("step_limit must be positive");
  if (!initial_frame) throw std::invalid_argument("trial has no initial frame");
  if (seeds.empty()) throw std::invalid_argument("trial needs at least one seed");
  if (std::set(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw std::invalid_argument("trial seeds must be distinct");
  }
}

void VideoClip::Validate() const {
  for (const Frame& f : frames) {
    if (!f.SameSize(frames.front())) throw std::invalid_argument("video frames differ in size");
  }
}

std::string_view ToString(Termination t) { return kTerminationNames[static_cast<std::size_t>(t)]; }

std::optional<Termination> ParseTermination(std::string_view s) {
  for (std::size_t i = 0; i < kTerminationNames.size(); ++i) {
    if (kTerminationNames[i] == s) return static_cast<Termination>(i);
  }
  return std::nullopt;
}

std::string RolloutRecord::Id() const {
  return policy_id + ":" + task + ":" + std::to_string(trial_index) + ":" + std::to_string(seed);
}

ActionChunk ResampleChunk(const ActionChunk& chunk, int target_hz) {
  if (chunk.actions.empty()) throw std::invalid_argument("cannot resample an empty chunk");
  if (target_hz <= 0 || chunk.rate_hz < target_hz) {
    throw std::invalid_argument("cannot resample " + std::to_string(chunk.rate_hz) + " Hz to " +
                                std::to_string(target_hz) + " Hz");
  }
  ActionChunk out;
  out.rate_hz = target_hz;
  std::int64_t current_bin = -1;
  for (std::size_t i = 0; i < chunk.actions.size(); ++i) {
    // Sample i is at i / rate seconds; its bin is floor(i * target / rate).
    const std::int64_t bin = static_cast<std::int64_t>(i) * target_hz / chunk.rate_hz;
    if (bin != current_bin) {
      out.actions.push_back(chunk.actions[i]);
      current_bin = bin;
    } else {
      Compose(out.actions.back(), chunk.actions[i]);
    }
  }
  return out;
}

ActionChunk TruncateToHorizon(const ActionChunk& chunk, int horizon) {
  if (chunk.actions.empty() || horizon <= 0) throw std::invalid_argument("empty chunk or horizon");
  ActionChunk out;
  out.rate_hz = chunk.rate_hz;
  const auto h = static_cast<std::size_t>(horizon);
  const std::size_t keep = std::min(h, chunk.actions.size());
  out.actions.assign(chunk.actions.begin(), chunk.actions.begin() + static_cast<std::ptrdiff_t>(keep));
  out.actions.resize(h, chunk.actions.back());
  return out;
}

int IterationsFor(int step_limit, int horizon) { return (step_limit + horizon - 1) / horizon; }

RolloutRecord RunRollout(const TrialSpec& spec, std::uint64_t seed, Session& policy,
                         Session& world_model, const RolloutConfig& config) {
  RolloutRecord rec;
  rec.policy_id = spec.policy_id;
  rec.task = spec.task.name;
  rec.trial_index = spec.trial_index;
  rec.seed = seed;
  rec.initial_frame = spec.initial_frame;
  rec.initial_frame_ref = spec.initial_frame_ref;
  rec.video.rate_hz = config.target_hz;

  const int limit = spec.task.step_limit;
  rec.video.frames.reserve(static_cast<std::size_t>(limit));
  const Frame* state = spec.initial_frame.get();
  try {
    while (rec.steps_executed < limit) {
      IterationLog log;
      log.raw = RequestActions(policy, *state, spec.task.name);
      try {
        log.resampled = TruncateToHorizon(ResampleChunk(log.raw, config.target_hz), config.horizon);
      } catch (const std::invalid_argument& e) {
        throw ProtocolError(std::string("unusable policy chunk: ") + e.what());
      }
      std::vector<Frame> frames = RequestFrames(world_model, *state, log.resampled, seed);
      rec.action_log.push_back(std::move(log));

      const int keep = std::min(config.horizon, limit - rec.steps_executed);
      frames.resize(static_cast<std::size_t>(keep));
      for (Frame& f : frames) rec.video.frames.push_back(std::move(f));
      rec.steps_executed += keep;
      state = &rec.video.frames.back();
    }
    rec.termination = Termination::kStepLimit;
  } catch (const TimeoutError& e) {
    rec.termination = Termination::kTimeout;
    rec.error = e.what();
  } catch (const std::exception& e) {
    rec.termination = Termination::kBackendError;
    rec.error = e.what();
  }
  return rec;
}

void RunCampaign(const std::vector<TrialSpec>& specs, int parallelism, const SessionOpener& open,
                 const RecordSink& sink, const RolloutConfig& config) {
  struct Unit {
    const TrialSpec* spec;
    std::uint64_t seed;
  };
  std::vector<Unit> units;
  for (const TrialSpec& spec : specs) {
    spec.Validate();
    for (std::uint64_t seed : spec.seeds) units.push_back({&spec, seed});
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < units.size(); i = next.fetch_add(1)) {
      const Unit& u = units[i];
      RolloutRecord rec;
      try {
        Session policy = open(*u.spec, Role::kPolicy);
        Session world_model = open(*u.spec, Role::kWorldModel);
        rec = RunRollout(*u.spec, u.seed, policy, world_model, config);
      } catch (const std::exception& e) {
        rec.policy_id = u.spec->policy_id;
        rec.task = u.spec->task.name;
        rec.trial_index = u.spec->trial_index;
        rec.seed = u.seed;
        rec.initial_frame = u.spec->initial_frame;
        rec.initial_frame_ref = u.spec->initial_frame_ref;
        rec.termination = dynamic_cast<const TimeoutError*>(&e) ? Termination::kTimeout
                                                                : Termination::kBackendError;
        rec.error = e.what();
      }
      sink(i, std::move(rec));
    }
  };

  const std::size_t threads = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(parallelism, 1)),
                                                      1, std::max<std::size_t>(units.size(), 1));
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
}

std::vector<RolloutRecord> RunCampaign(const std::vector<TrialSpec>& specs, int parallelism,
                                       const SessionOpener& open, const RolloutConfig& config) {
  std::size_t total = 0;
  for (const TrialSpec& spec : specs) total += spec.seeds.size();
  std::vector<RolloutRecord> results(total);
  // Each index is written by exactly one worker.
  RunCampaign(
      specs, parallelism, open, [&](std::size_t i, RolloutRecord&& rec) { results[i] = std::move(rec); },
      config);
  return results;
}

}  // namespace wmeval
