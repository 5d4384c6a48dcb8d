// Copyright 2026 The wmeval Authors
// SPDX-License-Identifier: Apache-2.0

#include "wmeval/runner.h"

#include <atomic>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>

#include "wmeval/label_fusion.h"
#include "wmeval/mock_backends.h"
#include "wmeval/sandbox.h"
#include "wmeval/video_io.h"

namespace wmeval {
namespace fs = std::filesystem;
namespace {

std::shared_ptr<const Frame> LoadFrame(const fs::path& path) {
  if (path.extension() == ".vframes") {
    VideoClip clip = ReadVframes(path);
    if (clip.empty()) throw std::invalid_argument(path.string() + " holds no frames");
    return std::make_shared<const Frame>(std::move(clip.frames.front()));
  }
  return std::make_shared<const Frame>(ReadPng(path));
}

HelloInfo MakeHelloFor(const RunManifest& m, Role role, const Frame* frame) {
  HelloInfo h;
  h.role = role;
  h.protocol_version = protocol::kVersion;
  for (const TaskDefinition& t : m.tasks) h.task_names.push_back(t.name);
  h.arm_count = m.arm_count;
  if (frame) {
    h.frame_width = frame->width;
    h.frame_height = frame->height;
  }
  return h;
}

SessionOptions OptionsFor(const RunManifest& m) {
  return {std::chrono::milliseconds(static_cast<long>(m.timeout_seconds * 1000))};
}

}  // namespace

std::vector<TrialSpec> BuildTrialSpecs(const RunManifest& m) {
  std::map<std::tuple<std::string, std::string, int>, std::string> frames;
  if (!m.initial_frames.empty()) {
    for (RealResult& r : IngestRealResults(m.Resolve(m.initial_frames).string())) {
      frames[{r.policy_id, r.task, r.trial}] = std::move(r.initial_frame_path);
    }
  }
  std::map<std::string, std::shared_ptr<const Frame>> loaded;
  std::vector<std::string> missing;
  std::vector<TrialSpec> specs;
  for (const PolicyEntry& p : m.policies) {
    for (const TaskDefinition& task : m.tasks) {
      for (int trial = 1; trial <= m.trials_per_task; ++trial) {
        TrialSpec spec;
        spec.task = task;
        spec.trial_index = trial;
        spec.seeds = m.seeds;
        spec.policy_id = p.id;
        if (m.initial_frames.empty()) {
          spec.initial_frame = std::make_shared<const Frame>(sandbox::Render(sandbox::MakeScene(task.name, trial)));
          spec.initial_frame_ref = "sandbox:" + task.name + ":" + std::to_string(trial);
        } else {
          const auto it = frames.find({p.id, task.name, trial});
          if (it == frames.end()) {
            missing.push_back(p.id + "/" + task.name + "/" + std::to_string(trial));
            continue;
          }
          auto& frame = loaded[it->second];
          if (!frame) frame = LoadFrame(it->second);
          spec.initial_frame = frame;
          spec.initial_frame_ref = it->second;
        }
        specs.push_back(std::move(spec));
      }
    }
  }
  if (!missing.empty()) {
    std::string msg = "initial_frames has no row for";
    for (const std::string& s : missing) msg += " " + s;
    throw std::invalid_argument(msg);
  }
  return specs;
}

RunSummary ExecuteRun(const RunManifest& manifest, const fs::path& store_root, std::ostream* log) {
  manifest.Validate();
  RunStore store(store_root.empty() ? manifest.Resolve(manifest.output_dir) : store_root);
  store.CreateRun(manifest);
  const std::vector<TrialSpec> specs = BuildTrialSpecs(manifest);

  std::map<std::string, mock::Endpoint> policies;
  for (const PolicyEntry& p : manifest.policies) policies[p.id] = mock::ParseEndpoint(p.endpoint);
  const mock::Endpoint world = mock::ParseEndpoint(manifest.world_model);
  const SessionOptions options = OptionsFor(manifest);

  const SessionOpener open = [&](const TrialSpec& spec, Role role) {
    const mock::Endpoint& ep = role == Role::kPolicy ? policies.at(spec.policy_id) : world;
    return mock::OpenEndpoint(ep, MakeHelloFor(manifest, role, spec.initial_frame.get()), options);
  };

  std::size_t total = 0;
  for (const TrialSpec& s : specs) total += s.seeds.size();
  RunSummary summary;
  std::mutex mu;
  RolloutConfig config;
  config.horizon = manifest.horizon;
  RunCampaign(
      specs, manifest.parallelism, open,
      [&](std::size_t, RolloutRecord&& rec) {
        std::string store_error;
        try {
          store.StoreRollout(manifest.run_id, rec);
        } catch (const std::exception& e) {
          store_error = e.what();
        }
        std::lock_guard lock(mu);
        ++summary.rollouts;
        if (rec.termination != Termination::kStepLimit) {
          ++summary.failed;
          summary.errors.push_back(rec.Id() + ": " + rec.error);
        }
        if (!store_error.empty()) summary.errors.push_back(store_error);
        if (log) {
          *log << "[" << summary.rollouts << "/" << total << "] " << rec.Id() << " " << ToString(rec.termination)
               << " steps=" << rec.steps_executed << (rec.error.empty() ? "" : " error=" + rec.error) << "\n";
        }
      },
      config);
  std::sort(summary.errors.begin(), summary.errors.end());
  return summary;
}

ClassifySummary ClassifyRun(RunStore& store, const std::string& run_id,
                            const std::optional<std::string>& endpoint, int parallelism, std::ostream* log) {
  const RunManifest manifest = store.LoadManifest(run_id);
  const std::optional<std::string> target = endpoint ? endpoint : manifest.classifier;
  if (!target) throw std::invalid_argument("run " + run_id + " names no classifier endpoint");
  const mock::Endpoint ep = mock::ParseEndpoint(*target);
  const std::vector<RolloutSummary> rollouts = store.ListRollouts(run_id);

  ClassifySummary summary;
  Json status = Json::object();
  std::mutex mu;
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    std::optional<Session> session;
    for (std::size_t i = next.fetch_add(1); i < rollouts.size(); i = next.fetch_add(1)) {
      const RolloutSummary& r = rollouts[i];
      const std::string id = r.Id();
      std::optional<RolloutOutcome> outcome;
      std::string error;
      bool from_cache = false;
      try {
        const VideoClip video = store.LoadVideo(run_id, id);
        if (video.empty()) throw std::runtime_error("rollout has no frames");
        const ChunkPlan plan = PlanChunks(static_cast<int>(video.size()));
        const auto cached = store.LoadChunkLabels(run_id, id);
        bool hit = cached && cached->size() == plan.spans.size();
        for (std::size_t k = 0; hit && k < plan.spans.size(); ++k) hit = (*cached)[k].span == plan.spans[k];
        std::vector<LabeledSpan> labels;
        if (hit) {
          labels = *cached;
          from_cache = true;
        } else {
          if (!session) session.emplace(mock::OpenEndpoint(
                            ep, MakeHelloFor(manifest, Role::kClassifier, &video.frames.front()),
                            OptionsFor(manifest)));
          Classification c = ClassifyRollout(video.frames, *session, r.key.task);
          if (!c.outcome) {
            session.reset();  // the connection may be unusable after an error
            throw std::runtime_error(c.error);
          }
          labels = std::move(c.labels);
          store.WriteChunkLabels(run_id, id, labels);
        }
        std::vector<ChunkLabel> plain;
        for (const LabeledSpan& l : labels) plain.push_back(l.label);
        outcome = FuseLabels(plain);
        LabelRecord label;
        label.rollout_ref = id;
        label.rater_id = std::string(kClassifierRater);
        label.outcome = outcome->success();
        label.anomaly_flag = outcome->cause == OutcomeCause::kAnomalyFirst;
        label.timestamp = manifest.created_at;
        store.SubmitLabel(run_id, label);
      } catch (const std::exception& e) {
        outcome.reset();
        error = e.what();
        session.reset();
      }

      std::lock_guard lock(mu);
      if (outcome) {
        ++summary.labeled;
        if (from_cache) ++summary.cached;
        status[id] = {{"status", "LABELED"},
                      {"outcome", ToString(outcome->outcome)},
                      {"cause", ToString(outcome->cause)}};
      } else {
        summary.unlabeled.push_back(id + ": " + error);
        status[id] = {{"status", "UNLABELED"}, {"error", error}};
      }
      if (log) *log << id << " " << (outcome ? ToString(outcome->outcome) : "UNLABELED") << "\n";
    }
  };
  {
    std::vector<std::jthread> pool;
    const int threads = std::max(1, std::min<int>(parallelism, static_cast<int>(rollouts.size())));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  std::sort(summary.unlabeled.begin(), summary.unlabeled.end());
  store.WriteRunFile(run_id, "classification.json", status.dump(1) + "\n");
  return summary;
}

}  // namespace wmeval
