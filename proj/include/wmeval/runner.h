// Copyright 2026 The wmeval Authors
// SPDX-License-Identifier: Apache-2.0

// Glue between a run manifest, the backends it names and the run store.

#ifndef WMEVAL_RUNNER_H_
#define WMEVAL_RUNNER_H_

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "wmeval/rollout.h"
#include "wmeval/store.h"

namespace wmeval {

// One spec per policy x task x trial (trials numbered from 1). Initial
// frames come from the manifest's real-results CSV when it names one,
// otherwise from a rendered sandbox scene.
std::vector<TrialSpec> BuildTrialSpecs(const RunManifest& manifest);

struct RunSummary {
  std::size_t rollouts = 0;
  std::size_t failed = 0;  // termination other than STEP_LIMIT
  std::vector<std::string> errors;
};

// Runs the whole campaign and stores every rollout as it finishes.
// `store_root` overrides the manifest's output_dir when non-empty.
RunSummary ExecuteRun(const RunManifest& manifest, const std::filesystem::path& store_root = {},
                      std::ostream* log = nullptr);

struct ClassifySummary {
  std::size_t labeled = 0;
  std::size_t cached = 0;  // served from the chunk-label cache
  std::vector<std::string> unlabeled;  // "<rollout id>: <error>"
};

// Classifies every rollout of a run and records the fused outcome as a
// label from rater "classifier". `endpoint` overrides the manifest's.
ClassifySummary ClassifyRun(RunStore& store, const std::string& run_id,
                            const std::optional<std::string>& endpoint = std::nullopt,
                            int parallelism = 1, std::ostream* log = nullptr);

}  // namespace wmeval

#endif  // WMEVAL_RUNNER_H_
