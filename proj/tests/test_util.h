// Copyright 2026 The wmeval Authors
// SPDX-License-Identifier: Apache-2.0

// Shared fixtures and reference implementations for the tests and the
// acceptance binary. The reference implementations are written from the
// definitions, deliberately without reusing library code.

#ifndef WMEVAL_TESTS_TEST_UTIL_H_
#define WMEVAL_TESTS_TEST_UTIL_H_

#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "wmeval/label_fusion.h"
#include "wmeval/pose.h"
#include "wmeval/protocol.h"
#include "wmeval/report.h"
#include "wmeval/store.h"

namespace wmtest {

using wmeval::ActionChunk;
using wmeval::Frame;

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& p) const { return path_ / p; }

 private:
  std::filesystem::path path_;
};

Frame RandomFrame(std::mt19937_64& rng, int w, int h);
wmeval::Envelope RandomEnvelope(std::mt19937_64& rng);
wmeval::Quat RandomUnitQuat(std::mt19937_64& rng);
ActionChunk RandomChunk(std::mt19937_64& rng, int rate_hz, int n, int arm_count = 1);

// Net pose of a chunk applied action by action to the identity pose.
struct NetPose {
  wmeval::Vec3 translation;
  wmeval::Quat rotation;
};
NetPose IntegrateChunk(const ActionChunk& chunk, int arm = 0);

std::vector<wmeval::ChunkSpan> PlanChunksOracle(int len, int chunk = 32, int overlap = 6);

double MmrvOracle(const std::vector<double>& sim, const std::vector<double>& real);
// rows are subjects, columns raters
double IccOracle(const std::vector<std::vector<double>>& m);
double PearsonROracle(const std::vector<double>& x, const std::vector<double>& y);
double L1Oracle(const Frame& a, const Frame& b);
double SsimOracle(const Frame& a, const Frame& b);

// Every regular file below `root`, keyed by relative path.
std::map<std::string, std::string> ReadTree(const std::filesystem::path& root);

// A sandbox campaign with mock endpoints. `step_limits` gives one task
// per entry, named task0, task1, ...
wmeval::RunManifest MockManifest(const std::string& run_id, const std::vector<int>& step_limits,
                                 int trials, const std::vector<wmeval::PolicyEntry>& policies,
                                 const std::string& world_query = "");

struct BiasExperiment {
  int tasks = 4;
  int trials = 20;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  int step_limit = 144;
  double false_attach_prob = 0.3;
  double near_offset = 0.08;
  double wide_offset = 0.3;
  int parallelism = 1;
};

struct BiasResult {
  wmeval::CampaignReport report;
  double analytic_mbe = 0.0;
  std::size_t near_miss_rollouts = 0;
  std::map<std::string, double> sim_rate;   // by policy, averaged over tasks
  std::map<std::string, double> real_rate;  // by policy, averaged over tasks
};

// Runs the scripted policies against a "real" sandbox (no false attach)
// and a "sim" sandbox that attaches falsely, classifies both with the
// oracle classifier and compares the success rates.
BiasResult RunBiasExperiment(const BiasExperiment& config, const std::filesystem::path& store_root);

}  // namespace wmtest

#endif  // WMEVAL_TESTS_TEST_UTIL_H_
