// Copyright 2026 The wmeval Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "test_util.h"
#include "wmeval/label_fusion.h"
#include "wmeval/mock_backends.h"
#include "wmeval/sandbox.h"

namespace wmeval {
namespace {

using L = ChunkLabel;

TEST(PlanChunks, Examples) {
  EXPECT_EQ(PlanChunks(32).spans, (std::vector<ChunkSpan>{{0, 32}}));
  EXPECT_EQ(PlanChunks(58).spans, (std::vector<ChunkSpan>{{0, 32}, {26, 58}}));
  EXPECT_EQ(PlanChunks(60).spans, (std::vector<ChunkSpan>{{0, 32}, {26, 58}, {28, 60}}));
  EXPECT_EQ(PlanChunks(5).spans, (std::vector<ChunkSpan>{{0, 5}}));
}

TEST(PlanChunks, MatchesStrideOracle) {
  for (int len = 1; len <= 500; ++len) {
    ASSERT_EQ(PlanChunks(len).spans, wmtest::PlanChunksOracle(len)) << "len " << len;
  }
}

TEST(PlanChunks, CoversEveryFrame) {
  for (int len = 1; len <= 300; ++len) {
    std::vector<int> seen(static_cast<std::size_t>(len), 0);
    for (const ChunkSpan& s : PlanChunks(len).spans) {
      ASSERT_LE(s.end, len);
      for (int i = s.start; i < s.end; ++i) seen[static_cast<std::size_t>(i)]++;
    }
    for (int c : seen) ASSERT_GT(c, 0);
  }
}

TEST(Fusion, SuccessBeforeAnomaly) {
  const RolloutOutcome o = FuseLabels(std::vector<L>{L::kDefault, L::kSuccess, L::kAnomaly});
  EXPECT_EQ(o.outcome, Outcome::kSuccess);
  EXPECT_EQ(o.cause, OutcomeCause::kSuccessFirst);
}

TEST(Fusion, AnomalyBeforeSuccess) {
  const RolloutOutcome o = FuseLabels(std::vector<L>{L::kDefault, L::kAnomaly, L::kSuccess});
  EXPECT_EQ(o.outcome, Outcome::kFailure);
  EXPECT_EQ(o.cause, OutcomeCause::kAnomalyFirst);
}

TEST(Fusion, NoSuccess) {
  const RolloutOutcome o = FuseLabels(std::vector<L>{L::kDefault, L::kDefault});
  EXPECT_EQ(o.outcome, Outcome::kFailure);
  EXPECT_EQ(o.cause, OutcomeCause::kNoSuccess);
  EXPECT_THROW(FuseLabels(std::vector<L>{}), std::invalid_argument);
}

TEST(Fusion, RandomSequencesFollowFirstDecisiveLabel) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 500; ++i) {
    std::vector<L> labels(1 + rng() % 12);
    for (L& l : labels) l = static_cast<L>(rng() % 3);
    const auto first = std::find_if(labels.begin(), labels.end(), [](L l) { return l != L::kDefault; });
    const RolloutOutcome o = FuseLabels(labels);
    EXPECT_EQ(o.success(), first != labels.end() && *first == L::kSuccess);
  }
}

TEST(ChunkFrames, PadsShortWindows) {
  std::vector<Frame> video;
  for (int i = 0; i < 5; ++i) {
    Frame f(2, 2);
    f.data[0] = static_cast<std::uint8_t>(i);
    video.push_back(f);
  }
  const auto frames = ChunkFrames(video, {0, 5});
  ASSERT_EQ(frames.size(), 32u);
  for (std::size_t i = 5; i < 32; ++i) EXPECT_EQ(frames[i], video[4]);
}

TEST(ClassifyRollout, SandboxOracleVideo) {
  // A needle carried onto the goal: the classifier reports SUCCESS.
  sandbox::SandboxState s;
  s.gripper = {0.2, 0.2};
  s.needle = {0.2, 0.2};
  s.goal = {0.8, 0.8};
  s.jaw = 0.0;
  s.grasped = true;
  std::vector<Frame> video;
  for (int i = 0; i <= 60; ++i) {
    s.gripper = {0.2 + 0.01 * i, 0.2 + 0.01 * i};
    s.needle = s.gripper;
    video.push_back(sandbox::Render(s));
  }
  HelloInfo h;
  h.role = Role::kClassifier;
  h.task_names = {"pick"};
  Session c = Session::InProcess(mock::MakeBackend(Role::kClassifier, {}), h);
  const Classification r = ClassifyRollout(video, c, "pick");
  ASSERT_TRUE(r.outcome.has_value());
  EXPECT_TRUE(r.outcome->success());
  EXPECT_EQ(r.labels.size(), PlanChunks(61).spans.size());
}

TEST(ClassifyRollout, ClassifierErrorLeavesUnlabeled) {
  HelloInfo h;
  h.role = Role::kClassifier;
  h.task_names = {"pick"};
  mock::MockConfig config;
  config.tasks = {"pick"};
  Session c = Session::InProcess(mock::MakeBackend(Role::kClassifier, config), h);
  const std::vector<Frame> video(40, Frame(64, 64));
  const Classification r = ClassifyRollout(video, c, "other");
  EXPECT_FALSE(r.outcome.has_value());
  EXPECT_FALSE(r.error.empty());
}

}  // namespace
}  // namespace wmeval
