// Copyright 2026 The wmeval Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "test_util.h"
#include "wmeval/report.h"
#include "wmeval/runner.h"
#include "wmeval/video_io.h"

namespace wmeval {
namespace {

std::vector<PairedEvaluation> SamplePairs() {
  return {{"a", "t1", 0.9, 0.7}, {"b", "t1", 0.5, 0.6}, {"c", "t1", 0.2, 0.1},
          {"a", "t2", 0.8, 0.3}, {"b", "t2", 0.4, 0.5}, {"c", "t2", 0.6, 0.2}};
}

TEST(Report, BuildMatchesDirectStatistics) {
  const auto pairs = SamplePairs();
  const CampaignReport r = BuildReport(pairs);
  ASSERT_EQ(r.per_task.size(), 2u);
  EXPECT_EQ(r.per_task[0].task, "t1");
  const std::vector<double> s1 = {0.9, 0.5, 0.2}, r1 = {0.7, 0.6, 0.1};
  const std::vector<double> s2 = {0.8, 0.4, 0.6}, r2 = {0.3, 0.5, 0.2};
  EXPECT_NEAR(r.per_task[0].pearson->r, wmtest::PearsonROracle(s1, r1), 1e-12);
  EXPECT_NEAR(*r.per_task[1].mmrv, wmtest::MmrvOracle(s2, r2), 1e-15);
  const double p1 = wmtest::PearsonROracle(s1, r1), p2 = wmtest::PearsonROracle(s2, r2);
  EXPECT_NEAR(r.avg_pearson->mean, (p1 + p2) / 2, 1e-12);
  EXPECT_NEAR(*r.avg_pearson->sd, std::fabs(p1 - p2) / std::sqrt(2.0), 1e-12);
  double diff = 0;
  for (const auto& p : pairs) diff += p.sim_sr - p.real_sr;
  EXPECT_NEAR(r.mbe->mbe, diff / 6, 1e-15);
  EXPECT_NEAR(r.bland_altman->mean_diff, diff / 6, 1e-15);
  EXPECT_TRUE(r.overall_pearson.has_value());

  const Json j = r.ToJson();
  EXPECT_EQ(j.at("per_task").size(), 2u);
  EXPECT_EQ(r.TasksCsv().substr(0, r.TasksCsv().find('\n')), "task,policies,pearson_r,pearson_p,mmrv");
  EXPECT_EQ(ParsePairsCsv(r.ScatterCsv()), pairs);
}

TEST(Report, DegenerateTasksAreNotedNotFatal) {
  const CampaignReport r = BuildReport({{"a", "t", 1.0, 0.2}, {"b", "t", 1.0, 0.4}});
  ASSERT_EQ(r.per_task.size(), 1u);
  EXPECT_FALSE(r.per_task[0].pearson.has_value());
  EXPECT_FALSE(r.per_task[0].note.empty());
  EXPECT_TRUE(r.per_task[0].mmrv.has_value());
  EXPECT_TRUE(r.ToJson().at("per_task")[0].at("pearson_r").is_null());
  EXPECT_THROW(BuildReport({{"a", "t", 1, 1}, {"a", "t", 0, 0}}), std::invalid_argument);
}

TEST(Report, PairsCsvErrors) {
  EXPECT_THROW(ParsePairsCsv("policy,task,sim_sr,real_sr\na,t,1.5,0\nb,t,x,0\n"), std::invalid_argument);
  try {
    ParsePairsCsv("policy,task,sim_sr,real_sr\na,t,1.5,0\nb,t,x,0\n");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  }
  EXPECT_THROW(ParsePairsCsv("a,b\n"), std::invalid_argument);
}

TEST(Report, Summarize) {
  const std::vector<double> v = {0.468, 0.716, 0.840, 0.806};
  const MeanSd m = Summarize(v);
  EXPECT_EQ(m.n, 4u);
  EXPECT_NEAR(m.mean, 0.7075, 1e-12);
  EXPECT_FALSE(Summarize(std::vector<double>{1.0}).sd.has_value());
}

LabelRecord Label(const std::string& id, const std::string& rater, bool ok) {
  return {id, rater, ok, false, std::nullopt, "t"};
}

TEST(SuccessRates, TabletopAveragesAndCholeMajority) {
  RunManifest m = wmtest::MockManifest("r", {12, 12}, 2, {{"p", "mock://policy"}});
  m.tasks[1].domain = TaskDomain::kChole;
  std::vector<LabelRecord> labels;
  // tabletop trial 1: 4 of 6 labels true; trial 2: none
  for (int seed = 1; seed <= 3; ++seed) {
    const std::string id1 = "p:task0:1:" + std::to_string(seed), id2 = "p:task0:2:" + std::to_string(seed);
    labels.push_back(Label(id1, "alice", seed != 3));
    labels.push_back(Label(id1, "bob", seed != 3));
    labels.push_back(Label(id2, "alice", false));
    labels.push_back(Label(id2, "bob", false));
  }
  // chole trial 1: 4/6 true -> success; trial 2: 3/6 true -> failure
  for (int seed = 1; seed <= 3; ++seed) {
    const std::string id1 = "p:task1:1:" + std::to_string(seed), id2 = "p:task1:2:" + std::to_string(seed);
    labels.push_back(Label(id1, "alice", seed != 3));
    labels.push_back(Label(id1, "bob", seed != 3));
    labels.push_back(Label(id2, "alice", seed == 1));
    labels.push_back(Label(id2, "bob", seed != 1));
  }
  labels.push_back(Label("p:task0:2:1", "classifier", true));
  const auto rates = SimSuccessRates(m, labels, {"alice", "bob"});
  EXPECT_NEAR(rates.at({"p", "task0"}), (4.0 / 6 + 0) / 2, 1e-15);
  EXPECT_EQ(rates.at({"p", "task1"}), 0.5);
  EXPECT_EQ(RatersIn(labels, false), (std::vector<std::string>{"alice", "bob"}));
  EXPECT_EQ(RatersIn(labels, true).size(), 3u);
}

TEST(SuccessRates, PairingListsUnmatched) {
  std::map<RateKey, double> sim = {{{"p", "a"}, 0.5}, {{"p", "b"}, 0.4}};
  std::map<RateKey, double> real = {{{"p", "a"}, 0.2}, {{"q", "a"}, 0.1}};
  std::vector<std::string> unmatched;
  const auto pairs = PairRates(sim, real, unmatched);
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs[0].sim_sr, 0.5);
  EXPECT_EQ(unmatched.size(), 2u);
  const std::vector<RealResult> rr = {{"p", "a", 1, true, ""}, {"p", "a", 2, false, ""}, {"p", "a", 3, true, ""}};
  EXPECT_NEAR(RealSuccessRates(rr).at({"p", "a"}), 2.0 / 3, 1e-15);
}

TEST(RaterAgreement, EqualsIccOnSameMatrix) {
  std::vector<LabelRecord> labels;
  std::vector<double> matrix;
  std::mt19937_64 rng(5);
  for (int i = 1; i <= 12; ++i) {
    const std::string id = "p:t:" + std::to_string(i) + ":1";
    const bool a = rng() % 2, b = rng() % 3 != 0 ? a : !a;
    labels.push_back(Label(id, "alice", a));
    labels.push_back(Label(id, "bob", b));
    matrix.push_back(a);
    matrix.push_back(b);
  }
  labels.push_back(Label("p:t:99:1", "alice", true));  // not labeled by bob
  const RaterAgreement ra = ComputeRaterAgreement(labels, {"alice", "bob"});
  EXPECT_EQ(ra.subjects, 12u);
  ASSERT_TRUE(ra.icc.has_value());
  EXPECT_NEAR(*ra.icc, stats::Icc21(stats::RatingMatrix(12, 2, matrix)), 1e-12);
}

TEST(ReportForRun, ClassifierFallbackAndFiles) {
  wmtest::TempDir dir;
  const RunManifest m = wmtest::MockManifest("r", {96}, 3, {{"precise", "mock://policy?script=precise"},
                                                           {"idle", "mock://policy?script=idle"}});
  ASSERT_EQ(ExecuteRun(m, dir.path()).failed, 0u);
  RunStore store(dir.path());
  const ClassifySummary cs = ClassifyRun(store, "r");
  EXPECT_EQ(cs.labeled, 18u);
  EXPECT_TRUE(cs.unlabeled.empty());
  // A second pass is served entirely from the chunk-label cache.
  EXPECT_EQ(ClassifyRun(store, "r").cached, 18u);

  WritePng(dir / "f.png", Frame(64, 64));
  std::vector<RealResult> real;
  for (int t = 1; t <= 3; ++t) {
    real.push_back({"precise", "task0", t, true, (dir / "f.png").string()});
    real.push_back({"idle", "task0", t, t == 1, (dir / "f.png").string()});
  }
  store.WriteRealResults("r", real);
  const CampaignReport rep = ReportForRun(store, "r");
  EXPECT_EQ(rep.sim_raters, std::vector<std::string>{"classifier"});
  ASSERT_EQ(rep.pairs.size(), 2u);
  for (const auto& p : rep.pairs) {
    if (p.policy_id == "precise") EXPECT_EQ(p.sim_sr, 1.0);
    if (p.policy_id == "idle") EXPECT_EQ(p.sim_sr, 0.0);
  }
  WriteReport(store, "r", rep);
  EXPECT_TRUE(store.ReadRunFile("r", "report.json").has_value());
  EXPECT_TRUE(store.ReadRunFile("r", "scatter.csv").has_value());
  EXPECT_TRUE(store.ReadRunFile("r", "report_tasks.csv").has_value());

  const Json agreement = AgreementJson(store, "r", {});
  EXPECT_EQ(agreement.at("run_id"), "r");
  // Only human raters by default; the classifier appears when asked for.
  EXPECT_TRUE(agreement.at("per_rater").empty());
  const Json with_classifier = AgreementJson(store, "r", {"classifier"});
  ASSERT_EQ(with_classifier.at("per_rater").size(), 1u);
  EXPECT_EQ(with_classifier["per_rater"][0].at("labels"), 18);
}

}  // namespace
}  // namespace wmeval
