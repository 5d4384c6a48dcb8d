// Copyright 2026 The wmeval Authors
// SPDX-License-Identifier: Apache-2.0

// Sim-vs-real comparison of a campaign: success rates per policy and task,
// agreement and bias statistics over them, and rater agreement.

#ifndef WMEVAL_REPORT_H_
#define WMEVAL_REPORT_H_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wmeval/protocol.h"
#include "wmeval/stats.h"
#include "wmeval/store.h"

namespace wmeval {

struct PairedEvaluation {
  std::string policy_id;
  std::string task;
  double sim_sr = 0.0;
  double real_sr = 0.0;

  friend bool operator==(const PairedEvaluation&, const PairedEvaluation&) = default;
};

// "policy,task,sim_sr,real_sr"
std::string PairsCsv(std::span<const PairedEvaluation> pairs);
std::vector<PairedEvaluation> ParsePairsCsv(std::string_view text);

struct TaskAgreement {
  std::string task;
  std::size_t policies = 0;
  std::optional<stats::Correlation> pearson;
  std::optional<double> mmrv;
  std::string note;  // why a statistic is missing
};

struct MeanSd {
  std::size_t n = 0;
  double mean = 0.0;
  std::optional<double> sd;  // needs n >= 2
};

// Mean and sample sd of per-task values.
MeanSd Summarize(std::span<const double> values);

struct RaterAgreement {
  std::vector<std::string> raters;
  std::size_t subjects = 0;  // rollouts labeled by every rater
  std::optional<double> icc;
  std::string note;
};

struct CampaignReport {
  std::vector<PairedEvaluation> pairs;
  std::vector<TaskAgreement> per_task;
  std::optional<MeanSd> avg_pearson;
  std::optional<MeanSd> avg_mmrv;
  std::optional<stats::Correlation> overall_pearson;
  std::optional<stats::BiasEstimate> mbe;
  std::optional<stats::LimitsOfAgreement> bland_altman;
  std::optional<RaterAgreement> raters;
  std::vector<std::string> sim_raters;  // whose labels made the sim rates
  std::vector<std::string> unmatched;   // pairs present on one side only
  std::vector<std::string> notes;

  Json ToJson() const;
  std::string TasksCsv() const;    // task,policies,pearson_r,pearson_p,mmrv
  std::string ScatterCsv() const;  // policy,task,sim_sr,real_sr
};

// Computes every statistic that the pairs support. Task order follows the
// first appearance in `pairs`.
CampaignReport BuildReport(std::vector<PairedEvaluation> pairs);

using RateKey = std::pair<std::string, std::string>;  // (policy, task)

// Per trial, the labels of `raters` over all seeds. Tabletop tasks average
// every label; chole tasks take a strict majority per trial first.
std::map<RateKey, double> SimSuccessRates(const RunManifest& manifest, std::span<const LabelRecord> labels,
                                          const std::vector<std::string>& raters);
std::map<RateKey, double> RealSuccessRates(std::span<const RealResult> results);

// Pairs matching keys; keys present on one side only go to `unmatched`.
std::vector<PairedEvaluation> PairRates(const std::map<RateKey, double>& sim,
                                        const std::map<RateKey, double>& real,
                                        std::vector<std::string>& unmatched);

// ICC(2,1) over the rollouts every listed rater has labeled.
RaterAgreement ComputeRaterAgreement(std::span<const LabelRecord> labels, const std::vector<std::string>& raters);

// Raters with at least one label, classifier excluded unless asked for.
std::vector<std::string> RatersIn(std::span<const LabelRecord> labels, bool include_classifier);

struct ReportOptions {
  // Raters whose labels define the sim success rate. Empty: every human
  // rater, or the classifier if there are none.
  std::vector<std::string> sim_raters;
  // Raters compared by ICC. Empty: every rater with labels.
  std::vector<std::string> icc_raters;
};

CampaignReport ReportForRun(const RunStore& store, const std::string& run_id, const ReportOptions& options = {});

// Writes report.json, report_tasks.csv and scatter.csv into the run.
void WriteReport(RunStore& store, const std::string& run_id, const CampaignReport& report);

// Live rater view: ICC, per-rater success rates and, for chole tasks, the
// per-trial majority vote.
Json AgreementJson(const RunStore& store, const std::string& run_id, const std::vector<std::string>& raters);

}  // namespace wmeval

#endif  // WMEVAL_REPORT_H_
