// Copyright 2026 The wmeval Authors
// SPDX-License-Identifier: Apache-2.0

#include "wmeval/report.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "wmeval/csv.h"

namespace wmeval {
namespace {

Json Num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

template <typename T>
Json Opt(const std::optional<T>& v) {
  return v ? Num(*v) : Json(nullptr);
}

std::string Fmt(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

Json MeanSdJson(const MeanSd& m) { return {{"n", m.n}, {"mean", Num(m.mean)}, {"sd", Opt(m.sd)}}; }

// Task name -> domain, tabletop when the task is not in the manifest.
TaskDomain DomainOf(const RunManifest& m, const std::string& task) {
  const TaskDefinition* t = m.FindTask(task);
  return t ? t->domain : TaskDomain::kTabletop;
}

}  // namespace

std::string PairsCsv(std::span<const PairedEvaluation> pairs) {
  std::string out = "policy,task,sim_sr,real_sr\n";
  for (const PairedEvaluation& p : pairs) {
    out += CsvCell(p.policy_id) + "," + CsvCell(p.task) + "," + Fmt(p.sim_sr) + "," + Fmt(p.real_sr) + "\n";
  }
  return out;
}

std::vector<PairedEvaluation> ParsePairsCsv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) ||
      SplitCsvLine(TrimLineEnd(line)) != std::vector<std::string>{"policy", "task", "sim_sr", "real_sr"}) {
    throw std::invalid_argument("pairs CSV header must be policy,task,sim_sr,real_sr");
  }
  std::vector<PairedEvaluation> pairs;
  std::vector<std::string> problems;
  for (int n = 2; std::getline(in, line); ++n) {
    line = TrimLineEnd(line);
    if (line.empty()) continue;
    const auto cells = SplitCsvLine(line);
    try {
      if (cells.size() != 4) throw std::invalid_argument("expected 4 columns");
      PairedEvaluation p{cells[0], cells[1], 0.0, 0.0};
      std::size_t used = 0;
      p.sim_sr = std::stod(cells[2], &used);
      if (used != cells[2].size()) throw std::invalid_argument("bad sim_sr");
      p.real_sr = std::stod(cells[3], &used);
      if (used != cells[3].size()) throw std::invalid_argument("bad real_sr");
      if (!(p.sim_sr >= 0 && p.sim_sr <= 1 && p.real_sr >= 0 && p.real_sr <= 1)) {
        throw std::invalid_argument("rates must lie in [0, 1]");
      }
      pairs.push_back(std::move(p));
    } catch (const std::exception& e) {
      problems.push_back("line " + std::to_string(n) + ": " + e.what());
    }
  }
  if (!problems.empty()) {
    std::string msg = "pairs CSV:";
    for (const std::string& p : problems) msg += " " + p + ";";
    throw std::invalid_argument(msg);
  }
  return pairs;
}

MeanSd Summarize(std::span<const double> values) {
  MeanSd m;
  m.n = values.size();
  if (values.empty()) return m;
  m.mean = stats::Mean(values);
  if (values.size() >= 2) m.sd = stats::SampleSd(values);
  return m;
}

CampaignReport BuildReport(std::vector<PairedEvaluation> pairs) {
  std::set<RateKey> seen;
  std::vector<std::string> tasks;
  for (const PairedEvaluation& p : pairs) {
    if (!seen.insert({p.policy_id, p.task}).second) {
      throw std::invalid_argument("duplicate pair " + p.policy_id + "/" + p.task);
    }
    if (std::find(tasks.begin(), tasks.end(), p.task) == tasks.end()) tasks.push_back(p.task);
  }

  CampaignReport r;
  r.pairs = std::move(pairs);
  std::vector<double> task_r, task_mmrv;
  for (const std::string& task : tasks) {
    TaskAgreement t;
    t.task = task;
    std::vector<double> sim, real;
    for (const PairedEvaluation& p : r.pairs) {
      if (p.task != task) continue;
      sim.push_back(p.sim_sr);
      real.push_back(p.real_sr);
    }
    t.policies = sim.size();
    try {
      t.pearson = stats::Pearson(sim, real);
      task_r.push_back(t.pearson->r);
    } catch (const std::exception& e) {
      t.note = std::string("pearson: ") + e.what();
    }
    if (sim.size() >= 2) {
      t.mmrv = stats::Mmrv(sim, real);
      task_mmrv.push_back(*t.mmrv);
    }
    r.per_task.push_back(std::move(t));
  }
  if (!task_r.empty()) r.avg_pearson = Summarize(task_r);
  if (!task_mmrv.empty()) r.avg_mmrv = Summarize(task_mmrv);

  std::vector<double> sim, real;
  for (const PairedEvaluation& p : r.pairs) {
    sim.push_back(p.sim_sr);
    real.push_back(p.real_sr);
  }
  try {
    r.overall_pearson = stats::Pearson(sim, real);
  } catch (const std::exception& e) {
    r.notes.push_back(std::string("overall pearson: ") + e.what());
  }
  if (!sim.empty()) r.mbe = stats::MeanBiasError(sim, real);
  if (sim.size() >= 2) r.bland_altman = stats::BlandAltman(sim, real);
  return r;
}

Json CampaignReport::ToJson() const {
  Json pairs_json = Json::array();
  for (const PairedEvaluation& p : pairs) {
    pairs_json.push_back({{"policy", p.policy_id}, {"task", p.task}, {"sim_sr", p.sim_sr}, {"real_sr", p.real_sr}});
  }
  Json tasks_json = Json::array();
  for (const TaskAgreement& t : per_task) {
    tasks_json.push_back({{"task", t.task},
                          {"policies", t.policies},
                          {"pearson_r", t.pearson ? Num(t.pearson->r) : Json(nullptr)},
                          {"pearson_p", t.pearson ? Num(t.pearson->p_two_sided) : Json(nullptr)},
                          {"mmrv", Opt(t.mmrv)},
                          {"note", t.note}});
  }
  Json j = {{"pairs", pairs_json},
            {"per_task", tasks_json},
            {"average", {{"pearson", avg_pearson ? MeanSdJson(*avg_pearson) : Json(nullptr)},
                         {"mmrv", avg_mmrv ? MeanSdJson(*avg_mmrv) : Json(nullptr)}}},
            {"overall_pearson", overall_pearson ? Json{{"r", Num(overall_pearson->r)},
                                                       {"p", Num(overall_pearson->p_two_sided)}}
                                                : Json(nullptr)},
            {"mbe", mbe ? Json{{"mbe", Num(mbe->mbe)}, {"ci95", {Num(mbe->ci_low), Num(mbe->ci_high)}}}
                        : Json(nullptr)},
            {"bland_altman", bland_altman ? Json{{"mean_diff", Num(bland_altman->mean_diff)},
                                                 {"sd", Num(bland_altman->sd)},
                                                 {"loa", {Num(bland_altman->low), Num(bland_altman->high)}}}
                                          : Json(nullptr)},
            {"sim_raters", sim_raters},
            {"unmatched", unmatched},
            {"notes", notes}};
  if (raters) {
    j["rater_agreement"] = {{"raters", raters->raters},
                            {"subjects", raters->subjects},
                            {"icc_2_1", Opt(raters->icc)},
                            {"note", raters->note}};
  } else {
    j["rater_agreement"] = nullptr;
  }
  return j;
}

std::string CampaignReport::TasksCsv() const {
  std::string out = "task,policies,pearson_r,pearson_p,mmrv\n";
  for (const TaskAgreement& t : per_task) {
    out += CsvCell(t.task) + "," + std::to_string(t.policies) + "," + (t.pearson ? Fmt(t.pearson->r) : "") + "," +
           (t.pearson ? Fmt(t.pearson->p_two_sided) : "") + "," + (t.mmrv ? Fmt(*t.mmrv) : "") + "\n";
  }
  return out;
}

std::string CampaignReport::ScatterCsv() const { return PairsCsv(pairs); }

std::map<RateKey, double> SimSuccessRates(const RunManifest& manifest, std::span<const LabelRecord> labels,
                                          const std::vector<std::string>& raters) {
  const std::set<std::string> chosen(raters.begin(), raters.end());
  std::map<RateKey, std::map<int, stats::OutcomeSet>> trials;
  for (const LabelRecord& l : labels) {
    if (!chosen.count(l.rater_id)) continue;
    const RolloutKey k = ParseRolloutId(l.rollout_ref);
    trials[{k.policy_id, k.task}][k.trial].push_back(l.outcome);
  }
  std::map<RateKey, double> rates;
  for (const auto& [key, by_trial] : trials) {
    if (DomainOf(manifest, key.second) == TaskDomain::kChole) {
      std::vector<bool> votes;
      for (const auto& [trial, set] : by_trial) votes.push_back(stats::MajorityVote(set));
      rates[key] = stats::SuccessRate(votes);
    } else {
      std::vector<stats::OutcomeSet> sets;
      for (const auto& [trial, set] : by_trial) sets.push_back(set);
      rates[key] = stats::SeedAveragedSuccessRate(sets);
    }
  }
  return rates;
}

std::map<RateKey, double> RealSuccessRates(std::span<const RealResult> results) {
  std::map<RateKey, std::vector<bool>> outcomes;
  for (const RealResult& r : results) outcomes[{r.policy_id, r.task}].push_back(r.success);
  std::map<RateKey, double> rates;
  for (const auto& [key, o] : outcomes) rates[key] = stats::SuccessRate(o);
  return rates;
}

std::vector<PairedEvaluation> PairRates(const std::map<RateKey, double>& sim, const std::map<RateKey, double>& real,
                                        std::vector<std::string>& unmatched) {
  std::vector<PairedEvaluation> pairs;
  for (const auto& [key, s] : sim) {
    const auto it = real.find(key);
    if (it == real.end()) {
      unmatched.push_back(key.first + "/" + key.second + ": no real result");
    } else {
      pairs.push_back({key.first, key.second, s, it->second});
    }
  }
  for (const auto& [key, r] : real) {
    if (!sim.count(key)) unmatched.push_back(key.first + "/" + key.second + ": no simulated rate");
  }
  return pairs;
}

std::vector<std::string> RatersIn(std::span<const LabelRecord> labels, bool include_classifier) {
  std::set<std::string> ids;
  for (const LabelRecord& l : labels) {
    if (include_classifier || l.rater_id != kClassifierRater) ids.insert(l.rater_id);
  }
  return {ids.begin(), ids.end()};
}

RaterAgreement ComputeRaterAgreement(std::span<const LabelRecord> labels, const std::vector<std::string>& raters) {
  RaterAgreement a;
  a.raters = raters;
  std::map<std::string, std::map<std::string, bool>> by_rollout;
  for (const LabelRecord& l : labels) by_rollout[l.rollout_ref][l.rater_id] = l.outcome;

  std::vector<double> values;
  for (const auto& [ref, by_rater] : by_rollout) {
    if (!std::all_of(raters.begin(), raters.end(), [&](const std::string& r) { return by_rater.count(r) > 0; })) {
      continue;
    }
    ++a.subjects;
    for (const std::string& r : raters) values.push_back(by_rater.at(r) ? 1.0 : 0.0);
  }
  if (raters.size() < 2) {
    a.note = "needs at least two raters";
  } else if (a.subjects < 2) {
    a.note = "needs at least two rollouts labeled by every rater";
  } else {
    a.icc = stats::Icc21(stats::RatingMatrix(a.subjects, raters.size(), std::move(values)));
  }
  return a;
}

CampaignReport ReportForRun(const RunStore& store, const std::string& run_id, const ReportOptions& options) {
  const RunManifest manifest = store.LoadManifest(run_id);
  const std::vector<LabelRecord> labels = store.LoadLabels(run_id);
  const std::vector<RealResult> real = store.LoadRealResults(run_id);

  std::vector<std::string> sim_raters = options.sim_raters;
  if (sim_raters.empty()) sim_raters = RatersIn(labels, false);
  if (sim_raters.empty()) sim_raters = {std::string(kClassifierRater)};

  std::vector<std::string> unmatched;
  std::vector<PairedEvaluation> pairs =
      PairRates(SimSuccessRates(manifest, labels, sim_raters), RealSuccessRates(real), unmatched);
  CampaignReport report = BuildReport(std::move(pairs));
  report.sim_raters = sim_raters;
  report.unmatched = std::move(unmatched);
  if (real.empty()) report.notes.push_back("no real results ingested");
  if (labels.empty()) report.notes.push_back("no labels recorded");

  const std::vector<std::string> icc_raters = options.icc_raters.empty() ? RatersIn(labels, true) : options.icc_raters;
  if (icc_raters.size() >= 2) report.raters = ComputeRaterAgreement(labels, icc_raters);
  return report;
}

void WriteReport(RunStore& store, const std::string& run_id, const CampaignReport& report) {
  store.WriteRunFile(run_id, "report.json", report.ToJson().dump(2) + "\n");
  store.WriteRunFile(run_id, "report_tasks.csv", report.TasksCsv());
  store.WriteRunFile(run_id, "scatter.csv", report.ScatterCsv());
}

Json AgreementJson(const RunStore& store, const std::string& run_id, const std::vector<std::string>& requested) {
  const RunManifest manifest = store.LoadManifest(run_id);
  const std::vector<LabelRecord> labels = store.LoadLabels(run_id);
  const std::vector<std::string> raters = requested.empty() ? RatersIn(labels, false) : requested;
  const RaterAgreement agreement = ComputeRaterAgreement(labels, raters);

  Json per_rater = Json::array();
  for (const std::string& rater : raters) {
    std::vector<bool> outcomes;
    int anomalies = 0;
    for (const LabelRecord& l : labels) {
      if (l.rater_id != rater) continue;
      outcomes.push_back(l.outcome);
      anomalies += l.anomaly_flag ? 1 : 0;
    }
    per_rater.push_back({{"rater_id", rater},
                         {"labels", outcomes.size()},
                         {"anomalies", anomalies},
                         {"success_rate", outcomes.empty() ? Json(nullptr) : Json(stats::SuccessRate(outcomes))}});
  }

  const std::set<std::string> chosen(raters.begin(), raters.end());
  std::map<std::tuple<std::string, std::string, int>, std::vector<bool>> trials;
  for (const LabelRecord& l : labels) {
    if (!chosen.count(l.rater_id)) continue;
    const RolloutKey k = ParseRolloutId(l.rollout_ref);
    if (DomainOf(manifest, k.task) == TaskDomain::kChole) trials[{k.policy_id, k.task, k.trial}].push_back(l.outcome);
  }
  Json votes = Json::array();
  for (const auto& [key, outcomes] : trials) {
    const auto successes = std::count(outcomes.begin(), outcomes.end(), true);
    votes.push_back({{"policy", std::get<0>(key)},
                     {"task", std::get<1>(key)},
                     {"trial", std::get<2>(key)},
                     {"labels", outcomes.size()},
                     {"successes", successes},
                     {"success", stats::MajorityVote(outcomes)}});
  }
  return {{"run_id", run_id},
          {"raters", raters},
          {"subjects", agreement.subjects},
          {"icc_2_1", Opt(agreement.icc)},
          {"note", agreement.note},
          {"per_rater", per_rater},
          {"majority_vote", votes}};
}

}  // namespace wmeval
