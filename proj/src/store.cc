// Copyright 2026 The wmeval Authors
// SPDX-License-Identifier: Apache-2.0

#include "wmeval/store.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "wmeval/csv.h"
#include "wmeval/video_io.h"

namespace wmeval {
namespace fs = std::filesystem;
namespace {

constexpr std::string_view kManifestFile = "manifest.json";
constexpr std::string_view kLabelsFile = "labels.jsonl";
constexpr std::string_view kRealFile = "real_results.csv";

template <typename T>
T ParseNumber(std::string_view s, const char* what) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw std::invalid_argument(std::string("bad ") + what + " '" + std::string(s) + "'");
  }
  return v;
}

std::string Jsonl(const std::vector<Json>& rows) {
  std::string out;
  for (const Json& r : rows) out += r.dump() + "\n";
  return out;
}

std::vector<Json> ReadJsonl(const fs::path& path) {
  std::vector<Json> rows;
  std::istringstream in(ReadFileText(path));
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    if (line.empty()) continue;
    try {
      rows.push_back(Json::parse(line));
    } catch (const Json::exception& e) {
      throw StoreError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return rows;
}

}  // namespace

bool IsSafeName(std::string_view s) {
  if (s.empty() || s.front() == '.') return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' ||
           c == '_' || c == '-';
  });
}

std::string_view ToString(TaskDomain d) { return d == TaskDomain::kChole ? "chole" : "tabletop"; }

std::optional<TaskDomain> ParseTaskDomain(std::string_view s) {
  if (s == "tabletop") return TaskDomain::kTabletop;
  if (s == "chole") return TaskDomain::kChole;
  return std::nullopt;
}

// ---- manifest ----

RunManifest RunManifest::FromJson(const Json& j) {
  RunManifest m;
  try {
    m.run_id = j.at("run_id").get<std::string>();
    for (const Json& t : j.at("tasks")) {
      TaskDefinition task;
      task.name = t.at("name").get<std::string>();
      task.step_limit = t.at("step_limit").get<int>();
      task.rubric = t.value("rubric", std::vector<std::string>{});
      const auto domain = ParseTaskDomain(t.value("domain", std::string("tabletop")));
      if (!domain) throw std::invalid_argument("task " + task.name + ": domain must be tabletop or chole");
      task.domain = *domain;
      m.tasks.push_back(std::move(task));
    }
    for (const Json& p : j.at("policies")) {
      m.policies.push_back({p.at("id").get<std::string>(), p.at("endpoint").get<std::string>()});
    }
    m.world_model = j.at("world_model").at("endpoint").get<std::string>();
    if (j.contains("classifier") && j.at("classifier").contains("endpoint")) {
      m.classifier = j.at("classifier").at("endpoint").get<std::string>();
    }
    m.trials_per_task = j.value("trials_per_task", m.trials_per_task);
    m.seeds = j.value("seeds", m.seeds);
    m.parallelism = j.value("parallelism", m.parallelism);
    m.output_dir = j.value("output_dir", m.output_dir);
    m.horizon = j.value("horizon", m.horizon);
    m.arm_count = j.value("arm_count", m.arm_count);
    m.timeout_seconds = j.value("timeout_seconds", m.timeout_seconds);
    m.initial_frames = j.value("initial_frames", m.initial_frames);
    m.created_at = j.value("created_at", m.created_at);
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("manifest: ") + e.what());
  }
  m.Validate();
  return m;
}

RunManifest RunManifest::Load(const fs::path& path) {
  Json j;
  try {
    j = Json::parse(ReadFileText(path));
  } catch (const Json::exception& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
  RunManifest m = FromJson(j);
  m.base_dir = path.parent_path();
  return m;
}

Json RunManifest::ToJson() const {
  Json tasks_json = Json::array();
  for (const TaskDefinition& t : tasks) {
    tasks_json.push_back(
        {{"name", t.name}, {"step_limit", t.step_limit}, {"rubric", t.rubric}, {"domain", ToString(t.domain)}});
  }
  Json policies_json = Json::array();
  for (const PolicyEntry& p : policies) policies_json.push_back({{"id", p.id}, {"endpoint", p.endpoint}});
  Json j = {{"run_id", run_id},
            {"tasks", tasks_json},
            {"policies", policies_json},
            {"world_model", {{"endpoint", world_model}}},
            {"trials_per_task", trials_per_task},
            {"seeds", seeds},
            {"parallelism", parallelism},
            {"output_dir", output_dir},
            {"horizon", horizon},
            {"arm_count", arm_count},
            {"timeout_seconds", timeout_seconds}};
  if (classifier) j["classifier"] = {{"endpoint", *classifier}};
  if (!initial_frames.empty()) j["initial_frames"] = initial_frames;
  if (!created_at.empty()) j["created_at"] = created_at;
  return j;
}

void RunManifest::Validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("manifest: " + msg); };
  auto check_endpoint = [&](const std::string& what, const std::string& ep) {
    if (ep.empty()) fail(what + " has no endpoint");
    if (!ep.starts_with("tcp://") && !ep.starts_with("mock://")) {
      fail(what + " endpoint '" + ep + "' must start with tcp:// or mock://");
    }
  };
  if (!IsSafeName(run_id)) fail("run_id '" + run_id + "' must be a safe name");
  if (tasks.empty()) fail("no tasks");
  if (policies.empty()) fail("no policies");
  std::set<std::string> names;
  for (const TaskDefinition& t : tasks) {
    if (!IsSafeName(t.name)) fail("task name '" + t.name + "' must be a safe name");
    if (t.step_limit <= 0) fail("task " + t.name + ": step_limit must be positive");
    if (!names.insert(t.name).second) fail("duplicate task " + t.name);
  }
  names.clear();
  for (const PolicyEntry& p : policies) {
    if (!IsSafeName(p.id)) fail("policy id '" + p.id + "' must be a safe name");
    check_endpoint("policy " + p.id, p.endpoint);
    if (!names.insert(p.id).second) fail("duplicate policy " + p.id);
  }
  check_endpoint("world_model", world_model);
  if (classifier) check_endpoint("classifier", *classifier);
  if (trials_per_task <= 0) fail("trials_per_task must be positive");
  if (seeds.empty() || std::set(seeds.begin(), seeds.end()).size() != seeds.size()) {
    fail("seeds must be non-empty and distinct");
  }
  if (parallelism <= 0) fail("parallelism must be positive");
  if (horizon <= 0) fail("horizon must be positive");
  if (arm_count != 1 && arm_count != 2) fail("arm_count must be 1 or 2");
  if (!(timeout_seconds > 0)) fail("timeout_seconds must be positive");
}

const TaskDefinition* RunManifest::FindTask(std::string_view name) const {
  for (const TaskDefinition& t : tasks) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

fs::path RunManifest::Resolve(const std::string& p) const {
  const fs::path path(p);
  return path.is_relative() ? base_dir / path : path;
}

// ---- labels and ids ----

Json LabelRecord::ToJson() const {
  Json j = {{"rollout_ref", rollout_ref},
            {"rater_id", rater_id},
            {"outcome", outcome},
            {"anomaly_flag", anomaly_flag},
            {"timestamp", timestamp}};
  if (rubric_checks) j["rubric_checks"] = *rubric_checks;
  return j;
}

LabelRecord LabelRecord::FromJson(const Json& j) {
  LabelRecord r;
  try {
    r.rollout_ref = j.value("rollout_ref", std::string());
    r.rater_id = j.at("rater_id").get<std::string>();
    r.outcome = j.at("outcome").get<bool>();
    r.anomaly_flag = j.value("anomaly_flag", false);
    if (j.contains("rubric_checks") && !j.at("rubric_checks").is_null()) {
      r.rubric_checks = j.at("rubric_checks").get<std::vector<bool>>();
    }
    r.timestamp = j.value("timestamp", std::string());
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("label: ") + e.what());
  }
  if (r.rater_id.empty()) throw std::invalid_argument("label: rater_id must be non-empty");
  return r;
}

std::string RolloutKey::Id() const {
  return policy_id + ":" + task + ":" + std::to_string(trial) + ":" + std::to_string(seed);
}

RolloutKey ParseRolloutId(std::string_view id) {
  std::vector<std::string_view> parts;
  for (std::size_t start = 0;;) {
    const auto colon = id.find(':', start);
    parts.push_back(id.substr(start, colon == std::string_view::npos ? colon : colon - start));
    if (colon == std::string_view::npos) break;
    start = colon + 1;
  }
  if (parts.size() != 4 || !IsSafeName(parts[0]) || !IsSafeName(parts[1])) {
    throw std::invalid_argument("rollout id must be policy:task:trial:seed, got '" + std::string(id) + "'");
  }
  RolloutKey k;
  k.policy_id = std::string(parts[0]);
  k.task = std::string(parts[1]);
  k.trial = ParseNumber<int>(parts[2], "trial");
  k.seed = ParseNumber<std::uint64_t>(parts[3], "seed");
  return k;
}

Json ToJson(const RolloutRecord& r) {
  Json log = Json::array();
  for (const IterationLog& it : r.action_log) {
    log.push_back({{"raw", ToJson(it.raw)}, {"resampled", ToJson(it.resampled)}});
  }
  return {{"policy_id", r.policy_id},
          {"task", r.task},
          {"trial", r.trial_index},
          {"seed", r.seed},
          {"steps_executed", r.steps_executed},
          {"frame_count", r.video.size()},
          {"rate_hz", r.video.rate_hz},
          {"termination", ToString(r.termination)},
          {"error", r.error},
          {"initial_frame_ref", r.initial_frame_ref},
          {"action_log", log}};
}

// ---- store ----

RunStore::RunStore(fs::path root) : root_(std::move(root)) {}

fs::path RunStore::RunDir(const std::string& run_id) const {
  if (!IsSafeName(run_id)) throw StoreError("bad run id '" + run_id + "'");
  return root_ / "runs" / run_id;
}

fs::path RunStore::RolloutBase(const std::string& run_id, const RolloutKey& key) const {
  return RunDir(run_id) / "rollouts" / key.policy_id / key.task / std::to_string(key.trial) /
         std::to_string(key.seed);
}

std::vector<std::string> RunStore::ListRuns() const {
  std::vector<std::string> runs;
  std::error_code ec;
  for (const auto& e : fs::directory_iterator(root_ / "runs", ec)) {
    const std::string name = e.path().filename().string();
    if (IsSafeName(name) && fs::is_regular_file(e.path() / kManifestFile)) runs.push_back(name);
  }
  std::sort(runs.begin(), runs.end());
  return runs;
}

bool RunStore::HasRun(const std::string& run_id) const {
  return IsSafeName(run_id) && fs::is_regular_file(RunDir(run_id) / kManifestFile);
}

void RunStore::RequireRun(const std::string& run_id) const {
  if (!HasRun(run_id)) throw StoreError("unknown run '" + run_id + "'");
}

void RunStore::CreateRun(const RunManifest& manifest) {
  manifest.Validate();
  const fs::path path = RunDir(manifest.run_id) / kManifestFile;
  const std::string text = manifest.ToJson().dump(2) + "\n";
  if (fs::exists(path) && ReadFileText(path) != text) {
    throw StoreError("run '" + manifest.run_id + "' already exists with a different manifest at " + path.string());
  }
  WriteFileIfChanged(path, text);
}

RunManifest RunStore::LoadManifest(const std::string& run_id) const {
  RequireRun(run_id);
  return RunManifest::Load(RunDir(run_id) / kManifestFile);
}

std::string RunStore::StoreRollout(const std::string& run_id, const RolloutRecord& record) {
  RequireRun(run_id);
  const RolloutKey key{record.policy_id, record.task, record.trial_index, record.seed};
  if (!IsSafeName(key.policy_id) || !IsSafeName(key.task)) {
    throw StoreError("rollout " + record.Id() + " has an unsafe policy or task name");
  }
  const fs::path base = RolloutBase(run_id, key);
  try {
    if (record.initial_frame) {
      VideoClip initial;
      initial.frames.push_back(*record.initial_frame);
      WriteVframes(base.parent_path() / "initial.vframes", initial);
    }
    WriteVframes(fs::path(base) += ".vframes", record.video);
    WriteFileIfChanged(fs::path(base) += ".json", ToJson(record).dump(1) + "\n");
  } catch (const std::exception& e) {
    throw StoreError(std::string("storing rollout ") + record.Id() + ": " + e.what());
  }
  return key.Id();
}

std::vector<RolloutSummary> RunStore::ListRollouts(const std::string& run_id) const {
  RequireRun(run_id);
  std::vector<RolloutSummary> out;
  const fs::path dir = RunDir(run_id) / "rollouts";
  std::error_code ec;
  if (!fs::is_directory(dir)) return out;
  for (auto it = fs::recursive_directory_iterator(dir, ec); it != fs::recursive_directory_iterator(); ++it) {
    const fs::path& p = it->path();
    if (p.extension() != ".json" || !it->is_regular_file()) continue;
    Json j;
    try {
      j = Json::parse(ReadFileText(p));
      RolloutSummary s;
      s.key = {j.at("policy_id").get<std::string>(), j.at("task").get<std::string>(), j.at("trial").get<int>(),
               j.at("seed").get<std::uint64_t>()};
      s.steps_executed = j.at("steps_executed").get<int>();
      s.frame_count = j.at("frame_count").get<int>();
      const auto term = ParseTermination(j.at("termination").get<std::string>());
      if (!term) throw std::invalid_argument("bad termination");
      s.termination = *term;
      s.error = j.at("error").get<std::string>();
      s.initial_frame_ref = j.at("initial_frame_ref").get<std::string>();
      out.push_back(std::move(s));
    } catch (const std::exception& e) {
      throw StoreError(p.string() + ": " + e.what());
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.key < b.key; });
  return out;
}

bool RunStore::HasRollout(const std::string& run_id, const std::string& rollout_id) const {
  try {
    return HasRun(run_id) && fs::is_regular_file(fs::path(RolloutBase(run_id, ParseRolloutId(rollout_id))) += ".json");
  } catch (const std::invalid_argument&) {
    return false;
  }
}

fs::path RunStore::VideoPath(const std::string& run_id, const std::string& rollout_id) const {
  return fs::path(RolloutBase(run_id, ParseRolloutId(rollout_id))) += ".vframes";
}

VideoClip RunStore::LoadVideo(const std::string& run_id, const std::string& rollout_id) const {
  if (!HasRollout(run_id, rollout_id)) throw StoreError("unknown rollout '" + rollout_id + "'");
  return ReadVframes(VideoPath(run_id, rollout_id));
}

RolloutRecord RunStore::LoadRollout(const std::string& run_id, const std::string& rollout_id) const {
  if (!HasRollout(run_id, rollout_id)) throw StoreError("unknown rollout '" + rollout_id + "'");
  const RolloutKey key = ParseRolloutId(rollout_id);
  const fs::path base = RolloutBase(run_id, key);
  const fs::path meta_path = fs::path(base) += ".json";
  RolloutRecord r;
  try {
    const Json j = Json::parse(ReadFileText(meta_path));
    r.policy_id = j.at("policy_id").get<std::string>();
    r.task = j.at("task").get<std::string>();
    r.trial_index = j.at("trial").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.steps_executed = j.at("steps_executed").get<int>();
    r.termination = ParseTermination(j.at("termination").get<std::string>()).value();
    r.error = j.at("error").get<std::string>();
    r.initial_frame_ref = j.at("initial_frame_ref").get<std::string>();
    for (const Json& it : j.at("action_log")) {
      r.action_log.push_back({ActionChunkFromJson(it.at("raw")), ActionChunkFromJson(it.at("resampled"))});
    }
  } catch (const std::exception& e) {
    throw StoreError(meta_path.string() + ": " + e.what());
  }
  r.video = ReadVframes(fs::path(base) += ".vframes");
  const fs::path initial = base.parent_path() / "initial.vframes";
  if (fs::exists(initial)) {
    VideoClip clip = ReadVframes(initial);
    if (clip.size() != 1) throw StoreError(initial.string() + ": expected exactly one frame");
    r.initial_frame = std::make_shared<const Frame>(std::move(clip.frames.front()));
  }
  return r;
}

bool RunStore::SubmitLabel(const std::string& run_id, LabelRecord record, const std::string& default_timestamp) {
  if (record.rater_id.empty()) throw std::invalid_argument("rater_id must be non-empty");
  if (!HasRollout(run_id, record.rollout_ref)) throw StoreError("unknown rollout '" + record.rollout_ref + "'");
  if (record.rubric_checks) {
    const RunManifest m = LoadManifest(run_id);
    const TaskDefinition* task = m.FindTask(ParseRolloutId(record.rollout_ref).task);
    const std::size_t want = task ? task->rubric.size() : 0;
    if (record.rubric_checks->size() != want) {
      throw std::invalid_argument("rubric_checks has " + std::to_string(record.rubric_checks->size()) +
                                  " entries, the task rubric has " + std::to_string(want));
    }
  }

  std::lock_guard lock(label_mu_);
  std::vector<LabelRecord> labels = LoadLabels(run_id);
  auto it = std::find_if(labels.begin(), labels.end(), [&](const LabelRecord& l) {
    return l.rollout_ref == record.rollout_ref && l.rater_id == record.rater_id;
  });
  if (record.timestamp.empty()) record.timestamp = it != labels.end() ? it->timestamp : default_timestamp;
  if (it != labels.end()) {
    if (*it == record) return false;
    *it = std::move(record);
  } else {
    labels.push_back(std::move(record));
  }
  std::sort(labels.begin(), labels.end(), [](const LabelRecord& a, const LabelRecord& b) {
    return std::tie(a.rollout_ref, a.rater_id) < std::tie(b.rollout_ref, b.rater_id);
  });
  std::vector<Json> rows;
  for (const LabelRecord& l : labels) rows.push_back(l.ToJson());
  WriteFileIfChanged(RunDir(run_id) / kLabelsFile, Jsonl(rows));
  return true;
}

std::vector<LabelRecord> RunStore::LoadLabels(const std::string& run_id) const {
  RequireRun(run_id);
  const fs::path path = RunDir(run_id) / kLabelsFile;
  std::vector<LabelRecord> labels;
  if (!fs::exists(path)) return labels;
  for (const Json& j : ReadJsonl(path)) labels.push_back(LabelRecord::FromJson(j));
  return labels;
}

void RunStore::WriteChunkLabels(const std::string& run_id, const std::string& rollout_id,
                                std::span<const LabeledSpan> labels) {
  std::vector<Json> rows;
  for (const LabeledSpan& l : labels) {
    rows.push_back({{"span", {l.span.start, l.span.end}}, {"label", ToString(l.label)}});
  }
  WriteFileIfChanged(fs::path(RolloutBase(run_id, ParseRolloutId(rollout_id))) += ".chunks.jsonl", Jsonl(rows));
}

std::optional<std::vector<LabeledSpan>> RunStore::LoadChunkLabels(const std::string& run_id,
                                                                  const std::string& rollout_id) const {
  const fs::path path = fs::path(RolloutBase(run_id, ParseRolloutId(rollout_id))) += ".chunks.jsonl";
  if (!fs::exists(path)) return std::nullopt;
  std::vector<LabeledSpan> out;
  for (const Json& j : ReadJsonl(path)) {
    const auto label = ParseChunkLabel(j.at("label").get<std::string>());
    if (!label) throw StoreError(path.string() + ": bad label " + j.at("label").dump());
    out.push_back({{j.at("span").at(0).get<int>(), j.at("span").at(1).get<int>()}, *label});
  }
  return out;
}

void RunStore::WriteRealResults(const std::string& run_id, std::span<const RealResult> results) {
  RequireRun(run_id);
  std::string text = "policy_id,task,trial,outcome,initial_frame_path\n";
  for (const RealResult& r : results) {
    text += CsvCell(r.policy_id) + "," + CsvCell(r.task) + "," + std::to_string(r.trial) + "," +
            (r.success ? "success" : "failure") + "," + CsvCell(r.initial_frame_path) + "\n";
  }
  WriteFileIfChanged(RunDir(run_id) / kRealFile, text);
}

std::vector<RealResult> RunStore::LoadRealResults(const std::string& run_id) const {
  RequireRun(run_id);
  const fs::path path = RunDir(run_id) / kRealFile;
  if (!fs::exists(path)) return {};
  return IngestRealResults(path.string());
}

void RunStore::WriteRunFile(const std::string& run_id, const std::string& name, std::string_view text) {
  RequireRun(run_id);
  if (!IsSafeName(name)) throw StoreError("bad run file name '" + name + "'");
  WriteFileIfChanged(RunDir(run_id) / name, text);
}

std::optional<std::string> RunStore::ReadRunFile(const std::string& run_id, const std::string& name) const {
  RequireRun(run_id);
  if (!IsSafeName(name)) throw StoreError("bad run file name '" + name + "'");
  const fs::path path = RunDir(run_id) / name;
  if (!fs::exists(path)) return std::nullopt;
  return ReadFileText(path);
}

}  // namespace wmeval
