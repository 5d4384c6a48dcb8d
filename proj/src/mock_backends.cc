// Copyright 2026 The wmeval Authors
// SPDX-License-Identifier: Apache-2.0

#include "wmeval/mock_backends.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace wmeval::mock {
namespace {

using sandbox::Vec2;

constexpr std::array<std::string_view, 4> kScriptNames = {"precise", "near_miss", "idle", "fixed"};

Action MoveAction(double dx, double dy, double jaw) {
  Action a;
  a.arm_count = 1;
  a.arm(0).translation = {dx, dy, 0.0};
  a.arm(0).jaw = jaw;
  return a;
}

// Query values are JSON when they parse as JSON, plain strings otherwise.
Json QueryValue(const std::string& raw) {
  Json v = Json::parse(raw, nullptr, /*allow_exceptions=*/false);
  return v.is_discarded() ? Json(raw) : v;
}

Json ParseQuery(std::string_view query) {
  Json out = Json::object();
  while (!query.empty()) {
    const auto amp = query.find('&');
    const std::string_view item = query.substr(0, amp);
    query = amp == std::string_view::npos ? std::string_view{} : query.substr(amp + 1);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw std::invalid_argument("query item without '=': " + std::string(item));
    out[std::string(item.substr(0, eq))] = QueryValue(std::string(item.substr(eq + 1)));
  }
  return out;
}

}  // namespace

std::optional<Script> ParseScript(std::string_view s) {
  for (std::size_t i = 0; i < kScriptNames.size(); ++i) {
    if (kScriptNames[i] == s) return static_cast<Script>(i);
  }
  return std::nullopt;
}

std::string_view ToString(Script s) { return kScriptNames[static_cast<std::size_t>(s)]; }

MockConfig MockConfig::FromJson(const Json& j) {
  MockConfig c;
  if (j.contains("params")) {
    const std::string path = j.at("params").get<std::string>();
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open params file " + path);
    Json file = Json::parse(in);
    for (const auto& [k, v] : j.items()) {
      if (k != "params") file[k] = v;
    }
    return FromJson(file);
  }
  c.world.attach_radius = j.value("attach_radius", c.world.attach_radius);
  c.world.action_scale = j.value("action_scale", c.world.action_scale);
  c.world.false_attach_prob = j.value("false_attach_prob", c.world.false_attach_prob);
  c.world.seed = j.value("seed", c.world.seed);
  c.world.Validate();

  if (j.contains("script")) {
    const auto s = ParseScript(j.at("script").get<std::string>());
    if (!s) throw std::invalid_argument("unknown script " + j.at("script").dump());
    c.policy.script = *s;
  }
  c.policy.offset = j.value("offset", c.policy.offset);
  c.policy.speed = j.value("speed", c.policy.speed);
  c.policy.rate_hz = j.value("rate_hz", c.policy.rate_hz);
  c.policy.chunk_len = j.value("chunk_len", c.policy.chunk_len);
  if (c.policy.rate_hz < protocol::kModelRateHz || c.policy.chunk_len < 1 || !(c.policy.speed > 0.0)) {
    throw std::invalid_argument("policy needs rate_hz >= 10, chunk_len >= 1 and speed > 0");
  }
  if (j.contains("actions")) c.policy.fixed_chunk = ActionChunkFromJson(j.at("actions"));
  if (c.policy.script == Script::kFixed) c.policy.fixed_chunk.Validate();

  c.anomaly_jump = j.value("anomaly_jump", c.anomaly_jump);
  if (j.contains("tasks")) {
    const Json& t = j.at("tasks");
    if (t.is_string()) {
      std::string_view rest = t.get_ref<const std::string&>();
      while (!rest.empty()) {
        const auto comma = rest.find(',');
        c.tasks.emplace_back(rest.substr(0, comma));
        rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
      }
    } else {
      c.tasks = t.get<std::vector<std::string>>();
    }
  }
  return c;
}

Json MockConfig::ToJson() const {
  Json j = {{"attach_radius", world.attach_radius},
            {"action_scale", world.action_scale},
            {"false_attach_prob", world.false_attach_prob},
            {"seed", world.seed},
            {"script", ToString(policy.script)},
            {"offset", policy.offset},
            {"speed", policy.speed},
            {"rate_hz", policy.rate_hz},
            {"chunk_len", policy.chunk_len},
            {"anomaly_jump", anomaly_jump},
            {"tasks", tasks}};
  if (!policy.fixed_chunk.actions.empty()) j["actions"] = wmeval::ToJson(policy.fixed_chunk);
  return j;
}

ActionChunk ScriptedPolicy::PredictActions(const Frame& observation, const std::string&) {
  if (params_.script == Script::kFixed) return params_.fixed_chunk;
  const auto obs = sandbox::Decode(observation);
  if (!obs) throw std::invalid_argument("observation is not a sandbox frame");

  ActionChunk chunk;
  chunk.rate_hz = params_.rate_hz;
  const double step = params_.speed * protocol::kModelRateHz / params_.rate_hz;
  Vec2 pos = obs->gripper;
  bool closed = obs->jaw_closed();
  Vec2 target = obs->needle;
  if (obs->grasped) {
    target = obs->goal;
  } else if (params_.script == Script::kNearMiss) {
    target.x += obs->needle.x + params_.offset <= 1.0 ? params_.offset : -params_.offset;
  }

  for (int i = 0; i < params_.chunk_len; ++i) {
    if (params_.script == Script::kIdle || (closed && !obs->grasped)) {
      chunk.actions.push_back(MoveAction(0.0, 0.0, closed ? 0.0 : obs->jaw));
      continue;
    }
    const double dx = target.x - pos.x, dy = target.y - pos.y;
    const double dist = std::hypot(dx, dy);
    const bool arrives = dist <= step;
    const double scale = arrives ? 1.0 : step / dist;
    pos = {pos.x + dx * scale, pos.y + dy * scale};
    if (obs->grasped) {
      chunk.actions.push_back(MoveAction(dx * scale, dy * scale, 0.0));
    } else {
      chunk.actions.push_back(MoveAction(dx * scale, dy * scale, arrives ? 0.0 : 1.0));
      closed = arrives;
    }
  }
  return chunk;
}

SandboxWorldModel::SandboxWorldModel(sandbox::SandboxParams params) : params_(params) {
  params_.Validate();
}

std::vector<Frame> SandboxWorldModel::PredictFrames(const Frame& state, const ActionChunk& actions,
                                                    std::uint64_t seed) {
  auto s = sandbox::Decode(state);
  if (!s) throw std::invalid_argument("conditioning frame is not a sandbox frame");
  const std::string action_text = wmeval::ToJson(actions).dump();
  const auto* ap = reinterpret_cast<const std::uint8_t*>(action_text.data());
  const std::uint64_t content = sandbox::Fnv1a({ap, action_text.size()}, sandbox::Fnv1a(state.data));
  sandbox::Rng rng(sandbox::HashCombine(sandbox::HashCombine(params_.seed, seed), content));

  std::vector<Frame> frames;
  frames.reserve(actions.size());
  for (const Action& a : actions.actions) {
    *s = sandbox::Step(*s, a, params_, rng);
    frames.push_back(sandbox::Render(*s, state.width, state.height));
  }
  return frames;
}

void OracleClassifier::OnHello(const HelloInfo& hello) {
  if (tasks_.empty()) tasks_ = hello.task_names;
}

ChunkLabel OracleClassifier::ClassifyChunk(std::span<const Frame> frames, const std::string& task) {
  if (!tasks_.empty() && std::find(tasks_.begin(), tasks_.end(), task) == tasks_.end()) {
    throw std::invalid_argument("unknown task " + task);
  }
  return OracleLabel(frames, anomaly_jump_);
}

ChunkLabel OracleLabel(std::span<const Frame> frames, double anomaly_jump) {
  std::optional<sandbox::SandboxState> prev;
  for (const Frame& f : frames) {
    const auto s = sandbox::Decode(f);
    if (!s) throw std::invalid_argument("chunk frame is not a sandbox frame");
    if (prev && sandbox::Distance(prev->needle, s->needle) > anomaly_jump) return ChunkLabel::kAnomaly;
    if (sandbox::NeedleAtGoal(*s, f.width, f.height)) return ChunkLabel::kSuccess;
    prev = s;
  }
  return ChunkLabel::kDefault;
}

std::unique_ptr<Backend> MakeBackend(Role role, const MockConfig& config) {
  switch (role) {
    case Role::kPolicy:
      return std::make_unique<ScriptedPolicy>(config.policy);
    case Role::kWorldModel:
      return std::make_unique<SandboxWorldModel>(config.world);
    case Role::kClassifier:
      break;
  }
  return std::make_unique<OracleClassifier>(config.anomaly_jump, config.tasks);
}

std::optional<Role> ParseRoleName(std::string_view s) {
  if (s == "policy") return Role::kPolicy;
  if (s == "world-model" || s == "world_model") return Role::kWorldModel;
  if (s == "classifier") return Role::kClassifier;
  return std::nullopt;
}

Endpoint ParseEndpoint(const std::string& text) {
  Endpoint e;
  constexpr std::string_view kTcp = "tcp://", kMock = "mock://";
  const std::string_view t = text;
  if (t.starts_with(kTcp)) {
    e.kind = Endpoint::Kind::kTcp;
    const std::string_view rest = t.substr(kTcp.size());
    const auto colon = rest.rfind(':');
    if (colon == std::string_view::npos || colon == 0) throw std::invalid_argument("endpoint needs host:port: " + text);
    e.host = std::string(rest.substr(0, colon));
    const std::string_view port = rest.substr(colon + 1);
    auto [p, ec] = std::from_chars(port.data(), port.data() + port.size(), e.port);
    if (ec != std::errc{} || p != port.data() + port.size() || e.port <= 0 || e.port > 65535) {
      throw std::invalid_argument("bad port in endpoint " + text);
    }
    return e;
  }
  if (t.starts_with(kMock)) {
    e.kind = Endpoint::Kind::kMock;
    const std::string_view rest = t.substr(kMock.size());
    const auto q = rest.find('?');
    const auto role = ParseRoleName(rest.substr(0, q));
    if (!role) throw std::invalid_argument("unknown mock role in " + text);
    e.role = *role;
    e.mock = MockConfig::FromJson(q == std::string_view::npos ? Json::object() : ParseQuery(rest.substr(q + 1)));
    return e;
  }
  throw std::invalid_argument("endpoint must start with tcp:// or mock://: " + text);
}

Session OpenEndpoint(const Endpoint& endpoint, const HelloInfo& hello, SessionOptions options) {
  if (endpoint.kind == Endpoint::Kind::kTcp) {
    return Session::OverTcp(endpoint.host, endpoint.port, hello, options);
  }
  return Session::InProcess(MakeBackend(endpoint.role, endpoint.mock), hello, options);
}

}  // namespace wmeval::mock
