// Copyright 2026 The wmeval Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef WMEVAL_MOCK_BACKENDS_H_
#define WMEVAL_MOCK_BACKENDS_H_

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wmeval/protocol.h"
#include "wmeval/sandbox.h"
#include "wmeval/session.h"

namespace wmeval::mock {

enum class Script {
  kPrecise,   // close the jaw on the needle, carry it to the goal
  kNearMiss,  // close the jaw `offset` to the side of the needle
  kIdle,      // never move
  kFixed,     // replay `fixed_chunk` on every call
};

std::optional<Script> ParseScript(std::string_view s);
std::string_view ToString(Script s);

struct PolicyParams {
  Script script = Script::kPrecise;
  double offset = 0.0;       // lateral miss distance for kNearMiss
  double speed = 0.025;      // gripper travel per 10 Hz step
  int rate_hz = 30;          // emitted chunk rate
  int chunk_len = 50;        // actions per chunk at rate_hz
  ActionChunk fixed_chunk;   // for kFixed
};

struct MockConfig {
  sandbox::SandboxParams world;
  PolicyParams policy;
  double anomaly_jump = 0.2;  // needle displacement between frames flagged as anomaly
  std::vector<std::string> tasks;  // classifier task set; empty accepts any

  // Reads the flat keys of a params file or endpoint query string.
  static MockConfig FromJson(const Json& j);
  Json ToJson() const;
};

// Plans a chunk from one observation, deterministically.
class ScriptedPolicy : public Backend {
 public:
  explicit ScriptedPolicy(PolicyParams params) : params_(std::move(params)) {}
  Role role() const override { return Role::kPolicy; }
  ActionChunk PredictActions(const Frame& observation, const std::string& task) override;

 private:
  PolicyParams params_;
};

// Rebuilds the sandbox state from the conditioning frame, steps it through
// each action and renders every step. Identical (frame, actions, seed)
// requests yield identical frames.
class SandboxWorldModel : public Backend {
 public:
  explicit SandboxWorldModel(sandbox::SandboxParams params);
  Role role() const override { return Role::kWorldModel; }
  std::vector<Frame> PredictFrames(const Frame& state, const ActionChunk& actions,
                                   std::uint64_t seed) override;

 private:
  sandbox::SandboxParams params_;
};

// Labels a chunk by its first event: a needle jump larger than
// `anomaly_jump` between consecutive frames is ANOMALY, the needle inside
// the goal is SUCCESS.
class OracleClassifier : public Backend {
 public:
  OracleClassifier(double anomaly_jump, std::vector<std::string> tasks)
      : anomaly_jump_(anomaly_jump), tasks_(std::move(tasks)) {}
  Role role() const override { return Role::kClassifier; }
  void OnHello(const HelloInfo& hello) override;
  ChunkLabel ClassifyChunk(std::span<const Frame> frames, const std::string& task) override;

 private:
  double anomaly_jump_;
  std::vector<std::string> tasks_;
};

ChunkLabel OracleLabel(std::span<const Frame> frames, double anomaly_jump = 0.2);

std::unique_ptr<Backend> MakeBackend(Role role, const MockConfig& config);

// "tcp://host:port" or "mock://policy|world-model|classifier?key=value&...".
struct Endpoint {
  enum class Kind { kTcp, kMock } kind = Kind::kMock;
  std::string host;
  int port = 0;
  Role role = Role::kPolicy;
  MockConfig mock;
};

Endpoint ParseEndpoint(const std::string& text);
std::optional<Role> ParseRoleName(std::string_view s);  // policy | world-model | classifier

Session OpenEndpoint(const Endpoint& endpoint, const HelloInfo& hello, SessionOptions options = {});

}  // namespace wmeval::mock

#endif  // WMEVAL_MOCK_BACKENDS_H_
