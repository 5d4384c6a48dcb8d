// Copyright 2026 The wmeval Authors
// SPDX-License-Identifier: Apache-2.0

// Framed wire protocol spoken between the orchestrator and the policy,
// world-model and classifier backends.
//
// Every message on the byte stream is
//
//   [u32 BE header_len][header_len bytes of UTF-8 JSON][u64 BE payload_len][payload]
//
// The JSON header always carries "type" and "session"; message specific
// fields sit next to them. Pixel data travels in the binary payload and is
// declared in the header as {"frames": {"count", "width", "height"}}.

#ifndef WMEVAL_PROTOCOL_H_
#define WMEVAL_PROTOCOL_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "wmeval/pose.h"

namespace wmeval {

using Json = nlohmann::json;
using Bytes = std::vector<std::uint8_t>;

namespace protocol {
inline constexpr int kVersion = 1;
inline constexpr std::size_t kMaxHeaderBytes = std::size_t{16} << 20;
inline constexpr std::uint64_t kMaxPayloadBytes = std::uint64_t{1} << 32;
inline constexpr double kDefaultTimeoutSeconds = 120.0;
inline constexpr int kDefaultHorizon = 12;
inline constexpr int kModelRateHz = 10;
inline constexpr int kClassifierChunkFrames = 32;
}  // namespace protocol

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The buffer ends before the message does. Not fatal: feed more bytes.
class IncompleteMessage : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EncodingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ERROR envelope received from a backend.
class BackendError : public std::runtime_error {
 public:
  BackendError(std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

class TimeoutError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Row-major RGB8 image.
struct Frame {
  static constexpr int kChannels = 3;

  int width = 0;
  int height = 0;
  Bytes data;

  Frame() = default;
  Frame(int w, int h) : width(w), height(h), data(ByteSize(w, h), 0) {}
  Frame(int w, int h, Bytes bytes);

  static std::size_t ByteSize(int w, int h) {
    return static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * kChannels;
  }
  std::size_t byte_size() const { return data.size(); }
  bool SameSize(const Frame& o) const { return width == o.width && height == o.height; }

  std::uint8_t* pixel(int x, int y) { return &data[(static_cast<std::size_t>(y) * width + x) * kChannels]; }
  const std::uint8_t* pixel(int x, int y) const {
    return &data[(static_cast<std::size_t>(y) * width + x) * kChannels];
  }

  friend bool operator==(const Frame&, const Frame&) = default;
};

struct ArmCommand {
  Vec3 translation;  // meters, relative
  Quat rotation;     // relative
  double jaw = 1.0;  // absolute opening in [0, 1]

  friend bool operator==(const ArmCommand&, const ArmCommand&) = default;
};

struct Action {
  int arm_count = 1;
  std::array<ArmCommand, 2> arms{};

  ArmCommand& arm(int i = 0) { return arms[static_cast<std::size_t>(i)]; }
  const ArmCommand& arm(int i = 0) const { return arms[static_cast<std::size_t>(i)]; }

  // Throws std::invalid_argument on a non-unit quaternion, jaw outside
  // [0, 1] or arm_count outside {1, 2}.
  void Validate() const;

  friend bool operator==(const Action& a, const Action& b);
};

struct ActionChunk {
  std::vector<Action> actions;
  int rate_hz = protocol::kModelRateHz;

  std::size_t size() const { return actions.size(); }
  int arm_count() const { return actions.empty() ? 0 : actions.front().arm_count; }
  void Validate() const;

  friend bool operator==(const ActionChunk&, const ActionChunk&) = default;
};

enum class Role { kPolicy, kWorldModel, kClassifier };

enum class ChunkLabel { kSuccess, kAnomaly, kDefault };

enum class MessageType {
  kHello,
  kHelloOk,
  kPredictActions,
  kActions,
  kPredictFrames,
  kFrames,
  kClassifyChunk,
  kChunkLabel,
  kReset,
  kResetOk,
  kError,
};

std::string_view ToString(Role role);
std::string_view ToString(ChunkLabel label);
std::string_view ToString(MessageType type);
std::optional<Role> ParseRole(std::string_view s);
std::optional<ChunkLabel> ParseChunkLabel(std::string_view s);
std::optional<MessageType> ParseMessageType(std::string_view s);

struct Envelope {
  MessageType type = MessageType::kHello;
  std::string session_id;
  Json header = Json::object();  // message fields, without "type"/"session"
  Bytes payload;

  friend bool operator==(const Envelope& a, const Envelope& b) {
    return a.type == b.type && a.session_id == b.session_id && a.header == b.header &&
           a.payload == b.payload;
  }
};

// Throws EncodingError when the header is too large, uses a reserved key or
// the payload disagrees with its "frames" declaration.
Bytes EncodeEnvelope(const Envelope& env);

struct Decoded {
  Envelope envelope;
  std::size_t consumed = 0;
};

// Decodes the message at the start of `bytes`. Throws IncompleteMessage if
// the buffer is short and ProtocolError if the message is malformed.
Decoded DecodeEnvelope(std::span<const std::uint8_t> bytes);

// Incremental decoder for a byte stream that arrives in arbitrary pieces.
class StreamDecoder {
 public:
  void Feed(std::span<const std::uint8_t> bytes);
  // Returns the next complete envelope, or nullopt if more bytes are needed.
  std::optional<Envelope> Next();
  std::size_t buffered() const { return buffer_.size() - offset_; }

 private:
  Bytes buffer_;
  std::size_t offset_ = 0;
};

// ---- message schemas ----

Json ToJson(const Action& action);
Action ActionFromJson(const Json& j);
Json ToJson(const ActionChunk& chunk);
ActionChunk ActionChunkFromJson(const Json& j);

// Declares `frames` in env.header and concatenates their pixels as payload.
void AttachFrames(Envelope& env, std::span<const Frame> frames);
// Splits the payload according to the header's "frames" declaration.
std::vector<Frame> ExtractFrames(const Envelope& env);

struct HelloInfo {
  Role role = Role::kPolicy;
  int protocol_version = protocol::kVersion;
  std::vector<std::string> task_names;
  int arm_count = 1;
  int frame_width = 64;
  int frame_height = 64;
  // Reserved for multi-view backends; no semantics defined yet.
  std::vector<std::string> views;
};

Envelope MakeHello(const std::string& session_id, const HelloInfo& hello);
HelloInfo ParseHello(const Envelope& env);
Envelope MakeError(const std::string& session_id, const std::string& code,
                   const std::string& message);

}  // namespace wmeval

#endif  // WMEVAL_PROTOCOL_H_
