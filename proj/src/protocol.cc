// Copyright 2026 The wmeval Authors
// SPDX-License-Identifier: Apache-2.0

#include "wmeval/protocol.h"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace wmeval {
namespace {

constexpr std::array<std::string_view, 11> kTypeNames = {
    "HELLO",          "HELLO_OK",    "PREDICT_ACTIONS", "ACTIONS", "PREDICT_FRAMES", "FRAMES",
    "CLASSIFY_CHUNK", "CHUNK_LABEL", "RESET",           "RESET_OK", "ERROR"};
constexpr std::array<std::string_view, 3> kRoleNames = {"POLICY", "WORLD_MODEL", "CLASSIFIER"};
constexpr std::array<std::string_view, 3> kLabelNames = {"SUCCESS", "ANOMALY", "DEFAULT"};

template <typename E, std::size_t N>
std::optional<E> Lookup(const std::array<std::string_view, N>& names, std::string_view s) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == s) return static_cast<E>(i);
  }
  return std::nullopt;
}

void PutU32(Bytes& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void PutU64(Bytes& out, std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

std::uint64_t GetBE(std::span<const std::uint8_t> bytes, std::size_t offset, int width) {
  std::uint64_t v = 0;
  for (int i = 0; i < width; ++i) v = (v << 8) | bytes[offset + static_cast<std::size_t>(i)];
  return v;
}

// Byte count implied by a "frames" declaration, or 0 when absent.
std::uint64_t DeclaredPayload(const Json& header) {
  if (!header.contains("frames")) return 0;
  const Json& f = header.at("frames");
  if (!f.is_object()) throw ProtocolError("\"frames\" must be an object");
  const auto count = f.at("count").get<std::int64_t>();
  const auto width = f.at("width").get<std::int64_t>();
  const auto height = f.at("height").get<std::int64_t>();
  if (count < 0 || width < 0 || height < 0) throw ProtocolError("negative frame declaration");
  return static_cast<std::uint64_t>(count) * static_cast<std::uint64_t>(width) *
         static_cast<std::uint64_t>(height) * Frame::kChannels;
}

Json Vec3Json(const Vec3& v) { return Json::array({v.x, v.y, v.z}); }
Json QuatJson(const Quat& q) { return Json::array({q.w, q.x, q.y, q.z}); }

}  // namespace

Frame::Frame(int w, int h, Bytes bytes) : width(w), height(h), data(std::move(bytes)) {
  if (w < 0 || h < 0 || data.size() != ByteSize(w, h)) {
    throw std::invalid_argument("frame data length " + std::to_string(data.size()) +
                                " does not match " + std::to_string(w) + "x" +
                                std::to_string(h) + "x3");
  }
}

void Action::Validate() const {
  if (arm_count != 1 && arm_count != 2) throw std::invalid_argument("arm_count must be 1 or 2");
  for (int i = 0; i < arm_count; ++i) {
    const ArmCommand& a = arm(i);
    if (std::abs(a.rotation.Norm() - 1.0) > 1e-6) {
      throw std::invalid_argument("rotation quaternion is not unit length");
    }
    if (!(a.jaw >= 0.0 && a.jaw <= 1.0)) throw std::invalid_argument("jaw outside [0, 1]");
  }
}

bool operator==(const Action& a, const Action& b) {
  if (a.arm_count != b.arm_count) return false;
  for (int i = 0; i < a.arm_count; ++i) {
    if (!(a.arm(i) == b.arm(i))) return false;
  }
  return true;
}

void ActionChunk::Validate() const {
  if (actions.empty()) throw std::invalid_argument("action chunk is empty");
  if (rate_hz <= 0) throw std::invalid_argument("action chunk rate must be positive");
  const int arms = actions.front().arm_count;
  for (const Action& a : actions) {
    a.Validate();
    if (a.arm_count != arms) throw std::invalid_argument("mixed arm counts in action chunk");
  }
}

std::string_view ToString(Role role) { return kRoleNames[static_cast<std::size_t>(role)]; }
std::string_view ToString(ChunkLabel label) { return kLabelNames[static_cast<std::size_t>(label)]; }
std::string_view ToString(MessageType type) { return kTypeNames[static_cast<std::size_t>(type)]; }
std::optional<Role> ParseRole(std::string_view s) { return Lookup<Role>(kRoleNames, s); }
std::optional<ChunkLabel> ParseChunkLabel(std::string_view s) {
  return Lookup<ChunkLabel>(kLabelNames, s);
}
std::optional<MessageType> ParseMessageType(std::string_view s) {
  return Lookup<MessageType>(kTypeNames, s);
}

Bytes EncodeEnvelope(const Envelope& env) {
  if (!env.header.is_object()) throw EncodingError("header must be a JSON object");
  if (env.header.contains("type") || env.header.contains("session")) {
    throw EncodingError("header uses a reserved key");
  }
  std::uint64_t declared = 0;
  try {
    declared = DeclaredPayload(env.header);
  } catch (const std::exception& e) {
    throw EncodingError(std::string("bad frames declaration: ") + e.what());
  }
  if (declared != env.payload.size()) {
    throw EncodingError("payload is " + std::to_string(env.payload.size()) +
                        " bytes but header declares " + std::to_string(declared));
  }

  Json full = env.header;
  full["type"] = ToString(env.type);
  full["session"] = env.session_id;
  const std::string text = full.dump();
  if (text.size() > protocol::kMaxHeaderBytes) {
    throw EncodingError("header of " + std::to_string(text.size()) + " bytes exceeds 16 MiB");
  }

  Bytes out;
  out.reserve(4 + text.size() + 8 + env.payload.size());
  PutU32(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  PutU64(out, env.payload.size());
  out.insert(out.end(), env.payload.begin(), env.payload.end());
  return out;
}

Decoded DecodeEnvelope(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw IncompleteMessage("need 4 bytes for header length");
  const std::uint64_t header_len = GetBE(bytes, 0, 4);
  if (header_len > protocol::kMaxHeaderBytes) {
    throw ProtocolError("header length " + std::to_string(header_len) + " exceeds 16 MiB");
  }
  const std::size_t payload_len_at = 4 + static_cast<std::size_t>(header_len);
  if (bytes.size() < payload_len_at + 8) throw IncompleteMessage("header or payload length truncated");
  const std::uint64_t payload_len = GetBE(bytes, payload_len_at, 8);
  if (payload_len > protocol::kMaxPayloadBytes) {
    throw ProtocolError("payload length " + std::to_string(payload_len) + " exceeds limit");
  }
  const std::size_t total = payload_len_at + 8 + static_cast<std::size_t>(payload_len);
  if (bytes.size() < total) throw IncompleteMessage("payload truncated");

  const auto* text = reinterpret_cast<const char*>(bytes.data() + 4);
  Json full = Json::parse(text, text + header_len, nullptr, /*allow_exceptions=*/false);
  if (full.is_discarded() || !full.is_object()) throw ProtocolError("header is not a JSON object");

  Envelope env;
  try {
    const auto type = ParseMessageType(full.at("type").get<std::string>());
    if (!type) throw ProtocolError("unknown message type " + full.at("type").dump());
    env.type = *type;
    env.session_id = full.at("session").get<std::string>();
  } catch (const Json::exception& e) {
    throw ProtocolError(std::string("header missing type/session: ") + e.what());
  }
  full.erase("type");
  full.erase("session");

  std::uint64_t declared = 0;
  try {
    declared = DeclaredPayload(full);
  } catch (const Json::exception& e) {
    throw ProtocolError(std::string("bad frames declaration: ") + e.what());
  }
  if (declared != payload_len) {
    throw ProtocolError("payload is " + std::to_string(payload_len) + " bytes but header declares " +
                        std::to_string(declared));
  }
  env.header = std::move(full);
  const auto payload = bytes.subspan(payload_len_at + 8, static_cast<std::size_t>(payload_len));
  env.payload.assign(payload.begin(), payload.end());
  return {std::move(env), total};
}

void StreamDecoder::Feed(std::span<const std::uint8_t> bytes) {
  if (offset_ > 0 && offset_ == buffer_.size()) {
    buffer_.clear();
    offset_ = 0;
  }
  buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
}

std::optional<Envelope> StreamDecoder::Next() {
  try {
    Decoded d = DecodeEnvelope(std::span(buffer_).subspan(offset_));
    offset_ += d.consumed;
    if (offset_ > (std::size_t{1} << 20) && offset_ * 2 > buffer_.size()) {
      buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(offset_));
      offset_ = 0;
    }
    return std::move(d.envelope);
  } catch (const IncompleteMessage&) {
    return std::nullopt;
  }
}

Json ToJson(const Action& action) {
  Json arms = Json::array();
  for (int i = 0; i < action.arm_count; ++i) {
    const ArmCommand& a = action.arm(i);
    arms.push_back({{"t", Vec3Json(a.translation)}, {"q", QuatJson(a.rotation)}, {"jaw", a.jaw}});
  }
  return {{"arms", std::move(arms)}};
}

Action ActionFromJson(const Json& j) {
  const Json& arms = j.at("arms");
  if (!arms.is_array() || arms.empty() || arms.size() > 2) {
    throw ProtocolError("action must carry one or two arms");
  }
  Action action;
  action.arm_count = static_cast<int>(arms.size());
  for (std::size_t i = 0; i < arms.size(); ++i) {
    const Json& t = arms[i].at("t");
    const Json& q = arms[i].at("q");
    if (t.size() != 3 || q.size() != 4) throw ProtocolError("bad translation/rotation arity");
    ArmCommand& a = action.arms[i];
    a.translation = {t[0].get<double>(), t[1].get<double>(), t[2].get<double>()};
    a.rotation = {q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>()};
    a.jaw = arms[i].at("jaw").get<double>();
  }
  return action;
}

Json ToJson(const ActionChunk& chunk) {
  Json actions = Json::array();
  for (const Action& a : chunk.actions) actions.push_back(ToJson(a));
  return {{"rate_hz", chunk.rate_hz}, {"actions", std::move(actions)}};
}

ActionChunk ActionChunkFromJson(const Json& j) {
  ActionChunk chunk;
  try {
    chunk.rate_hz = j.at("rate_hz").get<int>();
    for (const Json& a : j.at("actions")) chunk.actions.push_back(ActionFromJson(a));
  } catch (const Json::exception& e) {
    throw ProtocolError(std::string("malformed action chunk: ") + e.what());
  }
  return chunk;
}

void AttachFrames(Envelope& env, std::span<const Frame> frames) {
  const int w = frames.empty() ? 0 : frames.front().width;
  const int h = frames.empty() ? 0 : frames.front().height;
  env.payload.clear();
  env.payload.reserve(frames.size() * Frame::ByteSize(w, h));
  for (const Frame& f : frames) {
    if (f.width != w || f.height != h) throw EncodingError("frames in one message must share a size");
    env.payload.insert(env.payload.end(), f.data.begin(), f.data.end());
  }
  env.header["frames"] = {{"count", frames.size()}, {"width", w}, {"height", h}};
}

std::vector<Frame> ExtractFrames(const Envelope& env) {
  if (!env.header.contains("frames")) return {};
  const Json& f = env.header.at("frames");
  const auto count = f.at("count").get<std::size_t>();
  const int w = f.at("width").get<int>();
  const int h = f.at("height").get<int>();
  const std::size_t each = Frame::ByteSize(w, h);
  if (env.payload.size() != count * each) throw ProtocolError("payload does not match frame declaration");
  std::vector<Frame> frames;
  frames.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto begin = env.payload.begin() + static_cast<std::ptrdiff_t>(i * each);
    frames.emplace_back(w, h, Bytes(begin, begin + static_cast<std::ptrdiff_t>(each)));
  }
  return frames;
}

Envelope MakeHello(const std::string& session_id, const HelloInfo& hello) {
  Envelope env{MessageType::kHello, session_id, Json::object(), {}};
  env.header = {{"role", ToString(hello.role)},
                {"protocol_version", hello.protocol_version},
                {"task_names", hello.task_names},
                {"arm_count", hello.arm_count},
                {"frame_width", hello.frame_width},
                {"frame_height", hello.frame_height}};
  if (!hello.views.empty()) env.header["views"] = hello.views;
  return env;
}

HelloInfo ParseHello(const Envelope& env) {
  if (env.type != MessageType::kHello) throw ProtocolError("expected HELLO");
  HelloInfo hello;
  try {
    const auto role = ParseRole(env.header.at("role").get<std::string>());
    if (!role) throw ProtocolError("unknown role in HELLO");
    hello.role = *role;
    hello.protocol_version = env.header.at("protocol_version").get<int>();
    hello.task_names = env.header.value("task_names", std::vector<std::string>{});
    hello.arm_count = env.header.value("arm_count", 1);
    hello.frame_width = env.header.value("frame_width", 0);
    hello.frame_height = env.header.value("frame_height", 0);
    hello.views = env.header.value("views", std::vector<std::string>{});
  } catch (const Json::exception& e) {
    throw ProtocolError(std::string("malformed HELLO: ") + e.what());
  }
  return hello;
}

Envelope MakeError(const std::string& session_id, const std::string& code,
                   const std::string& message) {
  return {MessageType::kError, session_id, {{"code", code}, {"message", message}}, {}};
}

}  // namespace wmeval
