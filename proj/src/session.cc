// Copyright 2026 The wmeval Authors
// SPDX-License-Identifier: Apache-2.0

#include "wmeval/session.h"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cerrno>
#include <cstring>
#include <iostream>

namespace wmeval {
namespace {

constexpr std::chrono::milliseconds kNoTimeout{-1};

std::string Errno(const std::string& what) { return what + ": " + std::strerror(errno); }

std::string NextSessionId() {
  static std::atomic<std::uint64_t> counter{0};
  return "s" + std::to_string(counter.fetch_add(1) + 1);
}

void SetNoDelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

Envelope Reply(const Envelope& req, MessageType type, Json header = Json::object()) {
  return {type, req.session_id, std::move(header), {}};
}

std::vector<Frame> ExpectFrames(const Envelope& env, std::size_t count) {
  std::vector<Frame> frames = ExtractFrames(env);
  if (frames.size() != count) {
    throw ProtocolError("expected " + std::to_string(count) + " frame(s), got " +
                        std::to_string(frames.size()));
  }
  return frames;
}

Envelope Dispatch(const Envelope& req, Backend& backend) {
  switch (req.type) {
    case MessageType::kPredictActions: {
      if (backend.role() != Role::kPolicy) break;
      const auto frames = ExpectFrames(req, 1);
      const ActionChunk chunk = backend.PredictActions(frames[0], req.header.at("task").get<std::string>());
      chunk.Validate();
      return Reply(req, MessageType::kActions, ToJson(chunk));
    }
    case MessageType::kPredictFrames: {
      if (backend.role() != Role::kWorldModel) break;
      const auto frames = ExpectFrames(req, 1);
      const ActionChunk actions = ActionChunkFromJson(req.header.at("actions"));
      const auto seed = req.header.at("seed").get<std::uint64_t>();
      const std::vector<Frame> out = backend.PredictFrames(frames[0], actions, seed);
      Envelope rep = Reply(req, MessageType::kFrames);
      AttachFrames(rep, out);
      return rep;
    }
    case MessageType::kClassifyChunk: {
      if (backend.role() != Role::kClassifier) break;
      const auto frames = ExtractFrames(req);
      const ChunkLabel label = backend.ClassifyChunk(frames, req.header.at("task").get<std::string>());
      return Reply(req, MessageType::kChunkLabel, {{"label", ToString(label)}});
    }
    case MessageType::kReset:
      backend.Reset();
      return Reply(req, MessageType::kResetOk);
    default:
      return MakeError(req.session_id, "UNSUPPORTED",
                       "unexpected message " + std::string(ToString(req.type)));
  }
  return MakeError(req.session_id, "WRONG_ROLE",
                   std::string(ToString(req.type)) + " sent to a " +
                       std::string(ToString(backend.role())) + " backend");
}

}  // namespace

// ---- Socket ----

Socket& Socket::operator=(Socket&& o) noexcept {
  if (this != &o) {
    Close();
    fd_ = std::exchange(o.fd_, -1);
  }
  return *this;
}

void Socket::Close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

void Socket::ShutdownWrite() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_WR);
}

Socket Socket::ConnectTcp(const std::string& host, int port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* result = nullptr;
  const std::string service = std::to_string(port);
  if (int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &result); rc != 0) {
    throw std::runtime_error("resolve " + host + ": " + ::gai_strerror(rc));
  }
  std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(result, &::freeaddrinfo);
  for (addrinfo* ai = result; ai != nullptr; ai = ai->ai_next) {
    Socket s(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
    if (!s.valid()) continue;
    if (::connect(s.fd(), ai->ai_addr, ai->ai_addrlen) == 0) {
      SetNoDelay(s.fd());
      return s;
    }
  }
  throw std::runtime_error(Errno("connect " + host + ":" + service));
}

std::pair<Socket, Socket> Socket::Pair() {
  int fds[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0) {
    throw std::runtime_error(Errno("socketpair"));
  }
  return {Socket(fds[0]), Socket(fds[1])};
}

void Socket::WriteAll(std::span<const std::uint8_t> bytes) {
  while (!bytes.empty()) {
    const ssize_t n = ::send(fd_, bytes.data(), bytes.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error(Errno("send"));
    }
    bytes = bytes.subspan(static_cast<std::size_t>(n));
  }
}

std::size_t Socket::ReadSome(std::span<std::uint8_t> buffer, std::chrono::milliseconds timeout) {
  for (;;) {
    pollfd pfd{fd_, POLLIN, 0};
    const int rc = ::poll(&pfd, 1, timeout.count() < 0 ? -1 : static_cast<int>(timeout.count()));
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error(Errno("poll"));
    }
    if (rc == 0) throw TimeoutError("no data within " + std::to_string(timeout.count()) + " ms");
    const ssize_t n = ::recv(fd_, buffer.data(), buffer.size(), 0);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      if (errno == ECONNRESET) return 0;
      throw std::runtime_error(Errno("recv"));
    }
    return static_cast<std::size_t>(n);
  }
}

// ---- Connection ----

void Connection::Send(const Envelope& env) { socket_.WriteAll(EncodeEnvelope(env)); }

std::optional<Envelope> Connection::Receive(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  std::array<std::uint8_t, 64 * 1024> buf{};
  for (;;) {
    if (auto env = decoder_.Next()) return env;
    auto remaining = kNoTimeout;
    if (timeout.count() >= 0) {
      remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (remaining.count() < 0) remaining = std::chrono::milliseconds(0);
    }
    const std::size_t n = socket_.ReadSome(buf, remaining);
    if (n == 0) {
      if (decoder_.buffered() == 0) return std::nullopt;
      throw IncompleteMessage("connection closed mid-message");
    }
    decoder_.Feed(std::span(buf).first(n));
  }
}

// ---- Backend defaults ----

ActionChunk Backend::PredictActions(const Frame&, const std::string&) {
  throw std::logic_error("PREDICT_ACTIONS not supported");
}
std::vector<Frame> Backend::PredictFrames(const Frame&, const ActionChunk&, std::uint64_t) {
  throw std::logic_error("PREDICT_FRAMES not supported");
}
ChunkLabel Backend::ClassifyChunk(std::span<const Frame>, const std::string&) {
  throw std::logic_error("CLASSIFY_CHUNK not supported");
}

void ServeConnection(Connection& conn, Backend& backend) {
  bool greeted = false;
  for (;;) {
    std::optional<Envelope> req;
    try {
      req = conn.Receive(kNoTimeout);
    } catch (const std::exception&) {
      return;  // malformed stream: drop the connection
    }
    if (!req) return;

    Envelope rep;
    if (req->type == MessageType::kHello) {
      try {
        const HelloInfo hello = ParseHello(*req);
        if (hello.protocol_version != protocol::kVersion) {
          conn.Send(MakeError(req->session_id, "VERSION", "unsupported protocol version"));
          return;
        }
        if (hello.role != backend.role()) {
          conn.Send(MakeError(req->session_id, "WRONG_ROLE",
                              "backend serves " + std::string(ToString(backend.role()))));
          return;
        }
        backend.OnHello(hello);
        greeted = true;
        rep = Reply(*req, MessageType::kHelloOk,
                    {{"role", ToString(backend.role())}, {"protocol_version", protocol::kVersion}});
      } catch (const std::exception& e) {
        rep = MakeError(req->session_id, "BAD_HELLO", e.what());
      }
    } else if (!greeted) {
      rep = MakeError(req->session_id, "NO_SESSION", "HELLO required first");
    } else {
      try {
        rep = Dispatch(*req, backend);
      } catch (const std::exception& e) {
        rep = MakeError(req->session_id, "BACKEND_FAILURE", e.what());
      }
    }
    try {
      conn.Send(rep);
    } catch (const std::exception&) {
      return;
    }
  }
}

// ---- Session ----

struct Session::Impl {
  Connection conn;
  std::jthread server;  // set for in-process backends
  std::unique_ptr<Backend> backend;

  explicit Impl(Socket s) : conn(std::move(s)) {}
  ~Impl() {
    conn.socket().Close();
    if (server.joinable()) server.join();
  }
};

Session::Session(std::unique_ptr<Impl> impl, Role role, std::string id, SessionOptions options)
    : impl_(std::move(impl)), role_(role), id_(std::move(id)), options_(options) {}
Session::Session(Session&&) noexcept = default;
Session& Session::operator=(Session&&) noexcept = default;
Session::~Session() = default;

Session Session::OverTcp(const std::string& host, int port, const HelloInfo& hello,
                         SessionOptions options) {
  auto impl = std::make_unique<Impl>(Socket::ConnectTcp(host, port));
  Session s(std::move(impl), hello.role, NextSessionId(), options);
  s.Handshake(hello);
  return s;
}

Session Session::InProcess(std::unique_ptr<Backend> backend, const HelloInfo& hello,
                           SessionOptions options) {
  auto [client, server] = Socket::Pair();
  auto impl = std::make_unique<Impl>(std::move(client));
  impl->backend = std::move(backend);
  impl->server = std::jthread([sock = std::move(server), b = impl->backend.get()]() mutable {
    Connection conn(std::move(sock));
    ServeConnection(conn, *b);
  });
  Session s(std::move(impl), hello.role, NextSessionId(), options);
  s.Handshake(hello);
  return s;
}

void Session::Handshake(const HelloInfo& hello) {
  const Envelope rep = Call(MakeHello(id_, hello));
  if (rep.type != MessageType::kHelloOk) throw ProtocolError("expected HELLO_OK");
}

Envelope Session::Call(Envelope request) {
  if (!impl_) throw std::logic_error("session is closed");
  request.session_id = id_;
  impl_->conn.Send(request);
  std::optional<Envelope> rep = impl_->conn.Receive(options_.timeout);
  if (!rep) throw ProtocolError("backend closed the connection");
  if (rep->session_id != id_) throw ProtocolError("reply for foreign session " + rep->session_id);
  if (rep->type == MessageType::kError) {
    throw BackendError(rep->header.value("code", "ERROR"), rep->header.value("message", ""));
  }
  return std::move(*rep);
}

void Session::Close() { impl_.reset(); }

ActionChunk RequestActions(Session& session, const Frame& observation, const std::string& task) {
  Envelope req{MessageType::kPredictActions, session.id(), {{"task", task}}, {}};
  AttachFrames(req, std::span(&observation, 1));
  const Envelope rep = session.Call(std::move(req));
  if (rep.type != MessageType::kActions) throw ProtocolError("expected ACTIONS");
  ActionChunk chunk = ActionChunkFromJson(rep.header);
  try {
    chunk.Validate();
  } catch (const std::invalid_argument& e) {
    throw ProtocolError(std::string("invalid action chunk from policy: ") + e.what());
  }
  return chunk;
}

std::vector<Frame> RequestFrames(Session& session, const Frame& state, const ActionChunk& actions,
                                 std::uint64_t seed) {
  if (actions.rate_hz != protocol::kModelRateHz) {
    throw std::invalid_argument("world model actions must be at 10 Hz");
  }
  Envelope req{MessageType::kPredictFrames, session.id(), Json::object(), {}};
  req.header["actions"] = ToJson(actions);
  req.header["seed"] = seed;
  AttachFrames(req, std::span(&state, 1));
  const Envelope rep = session.Call(std::move(req));
  if (rep.type != MessageType::kFrames) throw ProtocolError("expected FRAMES");
  std::vector<Frame> frames = ExtractFrames(rep);
  if (frames.size() != actions.size()) {
    throw ProtocolError("world model returned " + std::to_string(frames.size()) + " frames, expected " +
                        std::to_string(actions.size()));
  }
  for (const Frame& f : frames) {
    if (!f.SameSize(state)) throw ProtocolError("world model changed the frame size");
  }
  return frames;
}

ChunkLabel RequestChunkLabel(Session& session, std::span<const Frame> chunk, const std::string& task) {
  Envelope req{MessageType::kClassifyChunk, session.id(), {{"task", task}}, {}};
  AttachFrames(req, chunk);
  const Envelope rep = session.Call(std::move(req));
  if (rep.type != MessageType::kChunkLabel) throw ProtocolError("expected CHUNK_LABEL");
  const auto label = ParseChunkLabel(rep.header.value("label", ""));
  if (!label) throw ProtocolError("unknown chunk label " + rep.header.value("label", ""));
  return *label;
}

void RequestReset(Session& session) {
  const Envelope rep = session.Call({MessageType::kReset, session.id(), Json::object(), {}});
  if (rep.type != MessageType::kResetOk) throw ProtocolError("expected RESET_OK");
}

// ---- TcpServer ----

TcpServer::TcpServer(int port, Factory factory) : factory_(std::move(factory)) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (listen_fd_ < 0) throw std::runtime_error(Errno("socket"));
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(listen_fd_, 64) != 0) {
    const std::string msg = Errno("bind/listen on port " + std::to_string(port));
    ::close(listen_fd_);
    throw std::runtime_error(msg);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpServer::~TcpServer() {
  Stop();
  {
    std::lock_guard lock(mu_);
    for (int fd : client_fds_) ::shutdown(fd, SHUT_RDWR);
  }
  workers_.clear();  // joins
  ::close(listen_fd_);
}

void TcpServer::Run() {
  while (!stopping_) {
    pollfd pfd{listen_fd_, POLLIN, 0};
    if (::poll(&pfd, 1, 100) <= 0) continue;
    const int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) continue;
    SetNoDelay(fd);
    std::lock_guard lock(mu_);
    client_fds_.push_back(fd);
    workers_.emplace_back([this, fd] {
      {
        Connection conn{Socket(fd)};
        try {
          auto backend = factory_();
          ServeConnection(conn, *backend);
        } catch (const std::exception& e) {
          std::cerr << "backend connection failed: " << e.what() << "\n";
        }
        std::lock_guard inner(mu_);
        std::erase(client_fds_, fd);
      }
    });
  }
}

void TcpServer::Stop() { stopping_ = true; }

}  // namespace wmeval
