// Copyright 2026 The wmeval Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef WMEVAL_SESSION_H_
#define WMEVAL_SESSION_H_

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "wmeval/protocol.h"

namespace wmeval {

// Owning wrapper around a connected stream socket (TCP or AF_UNIX).
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Socket& operator=(Socket&& o) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { Close(); }

  static Socket ConnectTcp(const std::string& host, int port);
  static std::pair<Socket, Socket> Pair();

  bool valid() const { return fd_ >= 0; }
  int fd() const { return fd_; }
  void Close();
  void ShutdownWrite();

  void WriteAll(std::span<const std::uint8_t> bytes);
  // Reads what is available, waiting at most `timeout`. Returns 0 on EOF.
  // Throws TimeoutError when nothing arrives in time.
  std::size_t ReadSome(std::span<std::uint8_t> buffer, std::chrono::milliseconds timeout);

 private:
  int fd_ = -1;
};

// A socket plus framing state.
class Connection {
 public:
  explicit Connection(Socket socket) : socket_(std::move(socket)) {}

  void Send(const Envelope& env);
  // Blocks until one envelope arrives. Returns nullopt on a clean EOF at a
  // message boundary; EOF mid-message throws IncompleteMessage.
  std::optional<Envelope> Receive(std::chrono::milliseconds timeout);

  Socket& socket() { return socket_; }

 private:
  Socket socket_;
  StreamDecoder decoder_;
};

// Server side of a backend. Methods a role does not support are left at
// their defaults, which answer with an ERROR envelope.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual Role role() const = 0;
  virtual void OnHello(const HelloInfo& /*hello*/) {}
  virtual ActionChunk PredictActions(const Frame& observation, const std::string& task);
  virtual std::vector<Frame> PredictFrames(const Frame& state, const ActionChunk& actions,
                                           std::uint64_t seed);
  virtual ChunkLabel ClassifyChunk(std::span<const Frame> frames, const std::string& task);
  virtual void Reset() {}
};

// Serves one connection until EOF or a protocol error. Backend exceptions
// become ERROR envelopes and the connection stays open.
void ServeConnection(Connection& conn, Backend& backend);

struct SessionOptions {
  std::chrono::milliseconds timeout{static_cast<long>(protocol::kDefaultTimeoutSeconds * 1000)};
};

// Client end of one logical session. Requests are strictly serial.
class Session {
 public:
  Session(Session&&) noexcept;
  Session& operator=(Session&&) noexcept;
  ~Session();

  static Session OverTcp(const std::string& host, int port, const HelloInfo& hello,
                         SessionOptions options = {});
  // Runs `backend` on a thread behind a socketpair; traffic still goes
  // through the full wire protocol.
  static Session InProcess(std::unique_ptr<Backend> backend, const HelloInfo& hello,
                           SessionOptions options = {});

  Role role() const { return role_; }
  const std::string& id() const { return id_; }

  // Sends `request` and waits for the reply. ERROR replies throw
  // BackendError.
  Envelope Call(Envelope request);
  void Close();

 private:
  struct Impl;
  Session(std::unique_ptr<Impl> impl, Role role, std::string id, SessionOptions options);
  void Handshake(const HelloInfo& hello);

  std::unique_ptr<Impl> impl_;
  Role role_ = Role::kPolicy;
  std::string id_;
  SessionOptions options_;
};

ActionChunk RequestActions(Session& session, const Frame& observation, const std::string& task);
// Returns exactly `actions.size()` frames the size of `state`; anything else
// from the backend is a ProtocolError.
std::vector<Frame> RequestFrames(Session& session, const Frame& state, const ActionChunk& actions,
                                 std::uint64_t seed);
ChunkLabel RequestChunkLabel(Session& session, std::span<const Frame> chunk,
                             const std::string& task);
void RequestReset(Session& session);

// Accepts TCP connections and serves each on its own thread with a fresh
// backend from `factory`.
class TcpServer {
 public:
  using Factory = std::function<std::unique_ptr<Backend>()>;
  TcpServer(int port, Factory factory);
  ~TcpServer();
  TcpServer(const TcpServer&) = delete;
  TcpServer& operator=(const TcpServer&) = delete;

  int port() const { return port_; }
  void Run();  // blocks until Stop()
  void Stop();

 private:
  int listen_fd_ = -1;
  int port_ = 0;
  Factory factory_;
  std::atomic<bool> stopping_{false};
  std::mutex mu_;
  std::vector<std::jthread> workers_;
  std::vector<int> client_fds_;
};

}  // namespace wmeval

#endif  // WMEVAL_SESSION_H_
