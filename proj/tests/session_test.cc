// Copyright 2026 The wmeval Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <thread>

#include "wmeval/mock_backends.h"
#include "wmeval/session.h"

namespace wmeval {
namespace {

class EchoWorld : public Backend {
 public:
  explicit EchoWorld(int extra = 0, std::chrono::milliseconds delay = {}) : extra_(extra), delay_(delay) {}
  Role role() const override { return Role::kWorldModel; }
  std::vector<Frame> PredictFrames(const Frame& state, const ActionChunk& actions, std::uint64_t) override {
    std::this_thread::sleep_for(delay_);
    return std::vector<Frame>(actions.size() + static_cast<std::size_t>(extra_), state);
  }

 private:
  int extra_;
  std::chrono::milliseconds delay_;
};

ActionChunk ZeroChunk(int n) {
  ActionChunk c;
  c.actions.resize(static_cast<std::size_t>(n));
  return c;
}

HelloInfo Hello(Role role) {
  HelloInfo h;
  h.role = role;
  h.task_names = {"pick"};
  return h;
}

TEST(Session, InProcessFrames) {
  Session s = Session::InProcess(std::make_unique<EchoWorld>(), Hello(Role::kWorldModel));
  Frame f(64, 64);
  f.data[7] = 9;
  const auto frames = RequestFrames(s, f, ZeroChunk(12), 1);
  ASSERT_EQ(frames.size(), 12u);
  for (const Frame& g : frames) EXPECT_EQ(g, f);
}

TEST(Session, WrongFrameCountIsProtocolError) {
  Session s = Session::InProcess(std::make_unique<EchoWorld>(1), Hello(Role::kWorldModel));
  EXPECT_THROW(RequestFrames(s, Frame(64, 64), ZeroChunk(12), 1), ProtocolError);
}

TEST(Session, UnsupportedCallIsBackendErrorAndConnectionSurvives) {
  Session s = Session::InProcess(std::make_unique<EchoWorld>(), Hello(Role::kWorldModel));
  EXPECT_THROW(RequestActions(s, Frame(64, 64), "pick"), BackendError);
  EXPECT_EQ(RequestFrames(s, Frame(64, 64), ZeroChunk(2), 1).size(), 2u);
}

TEST(Session, Timeout) {
  SessionOptions options{std::chrono::milliseconds(50)};
  Session s = Session::InProcess(std::make_unique<EchoWorld>(0, std::chrono::milliseconds(400)),
                                 Hello(Role::kWorldModel), options);
  EXPECT_THROW(RequestFrames(s, Frame(8, 8), ZeroChunk(1), 1), TimeoutError);
}

TEST(Session, RoleMismatchRejected) {
  EXPECT_ANY_THROW(Session::InProcess(std::make_unique<EchoWorld>(), Hello(Role::kPolicy)));
}

TEST(Session, OverTcp) {
  TcpServer server(0, [] { return std::make_unique<EchoWorld>(); });
  std::jthread loop([&] { server.Run(); });
  {
    Session a = Session::OverTcp("127.0.0.1", server.port(), Hello(Role::kWorldModel));
    Session b = Session::OverTcp("127.0.0.1", server.port(), Hello(Role::kWorldModel));
    EXPECT_EQ(RequestFrames(a, Frame(16, 16), ZeroChunk(3), 1).size(), 3u);
    EXPECT_EQ(RequestFrames(b, Frame(16, 16), ZeroChunk(5), 1).size(), 5u);
    RequestReset(a);
  }
  server.Stop();
}

TEST(Session, UnknownTaskSurfacesAsBackendError) {
  mock::MockConfig config;
  config.tasks = {"pick"};
  HelloInfo h = Hello(Role::kClassifier);
  Session s = Session::InProcess(mock::MakeBackend(Role::kClassifier, config), h);
  std::vector<Frame> chunk(4, Frame(64, 64));
  EXPECT_THROW(RequestChunkLabel(s, chunk, "juggle"), BackendError);
}

TEST(Session, ConnectRefused) {
  EXPECT_ANY_THROW(Session::OverTcp("127.0.0.1", 1, Hello(Role::kPolicy), {std::chrono::milliseconds(500)}));
}

}  // namespace
}  // namespace wmeval
