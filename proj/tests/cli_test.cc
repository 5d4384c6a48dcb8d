// Copyright 2026 The wmeval Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>
#include <httplib.h>
#include <netinet/in.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <fstream>
#include <thread>

#include "test_util.h"
#include "wmeval/store.h"
#include "wmeval/video_io.h"

namespace wmeval {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code = -1;
  std::string out;
};

Result Cli(const std::string& args) {
  const std::string cmd = std::string(WMEVAL_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  Result r;
  char buf[4096];
  for (std::size_t n; (n = std::fread(buf, 1, sizeof(buf), pipe)) > 0;) r.out.append(buf, n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

int FreePort() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
  socklen_t len = sizeof(addr);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return ntohs(addr.sin_port);
}

// Runs the CLI in the background until destroyed.
class Background {
 public:
  explicit Background(std::vector<std::string> args) {
    pid_ = ::fork();
    if (pid_ == 0) {
      std::vector<char*> argv;
      static std::string exe = WMEVAL_CLI_PATH;
      argv.push_back(exe.data());
      for (std::string& a : args) argv.push_back(a.data());
      argv.push_back(nullptr);
      std::freopen("/dev/null", "w", stdout);
      ::execv(exe.c_str(), argv.data());
      ::_exit(127);
    }
  }
  ~Background() {
    ::kill(pid_, SIGTERM);
    int status = 0;
    ::waitpid(pid_, &status, 0);
    exited_cleanly_ = WIFEXITED(status) && WEXITSTATUS(status) == 0;
  }

 private:
  pid_t pid_ = -1;
  bool exited_cleanly_ = false;
};

void WaitForPort(int port) {
  for (int i = 0; i < 100; ++i) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    const bool ok = ::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0;
    ::close(fd);
    if (ok) return;
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  FAIL() << "port " << port << " never opened";
}

void WriteManifest(const fs::path& path, const RunManifest& m) { std::ofstream(path) << m.ToJson().dump(2); }

TEST(Cli, HelpAndBadArgs) {
  EXPECT_EQ(Cli("--help").code, 0);
  EXPECT_NE(Cli("").code, 0);
  EXPECT_NE(Cli("run /does/not/exist.json").code, 0);
  EXPECT_NE(Cli("report").code, 0);
}

TEST(Cli, RunClassifyIngestReport) {
  wmtest::TempDir dir;
  const RunManifest m = wmtest::MockManifest("cli", {48}, 2, {{"precise", "mock://policy?script=precise"},
                                                             {"idle", "mock://policy?script=idle"}});
  WriteManifest(dir / "m.json", m);
  const std::string store = (dir / "store").string();

  const Result run = Cli("run " + (dir / "m.json").string() + " --store " + store);
  ASSERT_EQ(run.code, 0) << run.out;
  EXPECT_EQ(Json::parse(run.out).at("rollouts"), 12);

  const Result cls = Cli("classify --run cli --store " + store);
  ASSERT_EQ(cls.code, 0) << cls.out;
  EXPECT_EQ(Json::parse(cls.out).at("labeled"), 12);

  WritePng(dir / "f.png", Frame(64, 64));
  {
    std::ofstream csv(dir / "real.csv");
    csv << "policy_id,task,trial,outcome,initial_frame_path\n";
    csv << "precise,task0,1,success,f.png\nprecise,task0,2,failure,f.png\n";
    csv << "idle,task0,1,failure,f.png\nidle,task0,2,failure,f.png\n";
  }
  const Result ing = Cli("ingest-real " + (dir / "real.csv").string() + " --run cli --store " + store);
  ASSERT_EQ(ing.code, 0) << ing.out;

  const Result rep = Cli("report --run cli --store " + store);
  ASSERT_EQ(rep.code, 0) << rep.out;
  const Json j = Json::parse(rep.out);
  EXPECT_EQ(j.at("pairs").size(), 2u);
  EXPECT_TRUE(fs::exists(fs::path(store) / "runs/cli/report.json"));

  EXPECT_NE(Cli("classify --run missing --store " + store).code, 0);
}

TEST(Cli, ReportFromPairsCsv) {
  const Result r = Cli(std::string("report --pairs ") + WMEVAL_TEST_DATA + "/chole_pairs.csv");
  ASSERT_EQ(r.code, 0);
  const Json j = Json::parse(r.out);
  EXPECT_NEAR(j.at("mbe").at("mbe").get<double>(), 1.0 / 9.0, 1e-12);
}

TEST(Cli, Fidelity) {
  wmtest::TempDir dir;
  std::mt19937_64 rng(1);
  VideoClip a, b;
  for (int i = 0; i < 4; ++i) {
    a.frames.push_back(wmtest::RandomFrame(rng, 32, 32));
    b.frames.push_back(i < 2 ? a.frames.back() : wmtest::RandomFrame(rng, 32, 32));
  }
  WriteVframes(dir / "a.vframes", a);
  WriteVframes(dir / "b.vframes", b);
  const Result r = Cli("fidelity --generated " + (dir / "a.vframes").string() + " --truth " +
                       (dir / "b.vframes").string() + " --out " + (dir / "c.csv").string());
  ASSERT_EQ(r.code, 0);
  const std::string csv = ReadFileText(dir / "c.csv");
  EXPECT_NE(csv.find("\n0,0,1\n"), std::string::npos) << csv;
  EXPECT_NE(csv.find("\n1,0,1\n"), std::string::npos) << csv;
}

TEST(Cli, ServeMockBackendsOverTcp) {
  wmtest::TempDir dir;
  const int pp = FreePort(), wp = FreePort();
  std::ofstream(dir / "world.json") << R"({"false_attach_prob": 0.0})";
  Background policy({"serve-mock", "--role", "policy", "--port", std::to_string(pp)});
  Background world({"serve-mock", "--role", "world-model", "--port", std::to_string(wp), "--params",
                    (dir / "world.json").string()});
  WaitForPort(pp);
  WaitForPort(wp);

  RunManifest tcp = wmtest::MockManifest("tcp", {36}, 2, {{"p", "tcp://127.0.0.1:" + std::to_string(pp)}});
  tcp.world_model = "tcp://127.0.0.1:" + std::to_string(wp);
  WriteManifest(dir / "tcp.json", tcp);
  RunManifest local = wmtest::MockManifest("tcp", {36}, 2, {{"p", "mock://policy"}});
  local.world_model = "mock://world-model";
  WriteManifest(dir / "local.json", local);

  ASSERT_EQ(Cli("run " + (dir / "tcp.json").string() + " --store " + (dir / "a").string()).code, 0);
  ASSERT_EQ(Cli("run " + (dir / "local.json").string() + " --store " + (dir / "b").string()).code, 0);
  // Same pixels whether the backends run in-process or behind sockets.
  auto a = wmtest::ReadTree(dir / "a/runs/tcp/rollouts");
  auto b = wmtest::ReadTree(dir / "b/runs/tcp/rollouts");
  EXPECT_EQ(a, b);
}

TEST(Cli, ServeApi) {
  wmtest::TempDir dir;
  WriteManifest(dir / "m.json", wmtest::MockManifest("api", {12}, 1, {{"p", "mock://policy"}}));
  ASSERT_EQ(Cli("run " + (dir / "m.json").string() + " --store " + (dir / "s").string()).code, 0);
  const int port = FreePort();
  Background api({"serve-api", "--run", "api", "--store", (dir / "s").string(), "--port", std::to_string(port)});
  WaitForPort(port);
  httplib::Client client("127.0.0.1", port);
  auto res = client.Get("/runs/api/rollouts");
  ASSERT_TRUE(res);
  EXPECT_EQ(Json::parse(res->body).at("rollouts").size(), 3u);
}

}  // namespace
}  // namespace wmeval
