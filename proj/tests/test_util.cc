// Copyright 2026 The wmeval Authors
// SPDX-License-Identifier: Apache-2.0

#include "test_util.h"

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>

#include "wmeval/runner.h"

namespace wmtest {
namespace fs = std::filesystem;
using namespace wmeval;

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          ("wmeval_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter.fetch_add(1)));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

Frame RandomFrame(std::mt19937_64& rng, int w, int h) {
  Frame f(w, h);
  std::uniform_int_distribution<int> byte(0, 255);
  for (auto& b : f.data) b = static_cast<std::uint8_t>(byte(rng));
  return f;
}

namespace {

std::string RandomText(std::mt19937_64& rng, int max_len) {
  static const std::vector<std::string> pieces = {"a", "Z", "0", "_", " ", "\"", "\\", "\n", "\xc3\xa9",
                                                  "\xe2\x82\xac", "\xf0\x9f\xa4\x96", "{", "}"};
  std::uniform_int_distribution<int> len(0, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1);
  std::string s;
  for (int i = len(rng); i > 0; --i) s += pieces[pick(rng)];
  return s;
}

Json RandomValue(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> kind(0, depth > 2 ? 4 : 6);
  switch (kind(rng)) {
    case 0:
      return nullptr;
    case 1:
      return std::uniform_int_distribution<int>(0, 1)(rng) == 1;
    case 2:
      return std::uniform_int_distribution<std::int64_t>(-1'000'000'000'000, 1'000'000'000'000)(rng);
    case 3:
      // Finite doubles survive the JSON round-trip exactly.
      return std::uniform_real_distribution<double>(-1e6, 1e6)(rng);
    case 4:
      return RandomText(rng, 12);
    case 5: {
      Json arr = Json::array();
      for (int i = std::uniform_int_distribution<int>(0, 4)(rng); i > 0; --i) arr.push_back(RandomValue(rng, depth + 1));
      return arr;
    }
    default: {
      Json obj = Json::object();
      for (int i = std::uniform_int_distribution<int>(0, 4)(rng); i > 0; --i) {
        obj["k" + RandomText(rng, 6)] = RandomValue(rng, depth + 1);
      }
      return obj;
    }
  }
}

}  // namespace

Envelope RandomEnvelope(std::mt19937_64& rng) {
  Envelope env;
  env.type = static_cast<MessageType>(
      std::uniform_int_distribution<int>(0, static_cast<int>(MessageType::kError))(rng));
  env.session_id = RandomText(rng, 16);
  for (int i = std::uniform_int_distribution<int>(0, 6)(rng); i > 0; --i) {
    env.header["f" + RandomText(rng, 8)] = RandomValue(rng, 0);
  }
  const int mode = std::uniform_int_distribution<int>(0, 2)(rng);
  if (mode == 1) {
    // A single strip of pixels: any payload length that is a multiple of 3.
    const Frame strip = RandomFrame(rng, std::uniform_int_distribution<int>(1, 1700)(rng), 1);
    AttachFrames(env, std::span(&strip, 1));
  } else if (mode == 2) {
    const int n = std::uniform_int_distribution<int>(1, 3)(rng);
    const int w = std::uniform_int_distribution<int>(1, 20)(rng);
    const int h = std::uniform_int_distribution<int>(1, 20)(rng);
    std::vector<Frame> frames;
    for (int i = 0; i < n; ++i) frames.push_back(RandomFrame(rng, w, h));
    AttachFrames(env, frames);
  }
  return env;
}

Quat RandomUnitQuat(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Quat q{g(rng), g(rng), g(rng), g(rng)};
  const double n = std::sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z);
  return {q.w / n, q.x / n, q.y / n, q.z / n};
}

ActionChunk RandomChunk(std::mt19937_64& rng, int rate_hz, int n, int arm_count) {
  std::uniform_real_distribution<double> d(-0.01, 0.01), jaw(0.0, 1.0), angle(-0.1, 0.1);
  ActionChunk chunk;
  chunk.rate_hz = rate_hz;
  for (int i = 0; i < n; ++i) {
    Action a;
    a.arm_count = arm_count;
    for (int k = 0; k < arm_count; ++k) {
      ArmCommand& c = a.arm(k);
      c.translation = {d(rng), d(rng), d(rng)};
      c.rotation = Quat::FromAxisAngle({d(rng), d(rng), d(rng) + 0.02}, angle(rng));
      c.jaw = jaw(rng);
    }
    chunk.actions.push_back(a);
  }
  return chunk;
}

NetPose IntegrateChunk(const ActionChunk& chunk, int arm) {
  NetPose pose;
  for (const Action& a : chunk.actions) {
    const ArmCommand& c = a.arm(arm);
    pose.translation.x += c.translation.x;
    pose.translation.y += c.translation.y;
    pose.translation.z += c.translation.z;
    const Quat& p = pose.rotation;
    const Quat& q = c.rotation;
    pose.rotation = {p.w * q.w - p.x * q.x - p.y * q.y - p.z * q.z, p.w * q.x + p.x * q.w + p.y * q.z - p.z * q.y,
                     p.w * q.y - p.x * q.z + p.y * q.w + p.z * q.x, p.w * q.z + p.x * q.y - p.y * q.x + p.z * q.w};
  }
  return pose;
}

std::vector<ChunkSpan> PlanChunksOracle(int len, int chunk, int overlap) {
  if (len <= chunk) return {{0, len}};
  const int stride = chunk - overlap;
  const int regular = (len - chunk) / stride + 1;
  std::vector<ChunkSpan> spans;
  for (int i = 0; i < regular; ++i) spans.push_back({i * stride, i * stride + chunk});
  if (spans.back().end < len) spans.push_back({len - chunk, len});
  return spans;
}

double MmrvOracle(const std::vector<double>& sim, const std::vector<double>& real) {
  const std::size_t n = sim.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double worst = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const bool sim_less = sim[i] < sim[j];
      const bool real_less = real[i] < real[j];
      if (sim_less != real_less) worst = std::max(worst, std::fabs(real[i] - real[j]));
    }
    total += worst;
  }
  return total / static_cast<double>(n);
}

double IccOracle(const std::vector<std::vector<double>>& m) {
  const double n = static_cast<double>(m.size());
  const double k = static_cast<double>(m.front().size());
  double grand = 0.0;
  for (const auto& row : m) {
    for (double v : row) grand += v;
  }
  grand /= n * k;
  double ss_rows = 0.0, ss_cols = 0.0, ss_total = 0.0;
  for (const auto& row : m) {
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= k;
    ss_rows += k * (mean - grand) * (mean - grand);
    for (double v : row) ss_total += (v - grand) * (v - grand);
  }
  for (std::size_t c = 0; c < m.front().size(); ++c) {
    double mean = 0.0;
    for (const auto& row : m) mean += row[c];
    mean /= n;
    ss_cols += n * (mean - grand) * (mean - grand);
  }
  const double ss_err = ss_total - ss_rows - ss_cols;
  const double ms_r = ss_rows / (n - 1);
  const double ms_c = ss_cols / (k - 1);
  const double ms_e = ss_err / ((n - 1) * (k - 1));
  return (ms_r - ms_e) / (ms_r + (k - 1) * ms_e + k * (ms_c - ms_e) / n);
}

double PearsonROracle(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

double L1Oracle(const Frame& a, const Frame& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) s += std::fabs(double(a.data[i]) - double(b.data[i]));
  return s / static_cast<double>(a.data.size());
}

double SsimOracle(const Frame& a, const Frame& b) {
  constexpr int win = 11;
  double g[win], gsum = 0.0;
  for (int i = 0; i < win; ++i) {
    g[i] = std::exp(-((i - 5.0) * (i - 5.0)) / (2.0 * 1.5 * 1.5));
    gsum += g[i];
  }
  for (double& v : g) v /= gsum;
  auto luma = [](const Frame& f, int x, int y) {
    const std::uint8_t* p = f.pixel(x, y);
    return 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
  };
  const double c1 = std::pow(0.01 * 255, 2), c2 = std::pow(0.03 * 255, 2);
  double total = 0.0;
  int count = 0;
  for (int y0 = 0; y0 + win <= a.height; ++y0) {
    for (int x0 = 0; x0 + win <= a.width; ++x0) {
      double mx = 0, my = 0;
      for (int v = 0; v < win; ++v) {
        for (int u = 0; u < win; ++u) {
          mx += g[u] * g[v] * luma(a, x0 + u, y0 + v);
          my += g[u] * g[v] * luma(b, x0 + u, y0 + v);
        }
      }
      double vx = 0, vy = 0, cxy = 0;
      for (int v = 0; v < win; ++v) {
        for (int u = 0; u < win; ++u) {
          const double dx = luma(a, x0 + u, y0 + v) - mx, dy = luma(b, x0 + u, y0 + v) - my;
          vx += g[u] * g[v] * dx * dx;
          vy += g[u] * g[v] * dy * dy;
          cxy += g[u] * g[v] * dx * dy;
        }
      }
      total += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  }
  return total / count;
}

std::map<std::string, std::string> ReadTree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    out[fs::relative(entry.path(), root).generic_string()] = ss.str();
  }
  return out;
}

RunManifest MockManifest(const std::string& run_id, const std::vector<int>& step_limits, int trials,
                         const std::vector<PolicyEntry>& policies, const std::string& world_query) {
  RunManifest m;
  m.run_id = run_id;
  for (std::size_t i = 0; i < step_limits.size(); ++i) {
    TaskDefinition t;
    t.name = "task" + std::to_string(i);
    t.step_limit = step_limits[i];
    t.rubric = {"needle grasped", "needle placed on the goal"};
    m.tasks.push_back(t);
  }
  m.policies = policies;
  m.world_model = "mock://world-model" + (world_query.empty() ? "" : "?" + world_query);
  m.classifier = "mock://classifier";
  m.trials_per_task = trials;
  m.created_at = "2026-01-01T00:00:00Z";
  return m;
}

BiasResult RunBiasExperiment(const BiasExperiment& c, const fs::path& store_root) {
  const std::vector<PolicyEntry> policies = {
      {"precise", "mock://policy?script=precise"},
      {"near_miss", "mock://policy?script=near_miss&offset=" + std::to_string(c.near_offset)},
      {"wide_miss", "mock://policy?script=near_miss&offset=" + std::to_string(c.wide_offset)},
  };
  const std::vector<int> limits(static_cast<std::size_t>(c.tasks), c.step_limit);
  RunStore store(store_root);

  auto run = [&](const std::string& id, double p) {
    RunManifest m = MockManifest(id, limits, c.trials, policies, "false_attach_prob=" + std::to_string(p));
    m.seeds = c.seeds;
    m.parallelism = c.parallelism;
    const RunSummary s = ExecuteRun(m, store_root);
    if (s.failed != 0) throw std::runtime_error(id + ": " + std::to_string(s.failed) + " rollouts failed");
    const ClassifySummary cs = ClassifyRun(store, id, std::nullopt, c.parallelism);
    if (!cs.unlabeled.empty()) throw std::runtime_error(id + ": unlabeled " + cs.unlabeled.front());
    return SimSuccessRates(m, store.LoadLabels(id), {std::string(kClassifierRater)});
  };
  const auto real = run("bias_real", 0.0);
  const auto sim = run("bias_sim", c.false_attach_prob);

  BiasResult result;
  std::vector<std::string> unmatched;
  result.report = BuildReport(PairRates(sim, real, unmatched));
  // Precise succeeds everywhere, the wide miss snaps the needle far enough
  // to read as an anomaly, and only the near miss turns a false attach into
  // a success. Per task the bias is p for one policy in three.
  result.analytic_mbe = c.false_attach_prob / 3.0;
  result.near_miss_rollouts = static_cast<std::size_t>(c.tasks * c.trials) * c.seeds.size();
  for (const auto& [key, v] : sim) result.sim_rate[key.first] += v / c.tasks;
  for (const auto& [key, v] : real) result.real_rate[key.first] += v / c.tasks;
  return result;
}

}  // namespace wmtest
