// Copyright 2026 The wmeval Authors
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>
#include <csignal>
#include <iostream>
#include <thread>

#include "wmeval/api.h"
#include "wmeval/fidelity.h"
#include "wmeval/mock_backends.h"
#include "wmeval/report.h"
#include "wmeval/runner.h"
#include "wmeval/video_io.h"

namespace {

using namespace wmeval;

std::vector<std::string> SplitCommas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Blocks SIGINT/SIGTERM in every thread and calls `stop` from a watcher
// thread when one arrives.
std::jthread StopOnSignal(std::function<void()> stop) {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  return std::jthread([set, stop = std::move(stop)] {
    int sig = 0;
    sigwait(&set, &sig);
    stop();
  });
}

int CmdRun(const std::string& manifest_path, const std::string& store, int parallelism) {
  RunManifest m = RunManifest::Load(manifest_path);
  if (parallelism > 0) m.parallelism = parallelism;
  const RunSummary s = ExecuteRun(m, store, &std::cerr);
  std::cout << Json{{"run_id", m.run_id}, {"rollouts", s.rollouts}, {"failed", s.failed}, {"errors", s.errors}}.dump(2)
            << "\n";
  return s.failed == 0 && s.errors.empty() ? 0 : 3;
}

int CmdClassify(const std::string& run, const std::string& store_root, const std::string& classifier,
                int parallelism) {
  RunStore store(store_root);
  const std::optional<std::string> ep = classifier.empty() ? std::nullopt : std::optional(classifier);
  const ClassifySummary s = ClassifyRun(store, run, ep, parallelism, &std::cerr);
  std::cout << Json{{"labeled", s.labeled}, {"cached", s.cached}, {"unlabeled", s.unlabeled}}.dump(2) << "\n";
  return s.unlabeled.empty() ? 0 : 3;
}

int CmdIngest(const std::string& file, const std::string& run, const std::string& store_root) {
  RunStore store(store_root);
  store.LoadManifest(run);
  const std::vector<RealResult> results = IngestRealResults(file);
  store.WriteRealResults(run, results);
  std::cout << "ingested " << results.size() << " real trials into " << run << "\n";
  return 0;
}

int CmdReport(const std::string& run, const std::string& store_root, const std::string& raters,
              const std::string& icc_raters, const std::string& pairs) {
  CampaignReport report;
  if (!pairs.empty()) {
    report = BuildReport(ParsePairsCsv(ReadFileText(pairs)));
  } else {
    if (run.empty()) throw std::invalid_argument("report needs --run or --pairs");
    RunStore store(store_root);
    ReportOptions options;
    options.sim_raters = SplitCommas(raters);
    options.icc_raters = SplitCommas(icc_raters);
    report = ReportForRun(store, run, options);
    WriteReport(store, run, report);
  }
  std::cout << report.ToJson().dump(2) << "\n";
  return 0;
}

int CmdServeMock(const std::string& role_name, int port, const std::string& params) {
  const std::optional<Role> role = mock::ParseRoleName(role_name);
  if (!role) throw std::invalid_argument("unknown role '" + role_name + "'");
  const mock::MockConfig config =
      params.empty() ? mock::MockConfig{} : mock::MockConfig::FromJson(Json{{"params", params}});
  TcpServer server(port, [role, config] { return mock::MakeBackend(*role, config); });
  std::jthread watcher = StopOnSignal([&server] { server.Stop(); });
  std::cout << "serving " << role_name << " on port " << server.port() << std::endl;
  server.Run();
  return 0;
}

int CmdServeApi(const std::string& run, const std::string& store_root, const std::string& host, int port) {
  RunStore store(store_root);
  if (!store.HasRun(run)) throw std::invalid_argument("unknown run '" + run + "' in " + store_root);
  ApiServer api(store, run);
  const int bound = api.Bind(host, port);
  std::jthread watcher = StopOnSignal([&api] { api.Stop(); });
  std::cout << "serving run " << run << " on http://" << host << ":" << bound << std::endl;
  api.Serve();
  return 0;
}

int CmdFidelity(const std::string& generated, const std::string& truth, const std::string& out) {
  const fidelity::FidelityCurve curve = fidelity::ComputeCurve(ReadVframes(generated), ReadVframes(truth));
  const std::string csv = fidelity::CurveCsv(curve);
  if (out.empty()) {
    std::cout << csv;
  } else {
    WriteFileIfChanged(out, csv);
  }
  if (!curve.points.empty()) {
    const fidelity::CurvePoint& last = curve.points.back();
    std::cerr << "frames=" << curve.points.size() << " mean_l1=" << last.mean_l1 << " mean_ssim=" << last.mean_ssim
              << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"World-model policy evaluation harness"};
  app.require_subcommand(1);
  int code = 0;

  std::string manifest, store = ".", run, classifier, file, raters, icc_raters, pairs, role, params, host = "127.0.0.1";
  std::string generated, truth, out;
  int parallelism = 0, port = 0;

  auto* run_cmd = app.add_subcommand("run", "Execute the campaign described by a manifest");
  run_cmd->add_option("manifest", manifest, "Manifest JSON")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--store", store, "Store root (default: manifest output_dir)");
  run_cmd->add_option("--parallelism", parallelism, "Override the manifest's parallelism");
  run_cmd->callback([&] {
    if (run_cmd->count("--store") == 0) store.clear();
    code = CmdRun(manifest, store, parallelism);
  });

  auto* classify = app.add_subcommand("classify", "Label every rollout of a run with the classifier");
  classify->add_option("--run", run)->required();
  classify->add_option("--store", store);
  classify->add_option("--classifier", classifier, "Endpoint overriding the manifest's");
  classify->add_option("--parallelism", parallelism)->default_val(1);
  classify->callback([&] { code = CmdClassify(run, store, classifier, std::max(1, parallelism)); });

  auto* ingest = app.add_subcommand("ingest-real", "Attach real-robot results to a run");
  ingest->add_option("file", file, "Real-results CSV")->required()->check(CLI::ExistingFile);
  ingest->add_option("--run", run)->required();
  ingest->add_option("--store", store);
  ingest->callback([&] { code = CmdIngest(file, run, store); });

  auto* report = app.add_subcommand("report", "Compute sim-vs-real statistics");
  report->add_option("--run", run);
  report->add_option("--store", store);
  report->add_option("--raters", raters, "Comma-separated raters defining sim success");
  report->add_option("--icc-raters", icc_raters, "Comma-separated raters compared by ICC");
  report->add_option("--pairs", pairs, "policy,task,sim_sr,real_sr CSV instead of a run")->check(CLI::ExistingFile);
  report->callback([&] { code = CmdReport(run, store, raters, icc_raters, pairs); });

  auto* serve_mock = app.add_subcommand("serve-mock", "Serve a mock backend over TCP");
  serve_mock->add_option("--role", role, "policy | world-model | classifier")->required();
  serve_mock->add_option("--port", port)->required();
  serve_mock->add_option("--params", params, "Mock parameters JSON")->check(CLI::ExistingFile);
  serve_mock->callback([&] { code = CmdServeMock(role, port, params); });

  auto* serve_api = app.add_subcommand("serve-api", "Serve the rater HTTP API for a run");
  serve_api->add_option("--run", run)->required();
  serve_api->add_option("--store", store);
  serve_api->add_option("--port", port)->required();
  serve_api->add_option("--host", host);
  serve_api->callback([&] { code = CmdServeApi(run, store, host, port); });

  auto* fid = app.add_subcommand("fidelity", "Per-frame L1/SSIM of a generated clip against ground truth");
  fid->add_option("--generated", generated)->required()->check(CLI::ExistingFile);
  fid->add_option("--truth", truth)->required()->check(CLI::ExistingFile);
  fid->add_option("--out", out, "CSV path (default stdout)");
  fid->callback([&] { code = CmdFidelity(generated, truth, out); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return code;
}
