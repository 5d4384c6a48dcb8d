// Copyright 2026 The wmeval Authors
// SPDX-License-Identifier: Apache-2.0

#include "wmeval/api.h"

#include <httplib.h>

#include <chrono>
#include <ctime>
#include <set>

#include "wmeval/report.h"
#include "wmeval/video_io.h"

namespace wmeval {
namespace {

struct HttpError : std::runtime_error {
  HttpError(int status, std::string code, const std::string& message)
      : std::runtime_error(message), status(status), code(std::move(code)) {}
  int status;
  std::string code;
};

void SendJson(httplib::Response& res, const Json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void SendError(httplib::Response& res, int status, const std::string& code, const std::string& message) {
  SendJson(res, {{"code", code}, {"message", message}}, status);
}

std::vector<std::string> SplitList(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const std::string item = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

// Maps exceptions to the error body. Unknown runs and rollouts are 404.
Handler Guard(Handler fn) {
  return [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const HttpError& e) {
      SendError(res, e.status, e.code, e.what());
    } catch (const StoreError& e) {
      SendError(res, 404, "NOT_FOUND", e.what());
    } catch (const Json::exception& e) {
      SendError(res, 400, "BAD_REQUEST", e.what());
    } catch (const std::invalid_argument& e) {
      SendError(res, 400, "BAD_REQUEST", e.what());
    } catch (const std::exception& e) {
      SendError(res, 500, "INTERNAL", e.what());
    }
  };
}

}  // namespace

std::string UtcNow() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct ApiServer::Impl {
  RunStore& store;
  std::string default_run;
  std::function<std::string()> clock;
  httplib::Server server;

  Impl(RunStore& s, std::string run, std::function<std::string()> c)
      : store(s), default_run(std::move(run)), clock(c ? std::move(c) : UtcNow) {
    Routes();
  }

  std::string RunFor(const httplib::Request& req) const {
    const std::string run = req.has_param("run") ? req.get_param_value("run") : default_run;
    if (!store.HasRun(run)) throw HttpError(404, "NOT_FOUND", "unknown run '" + run + "'");
    return run;
  }

  std::string RolloutFor(const httplib::Request& req, const std::string& run) const {
    const std::string id = req.matches[1];
    if (!store.HasRollout(run, id)) throw HttpError(404, "NOT_FOUND", "unknown rollout '" + id + "' in run " + run);
    return id;
  }

  std::string NamedRun(const httplib::Request& req) const {
    const std::string run = req.matches[1];
    if (!store.HasRun(run)) throw HttpError(404, "NOT_FOUND", "unknown run '" + run + "'");
    return run;
  }

  void Routes() {
    server.set_post_routing_handler([](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Origin", "*");
    });
    server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.status = 204;
    });
    server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
      if (res.body.empty()) SendError(res, res.status, res.status == 404 ? "NOT_FOUND" : "HTTP_ERROR", req.path);
    });

    server.Get("/runs", Guard([this](const httplib::Request&, httplib::Response& res) {
                 Json runs = Json::array();
                 for (const std::string& id : store.ListRuns()) {
                   const RunManifest m = store.LoadManifest(id);
                   Json tasks = Json::array(), policies = Json::array();
                   for (const TaskDefinition& t : m.tasks) tasks.push_back(t.name);
                   for (const PolicyEntry& p : m.policies) policies.push_back(p.id);
                   runs.push_back({{"run_id", id},
                                   {"created_at", m.created_at},
                                   {"tasks", tasks},
                                   {"policies", policies},
                                   {"rollouts", store.ListRollouts(id).size()}});
                 }
                 SendJson(res, {{"runs", runs}, {"default_run", default_run}});
               }));

    server.Get(R"(/runs/([^/]+)/rollouts)", Guard([this](const httplib::Request& req, httplib::Response& res) {
                 const std::string run = NamedRun(req);
                 const std::string rater = req.has_param("rater") ? req.get_param_value("rater") : "";
                 std::map<std::string, std::vector<const LabelRecord*>> by_rollout;
                 const std::vector<LabelRecord> labels = store.LoadLabels(run);
                 for (const LabelRecord& l : labels) by_rollout[l.rollout_ref].push_back(&l);
                 Json rows = Json::array();
                 for (const RolloutSummary& s : store.ListRollouts(run)) {
                   Json labeled_by = Json::array();
                   Json own = nullptr;
                   for (const LabelRecord* l : by_rollout[s.Id()]) {
                     labeled_by.push_back(l->rater_id);
                     if (l->rater_id == rater) own = l->ToJson();
                   }
                   Json row = {{"id", s.Id()},
                               {"policy", s.key.policy_id},
                               {"task", s.key.task},
                               {"trial", s.key.trial},
                               {"seed", s.key.seed},
                               {"steps_executed", s.steps_executed},
                               {"frame_count", s.frame_count},
                               {"termination", ToString(s.termination)},
                               {"error", s.error},
                               {"labeled_by", labeled_by}};
                   if (!rater.empty()) row["label"] = own;
                   rows.push_back(std::move(row));
                 }
                 SendJson(res, {{"run_id", run}, {"rollouts", rows}});
               }));

    server.Get(R"(/rollouts/([^/]+)/video)", Guard([this](const httplib::Request& req, httplib::Response& res) {
                 const std::string run = RunFor(req);
                 const std::string id = RolloutFor(req, run);
                 if (!req.has_param("index")) {
                   const Bytes bytes = ReadFileBytes(store.VideoPath(run, id));
                   res.set_content(reinterpret_cast<const char*>(bytes.data()), bytes.size(),
                                   "application/octet-stream");
                   return;
                 }
                 const std::string raw = req.get_param_value("index");
                 std::size_t used = 0;
                 long index = -1;
                 try {
                   index = std::stol(raw, &used);
                 } catch (const std::exception&) {
                   used = 0;
                 }
                 if (used != raw.size() || index < 0) {
                   throw HttpError(400, "BAD_REQUEST", "index must be a non-negative integer, got '" + raw + "'");
                 }
                 const VideoClip video = store.LoadVideo(run, id);
                 if (static_cast<std::size_t>(index) >= video.size()) {
                   throw HttpError(404, "NOT_FOUND", "frame " + raw + " out of range, video has " +
                                                         std::to_string(video.size()) + " frames");
                 }
                 const Bytes png = EncodePng(video.frames[static_cast<std::size_t>(index)]);
                 res.set_content(reinterpret_cast<const char*>(png.data()), png.size(), "image/png");
               }));

    server.Get(R"(/rollouts/([^/]+)/rubric)", Guard([this](const httplib::Request& req, httplib::Response& res) {
                 const std::string run = RunFor(req);
                 const std::string id = RolloutFor(req, run);
                 const RunManifest m = store.LoadManifest(run);
                 const std::string task = ParseRolloutId(id).task;
                 const TaskDefinition* t = m.FindTask(task);
                 SendJson(res, {{"rollout_id", id},
                                {"task", task},
                                {"domain", t ? ToString(t->domain) : "tabletop"},
                                {"rubric", t ? t->rubric : std::vector<std::string>{}}});
               }));

    server.Post(R"(/rollouts/([^/]+)/labels)", Guard([this](const httplib::Request& req, httplib::Response& res) {
                  const std::string run = RunFor(req);
                  const std::string id = RolloutFor(req, run);
                  const Json body = Json::parse(req.body);
                  LabelRecord rec = LabelRecord::FromJson(body);
                  if (!rec.rollout_ref.empty() && rec.rollout_ref != id) {
                    throw HttpError(400, "BAD_REQUEST", "rollout_ref does not match the URL");
                  }
                  rec.rollout_ref = id;
                  const bool changed = store.SubmitLabel(run, rec, clock());
                  Json stored = nullptr;
                  for (const LabelRecord& l : store.LoadLabels(run)) {
                    if (l.rollout_ref == id && l.rater_id == rec.rater_id) stored = l.ToJson();
                  }
                  SendJson(res, {{"status", changed ? "stored" : "unchanged"}, {"label", stored}});
                }));

    server.Get(R"(/runs/([^/]+)/agreement)", Guard([this](const httplib::Request& req, httplib::Response& res) {
                 const std::string run = NamedRun(req);
                 const std::vector<std::string> raters =
                     req.has_param("raters") ? SplitList(req.get_param_value("raters")) : std::vector<std::string>{};
                 SendJson(res, AgreementJson(store, run, raters));
               }));

    server.Get(R"(/runs/([^/]+)/report)", Guard([this](const httplib::Request& req, httplib::Response& res) {
                 const std::string run = NamedRun(req);
                 ReportOptions options;
                 if (req.has_param("raters")) options.sim_raters = SplitList(req.get_param_value("raters"));
                 SendJson(res, ReportForRun(store, run, options).ToJson());
               }));
  }
};

ApiServer::ApiServer(RunStore& store, std::string default_run, std::function<std::string()> clock)
    : impl_(std::make_unique<Impl>(store, std::move(default_run), std::move(clock))) {}

ApiServer::~ApiServer() { Stop(); }

int ApiServer::Bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw std::runtime_error("cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void ApiServer::Serve() { impl_->server.listen_after_bind(); }

void ApiServer::Stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace wmeval
