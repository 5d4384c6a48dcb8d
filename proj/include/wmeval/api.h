// Copyright 2026 The wmeval Authors
// SPDX-License-Identifier: Apache-2.0

// JSON-over-HTTP view of a run store, used by the rater console.
//
//   GET  /runs
//   GET  /runs/{id}/rollouts[?rater=R]
//   GET  /rollouts/{id}/video[?index=N]   .vframes bytes, or one PNG frame
//   GET  /rollouts/{id}/rubric
//   POST /rollouts/{id}/labels            LabelRecord JSON
//   GET  /runs/{id}/agreement[?raters=a,b]
//   GET  /runs/{id}/report
//
// Rollout routes act on the server's default run unless `?run=` names
// another. Errors are {"code": ..., "message": ...}.

#ifndef WMEVAL_API_H_
#define WMEVAL_API_H_

#include <functional>
#include <memory>
#include <string>

#include "wmeval/store.h"

namespace wmeval {

class ApiServer {
 public:
  // `clock` supplies timestamps for labels submitted without one.
  ApiServer(RunStore& store, std::string default_run, std::function<std::string()> clock = {});
  ~ApiServer();

  // Binds to host:port (0 picks a free port) and returns the bound port.
  int Bind(const std::string& host, int port);
  // Serves until Stop(). Call after Bind().
  void Serve();
  void Stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Current UTC time as an ISO-8601 string.
std::string UtcNow();

}  // namespace wmeval

#endif  // WMEVAL_API_H_
