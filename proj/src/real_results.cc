// Copyright 2026 The wmeval Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>

#include "wmeval/csv.h"
#include "wmeval/rollout.h"

namespace wmeval {
namespace {

std::optional<bool> ParseOutcome(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "success" || s == "true" || s == "1") return true;
  if (s == "failure" || s == "fail" || s == "false" || s == "0") return false;
  return std::nullopt;
}

}  // namespace

std::vector<RealResult> IngestRealResults(const std::string& csv_path) {
  namespace fs = std::filesystem;
  std::ifstream in(csv_path);
  if (!in) throw IngestError("cannot open " + csv_path, {});
  const fs::path base = fs::path(csv_path).parent_path();

  std::vector<std::string> problems;
  std::vector<RealResult> rows;
  std::string line;
  if (!std::getline(in, line)) throw IngestError(csv_path + " is empty", {});
  const std::vector<std::string> expected = {"policy_id", "task", "trial", "outcome",
                                             "initial_frame_path"};
  if (SplitCsvLine(TrimLineEnd(line)) != expected) {
    throw IngestError(csv_path + ": header must be policy_id,task,trial,outcome,initial_frame_path",
                      {"line 1: " + line});
  }

  for (int line_no = 2; std::getline(in, line); ++line_no) {
    line = TrimLineEnd(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    const std::vector<std::string> cells = SplitCsvLine(line);
    if (cells.size() != expected.size()) {
      problems.push_back(where + "expected 5 columns, got " + std::to_string(cells.size()));
      continue;
    }
    RealResult r;
    r.policy_id = cells[0];
    r.task = cells[1];
    if (r.policy_id.empty() || r.task.empty()) {
      problems.push_back(where + "empty policy_id or task");
      continue;
    }
    const auto& t = cells[2];
    if (auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), r.trial);
        ec != std::errc{} || p != t.data() + t.size() || r.trial < 0) {
      problems.push_back(where + "bad trial index '" + t + "'");
      continue;
    }
    const auto outcome = ParseOutcome(cells[3]);
    if (!outcome) {
      problems.push_back(where + "bad outcome '" + cells[3] + "'");
      continue;
    }
    r.success = *outcome;
    fs::path frame = cells[4];
    if (frame.is_relative()) frame = base / frame;
    if (cells[4].empty() || !fs::is_regular_file(frame)) {
      problems.push_back(where + "missing initial frame " + frame.string());
      continue;
    }
    r.initial_frame_path = frame.string();
    rows.push_back(std::move(r));
  }
  if (!problems.empty()) {
    std::string msg = csv_path + ": " + std::to_string(problems.size()) + " bad row(s)";
    for (const auto& p : problems) msg += "\n  " + p;
    throw IngestError(msg, std::move(problems));
  }
  return rows;
}

}  // namespace wmeval
