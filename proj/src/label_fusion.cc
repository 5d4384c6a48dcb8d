// Copyright 2026 The wmeval Authors
// SPDX-License-Identifier: Apache-2.0

#include "wmeval/label_fusion.h"

#include <stdexcept>

namespace wmeval {

std::string_view ToString(Outcome o) { return o == Outcome::kSuccess ? "SUCCESS" : "FAILURE"; }

std::string_view ToString(OutcomeCause c) {
  switch (c) {
    case OutcomeCause::kSuccessFirst:
      return "SUCCESS_FIRST";
    case OutcomeCause::kAnomalyFirst:
      return "ANOMALY_FIRST";
    case OutcomeCause::kNoSuccess:
      break;
  }
  return "NO_SUCCESS";
}

ChunkPlan PlanChunks(int video_len, int chunk, int overlap) {
  if (video_len < 1) throw std::invalid_argument("video must have at least one frame");
  if (chunk < 1 || overlap < 0 || overlap >= chunk) throw std::invalid_argument("bad chunk geometry");
  ChunkPlan plan;
  if (video_len <= chunk) {
    plan.spans.push_back({0, video_len});
    return plan;
  }
  const int stride = chunk - overlap;
  for (int start = 0;; start += stride) {
    if (start + chunk > video_len) {
      plan.spans.push_back({video_len - chunk, video_len});
      break;
    }
    plan.spans.push_back({start, start + chunk});
    if (start + chunk == video_len) break;
  }
  return plan;
}

RolloutOutcome FuseLabels(std::span<const ChunkLabel> labels) {
  if (labels.empty()) throw std::invalid_argument("no chunk labels to fuse");
  RolloutOutcome out;
  out.chunk_labels.assign(labels.begin(), labels.end());
  for (ChunkLabel l : labels) {
    if (l == ChunkLabel::kSuccess) {
      out.outcome = Outcome::kSuccess;
      out.cause = OutcomeCause::kSuccessFirst;
      return out;
    }
    if (l == ChunkLabel::kAnomaly) {
      out.outcome = Outcome::kFailure;
      out.cause = OutcomeCause::kAnomalyFirst;
      return out;
    }
  }
  out.outcome = Outcome::kFailure;
  out.cause = OutcomeCause::kNoSuccess;
  return out;
}

std::vector<Frame> ChunkFrames(std::span<const Frame> video, const ChunkSpan& span, int chunk) {
  std::vector<Frame> frames(video.begin() + span.start, video.begin() + span.end);
  while (static_cast<int>(frames.size()) < chunk) frames.push_back(frames.back());
  return frames;
}

Classification ClassifyRollout(std::span<const Frame> video, Session& classifier,
                               const std::string& task) {
  Classification result;
  if (video.empty()) {
    result.error = "empty video";
    return result;
  }
  const ChunkPlan plan = PlanChunks(static_cast<int>(video.size()));
  std::vector<ChunkLabel> labels;
  try {
    for (const ChunkSpan& span : plan.spans) {
      const ChunkLabel label = RequestChunkLabel(classifier, ChunkFrames(video, span), task);
      labels.push_back(label);
      result.labels.push_back({span, label});
    }
  } catch (const std::exception& e) {
    result.error = e.what();
    return result;
  }
  result.outcome = FuseLabels(labels);
  return result;
}

}  // namespace wmeval
