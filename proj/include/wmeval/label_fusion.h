// Copyright 2026 The wmeval Authors
// SPDX-License-Identifier: Apache-2.0

// Chunked video classification: split a rollout video into overlapping
// fixed-length windows, label each window, and reduce the window labels to
// one rollout outcome.

#ifndef WMEVAL_LABEL_FUSION_H_
#define WMEVAL_LABEL_FUSION_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wmeval/protocol.h"
#include "wmeval/session.h"

namespace wmeval {

struct ChunkSpan {
  int start = 0;  // inclusive
  int end = 0;    // exclusive

  int length() const { return end - start; }
  friend bool operator==(const ChunkSpan&, const ChunkSpan&) = default;
};

struct ChunkPlan {
  std::vector<ChunkSpan> spans;
};

struct LabeledSpan {
  ChunkSpan span;
  ChunkLabel label = ChunkLabel::kDefault;

  friend bool operator==(const LabeledSpan&, const LabeledSpan&) = default;
};

enum class Outcome { kSuccess, kFailure };
enum class OutcomeCause { kSuccessFirst, kAnomalyFirst, kNoSuccess };

std::string_view ToString(Outcome o);
std::string_view ToString(OutcomeCause c);

struct RolloutOutcome {
  Outcome outcome = Outcome::kFailure;
  OutcomeCause cause = OutcomeCause::kNoSuccess;
  std::vector<ChunkLabel> chunk_labels;

  bool success() const { return outcome == Outcome::kSuccess; }
};

// Windows start every chunk - overlap frames. A window that would run past
// the end is replaced by one anchored at the end of the video; a video
// shorter than one chunk gets a single short window (0, video_len).
ChunkPlan PlanChunks(int video_len, int chunk = protocol::kClassifierChunkFrames, int overlap = 6);

// The first non-DEFAULT label decides: SUCCESS wins only if it comes before
// any ANOMALY. Throws std::invalid_argument on an empty list.
RolloutOutcome FuseLabels(std::span<const ChunkLabel> labels);

// The frames sent for one window, padded to `chunk` frames by repeating
// the last one.
std::vector<Frame> ChunkFrames(std::span<const Frame> video, const ChunkSpan& span,
                               int chunk = protocol::kClassifierChunkFrames);

struct Classification {
  std::vector<LabeledSpan> labels;
  std::optional<RolloutOutcome> outcome;  // empty when UNLABELED
  std::string error;
};

// Labels every planned window in order through `classifier` and fuses the
// result. Classifier failures leave the rollout unlabeled.
Classification ClassifyRollout(std::span<const Frame> video, Session& classifier,
                               const std::string& task);

}  // namespace wmeval

#endif  // WMEVAL_LABEL_FUSION_H_
