// Copyright 2026 The wmeval Authors
// SPDX-License-Identifier: Apache-2.0

// On-disk video and image formats.
//
// .vframes is a raw frame container. All header integers are big-endian:
//
//   "VFRM" | u16 version (1) | u16 channels (3) | u32 width | u32 height |
//   u32 frame_count | u32 rate_hz | frame_count * width * height * 3 bytes
//
// An empty clip is stored with width and height 0.

#ifndef WMEVAL_VIDEO_IO_H_
#define WMEVAL_VIDEO_IO_H_

#include <filesystem>
#include <span>
#include <stdexcept>

#include "wmeval/protocol.h"
#include "wmeval/rollout.h"

namespace wmeval {

class VideoFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kVframesHeaderBytes = 24;
inline constexpr std::uint16_t kVframesVersion = 1;

Bytes EncodeVframes(const VideoClip& clip);
VideoClip DecodeVframes(std::span<const std::uint8_t> bytes);

void WriteVframes(const std::filesystem::path& path, const VideoClip& clip);
VideoClip ReadVframes(const std::filesystem::path& path);

Bytes EncodePng(const Frame& frame);
Frame DecodePng(std::span<const std::uint8_t> bytes);
Frame ReadPng(const std::filesystem::path& path);
void WritePng(const std::filesystem::path& path, const Frame& frame);

// Throws std::runtime_error naming the path on any I/O failure.
Bytes ReadFileBytes(const std::filesystem::path& path);
std::string ReadFileText(const std::filesystem::path& path);

// Writes through a temporary file and a rename. Leaves the file untouched
// and returns false when it already holds exactly `bytes`.
bool WriteFileIfChanged(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
bool WriteFileIfChanged(const std::filesystem::path& path, std::string_view text);

}  // namespace wmeval

#endif  // WMEVAL_VIDEO_IO_H_
