// Copyright 2026 The wmeval Authors
// SPDX-License-Identifier: Apache-2.0

#include "wmeval/video_io.h"

#include <png.h>

#include <unistd.h>

#include <atomic>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

namespace wmeval {
namespace {

constexpr char kMagic[4] = {'V', 'F', 'R', 'M'};

void PutBe(Bytes& out, std::uint64_t v, int bytes) {
  for (int i = bytes - 1; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t GetBe(const std::uint8_t* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v = (v << 8) | p[i];
  return v;
}

}  // namespace

Bytes EncodeVframes(const VideoClip& clip) {
  clip.Validate();
  const int w = clip.empty() ? 0 : clip.frames.front().width;
  const int h = clip.empty() ? 0 : clip.frames.front().height;
  if (clip.size() > std::numeric_limits<std::uint32_t>::max() || clip.rate_hz < 0) {
    throw VideoFormatError("clip does not fit the .vframes header");
  }
  Bytes out;
  out.reserve(kVframesHeaderBytes + clip.size() * Frame::ByteSize(w, h));
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  PutBe(out, kVframesVersion, 2);
  PutBe(out, Frame::kChannels, 2);
  PutBe(out, static_cast<std::uint32_t>(w), 4);
  PutBe(out, static_cast<std::uint32_t>(h), 4);
  PutBe(out, clip.size(), 4);
  PutBe(out, static_cast<std::uint32_t>(clip.rate_hz), 4);
  for (const Frame& f : clip.frames) out.insert(out.end(), f.data.begin(), f.data.end());
  return out;
}

VideoClip DecodeVframes(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kVframesHeaderBytes) {
    throw VideoFormatError("truncated .vframes header: expected " + std::to_string(kVframesHeaderBytes) +
                           " bytes, got " + std::to_string(bytes.size()));
  }
  const std::uint8_t* p = bytes.data();
  if (std::memcmp(p, kMagic, 4) != 0) throw VideoFormatError("not a .vframes file (bad magic)");
  const auto version = GetBe(p + 4, 2);
  const auto channels = GetBe(p + 6, 2);
  if (version != kVframesVersion) throw VideoFormatError("unsupported .vframes version " + std::to_string(version));
  if (channels != Frame::kChannels) throw VideoFormatError("unsupported channel count " + std::to_string(channels));
  const auto w = GetBe(p + 8, 4), h = GetBe(p + 12, 4), count = GetBe(p + 16, 4);
  VideoClip clip;
  clip.rate_hz = static_cast<int>(GetBe(p + 20, 4));
  // Dimensions are capped so the size arithmetic below cannot overflow.
  constexpr std::uint64_t kMaxSide = 1 << 20;
  if (count > 0 && (w == 0 || h == 0 || w > kMaxSide || h > kMaxSide)) {
    throw VideoFormatError("bad frame size " + std::to_string(w) + "x" + std::to_string(h));
  }
  const std::uint64_t frame_bytes = w * h * Frame::kChannels;
  const std::uint64_t expected = kVframesHeaderBytes + count * frame_bytes;
  if (bytes.size() != expected) {
    throw VideoFormatError(std::string(bytes.size() < expected ? "truncated" : "oversized") +
                           " .vframes: expected " + std::to_string(expected) + " bytes, got " +
                           std::to_string(bytes.size()));
  }
  clip.frames.reserve(count);
  const std::uint8_t* at = p + kVframesHeaderBytes;
  for (std::uint64_t i = 0; i < count; ++i, at += frame_bytes) {
    clip.frames.emplace_back(static_cast<int>(w), static_cast<int>(h), Bytes(at, at + frame_bytes));
  }
  return clip;
}

void WriteVframes(const std::filesystem::path& path, const VideoClip& clip) {
  WriteFileIfChanged(path, EncodeVframes(clip));
}

VideoClip ReadVframes(const std::filesystem::path& path) {
  const Bytes bytes = ReadFileBytes(path);
  try {
    return DecodeVframes(bytes);
  } catch (const VideoFormatError& e) {
    throw VideoFormatError(path.string() + ": " + e.what());
  }
}

Bytes EncodePng(const Frame& frame) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(frame.width);
  image.height = static_cast<png_uint_32>(frame.height);
  image.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, frame.data.data(), 0, nullptr)) {
    throw std::runtime_error(std::string("png encode failed: ") + image.message);
  }
  Bytes out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, frame.data.data(), 0, nullptr)) {
    throw std::runtime_error(std::string("png encode failed: ") + image.message);
  }
  out.resize(size);
  return out;
}

Frame DecodePng(std::span<const std::uint8_t> bytes) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw std::runtime_error(std::string("png decode failed: ") + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  Frame f(static_cast<int>(image.width), static_cast<int>(image.height));
  if (!png_image_finish_read(&image, nullptr, f.data.data(), 0, nullptr)) {
    png_image_free(&image);
    throw std::runtime_error(std::string("png decode failed: ") + image.message);
  }
  return f;
}

Frame ReadPng(const std::filesystem::path& path) {
  const Bytes bytes = ReadFileBytes(path);
  try {
    return DecodePng(bytes);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void WritePng(const std::filesystem::path& path, const Frame& frame) { WriteFileIfChanged(path, EncodePng(frame)); }

Bytes ReadFileBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  Bytes out((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw std::runtime_error("read failed: " + path.string());
  return out;
}

std::string ReadFileText(const std::filesystem::path& path) {
  const Bytes b = ReadFileBytes(path);
  return {b.begin(), b.end()};
}

bool WriteFileIfChanged(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::error_code ec;
  if (std::filesystem::file_size(path, ec) == bytes.size() && !ec) {
    const Bytes existing = ReadFileBytes(path);
    if (std::equal(existing.begin(), existing.end(), bytes.begin(), bytes.end())) return false;
  }
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw std::runtime_error("cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  // Unique per call: several workers may store the same file at once.
  static std::atomic<std::uint64_t> counter{0};
  std::filesystem::path tmp = path;
  tmp += ".tmp" + std::to_string(::getpid()) + "." + std::to_string(counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw std::runtime_error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  return true;
}

bool WriteFileIfChanged(const std::filesystem::path& path, std::string_view text) {
  return WriteFileIfChanged(
      path, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace wmeval
