// Copyright 2026 The wmeval Authors
// SPDX-License-Identifier: Apache-2.0

// A 2D pixel-physics sandbox that stands in for the surgical scene: a
// gripper that can pick up a needle and carry it to a goal square. The
// state crosses backend boundaries only as a rendered frame and is
// recovered by scanning colors.
//
// Raster: black background, 5x5 green goal, 3x3 red needle, 5x5 white
// gripper drawn last. The gripper's center pixel shows its jaw: white when
// open, grey when closed on nothing, red when holding the needle.

#ifndef WMEVAL_SANDBOX_H_
#define WMEVAL_SANDBOX_H_

#include <cstdint>
#include <optional>
#include <random>
#include <string>

#include "wmeval/protocol.h"

namespace wmeval::sandbox {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

double Distance(const Vec2& a, const Vec2& b);

struct SandboxState {
  Vec2 gripper{0.5, 0.5};
  Vec2 needle{0.5, 0.5};
  Vec2 goal{0.5, 0.5};
  bool grasped = false;
  double jaw = 1.0;

  bool jaw_closed() const { return jaw < 0.5; }
  friend bool operator==(const SandboxState&, const SandboxState&) = default;
};

struct SandboxParams {
  double attach_radius = 0.05;
  double action_scale = 1.0;
  // Chance that closing the jaw away from the needle still grabs it.
  double false_attach_prob = 0.0;
  std::uint64_t seed = 0;

  void Validate() const;
};

inline constexpr int kFrameSize = 64;
inline constexpr int kGoalBlock = 5;
inline constexpr int kNeedleBlock = 3;
inline constexpr int kGripperBlock = 5;

namespace color {
inline constexpr std::array<std::uint8_t, 3> kBackground{0, 0, 0};
inline constexpr std::array<std::uint8_t, 3> kGoal{0, 255, 0};
inline constexpr std::array<std::uint8_t, 3> kNeedle{255, 0, 0};
inline constexpr std::array<std::uint8_t, 3> kGripper{255, 255, 255};
inline constexpr std::array<std::uint8_t, 3> kJawClosed{128, 128, 128};
}  // namespace color

// Uniform doubles from a 64-bit engine, identical on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double Uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

 private:
  std::mt19937_64 engine_;
};

// Moves the gripper by action_scale * (dx, dy) of arm 0, sets the jaw,
// then resolves grasping. Grasp engages when the jaw is closed within
// attach_radius of the needle; a closing jaw away from the needle grabs it
// anyway with probability false_attach_prob. Opening the jaw drops it.
SandboxState Step(const SandboxState& state, const Action& action, const SandboxParams& params,
                  Rng& rng);

// Pixel cell of a position: floor(pos * dim), clamped to the frame.
int Cell(double pos, int dim);

Frame Render(const SandboxState& state, int width = kFrameSize, int height = kFrameSize);

// Recovers positions (pixel centers) and jaw/grasp flags by color scan.
// Returns nullopt when the frame does not look like a sandbox render.
std::optional<SandboxState> Decode(const Frame& frame);

// Needle block lies inside the goal block.
bool NeedleAtGoal(const SandboxState& state, int width = kFrameSize, int height = kFrameSize);

// Deterministic initial scene for a (task, trial) pair.
SandboxState MakeScene(const std::string& task, int trial, std::uint64_t salt = 0);

std::uint64_t Fnv1a(std::span<const std::uint8_t> bytes, std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t HashCombine(std::uint64_t a, std::uint64_t b);

}  // namespace wmeval::sandbox

#endif  // WMEVAL_SANDBOX_H_
