// Copyright 2026 The wmeval Authors
// SPDX-License-Identifier: Apache-2.0

#include "wmeval/sandbox.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace wmeval::sandbox {
namespace {

using Rgb = std::array<std::uint8_t, 3>;

bool Is(const Frame& f, int x, int y, const Rgb& c) {
  const std::uint8_t* p = f.pixel(x, y);
  return p[0] == c[0] && p[1] == c[1] && p[2] == c[2];
}

void FillBlock(Frame& f, int cx, int cy, int size, const Rgb& c) {
  const int half = size / 2;
  for (int y = std::max(cy - half, 0); y <= std::min(cy + half, f.height - 1); ++y) {
    for (int x = std::max(cx - half, 0); x <= std::min(cx + half, f.width - 1); ++x) {
      std::copy(c.begin(), c.end(), f.pixel(x, y));
    }
  }
}

struct Cell2 {
  int x = 0;
  int y = 0;
};

// Finds the center of a size x size block given which pixels belong to it
// and which pixels may legitimately cover it. A candidate center must
// contain every `own` pixel, and each in-frame cell of its block must be
// `own` or `cover`. Returns the consistent candidate nearest the bounding
// box center.
std::optional<Cell2> LocateBlock(const Frame& f, int size,
                                 const std::function<bool(int, int)>& own,
                                 const std::function<bool(int, int, int, int)>& cover) {
  int min_x = f.width, max_x = -1, min_y = f.height, max_y = -1;
  for (int y = 0; y < f.height; ++y) {
    for (int x = 0; x < f.width; ++x) {
      if (!own(x, y)) continue;
      min_x = std::min(min_x, x);
      max_x = std::max(max_x, x);
      min_y = std::min(min_y, y);
      max_y = std::max(max_y, y);
    }
  }
  if (max_x < 0) return std::nullopt;
  const int half = size / 2;
  if (max_x - min_x >= size || max_y - min_y >= size) return std::nullopt;

  std::optional<Cell2> best;
  double best_d = 0.0;
  const double mid_x = 0.5 * (min_x + max_x), mid_y = 0.5 * (min_y + max_y);
  for (int cy = std::max(max_y - half, 0); cy <= std::min(min_y + half, f.height - 1); ++cy) {
    for (int cx = std::max(max_x - half, 0); cx <= std::min(min_x + half, f.width - 1); ++cx) {
      bool ok = true;
      for (int y = std::max(cy - half, 0); ok && y <= std::min(cy + half, f.height - 1); ++y) {
        for (int x = std::max(cx - half, 0); ok && x <= std::min(cx + half, f.width - 1); ++x) {
          ok = own(x, y) || cover(cx, cy, x, y);
        }
      }
      if (!ok) continue;
      const double d = std::hypot(cx - mid_x, cy - mid_y);
      if (!best || d < best_d) {
        best = Cell2{cx, cy};
        best_d = d;
      }
    }
  }
  return best;
}

double CenterOf(int cell, int dim) { return (cell + 0.5) / dim; }

Vec2 Clamp01(Vec2 v) { return {std::clamp(v.x, 0.0, 1.0), std::clamp(v.y, 0.0, 1.0)}; }

}  // namespace

double Distance(const Vec2& a, const Vec2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

void SandboxParams::Validate() const {
  if (!(attach_radius > 0.0)) throw std::invalid_argument("attach_radius must be positive");
  if (!(false_attach_prob >= 0.0 && false_attach_prob <= 1.0)) {
    throw std::invalid_argument("false_attach_prob must be in [0, 1]");
  }
}

SandboxState Step(const SandboxState& state, const Action& action, const SandboxParams& params,
                  Rng& rng) {
  SandboxState next = state;
  const ArmCommand& arm = action.arm(0);
  next.gripper = Clamp01({state.gripper.x + params.action_scale * arm.translation.x,
                          state.gripper.y + params.action_scale * arm.translation.y});
  next.jaw = std::clamp(arm.jaw, 0.0, 1.0);

  if (next.grasped && !next.jaw_closed()) next.grasped = false;
  if (!next.grasped && next.jaw_closed()) {
    if (Distance(next.gripper, next.needle) <= params.attach_radius) {
      next.grasped = true;
    } else if (!state.jaw_closed() && params.false_attach_prob > 0.0) {
      next.grasped = rng.Uniform() < params.false_attach_prob;
    }
  }
  if (next.grasped) next.needle = next.gripper;
  return next;
}

int Cell(double pos, int dim) {
  return std::clamp(static_cast<int>(std::floor(pos * dim)), 0, dim - 1);
}

Frame Render(const SandboxState& state, int width, int height) {
  Frame f(width, height);
  FillBlock(f, Cell(state.goal.x, width), Cell(state.goal.y, height), kGoalBlock, color::kGoal);
  if (!state.grasped) {
    FillBlock(f, Cell(state.needle.x, width), Cell(state.needle.y, height), kNeedleBlock, color::kNeedle);
  }
  const int gx = Cell(state.gripper.x, width), gy = Cell(state.gripper.y, height);
  FillBlock(f, gx, gy, kGripperBlock, color::kGripper);
  if (state.grasped) {
    FillBlock(f, gx, gy, 1, color::kNeedle);
  } else if (state.jaw_closed()) {
    FillBlock(f, gx, gy, 1, color::kJawClosed);
  }
  return f;
}

std::optional<SandboxState> Decode(const Frame& f) {
  if (f.width < kGripperBlock || f.height < kGripperBlock) return std::nullopt;
  auto white = [&](int x, int y) { return Is(f, x, y, color::kGripper); };
  auto red = [&](int x, int y) { return Is(f, x, y, color::kNeedle); };
  auto grey = [&](int x, int y) { return Is(f, x, y, color::kJawClosed); };
  auto green = [&](int x, int y) { return Is(f, x, y, color::kGoal); };

  // The gripper is never covered; only its center may differ from white.
  const auto g = LocateBlock(f, kGripperBlock, white, [&](int cx, int cy, int x, int y) {
    return x == cx && y == cy && (red(x, y) || grey(x, y));
  });
  if (!g) return std::nullopt;

  SandboxState s;
  s.gripper = {CenterOf(g->x, f.width), CenterOf(g->y, f.height)};
  s.grasped = red(g->x, g->y);
  s.jaw = (s.grasped || grey(g->x, g->y)) ? 0.0 : 1.0;

  auto in_gripper = [&](int x, int y) {
    return std::abs(x - g->x) <= kGripperBlock / 2 && std::abs(y - g->y) <= kGripperBlock / 2;
  };
  if (s.grasped) {
    s.needle = s.gripper;
  } else {
    const auto n = LocateBlock(
        f, kNeedleBlock, [&](int x, int y) { return red(x, y) && !in_gripper(x, y); },
        [&](int, int, int x, int y) { return in_gripper(x, y); });
    // No visible red: the needle sits under the gripper.
    s.needle = n ? Vec2{CenterOf(n->x, f.width), CenterOf(n->y, f.height)} : s.gripper;
  }

  const auto goal = LocateBlock(f, kGoalBlock, green, [&](int, int, int x, int y) {
    return red(x, y) || in_gripper(x, y);
  });
  s.goal = goal ? Vec2{CenterOf(goal->x, f.width), CenterOf(goal->y, f.height)} : s.gripper;
  if (!goal) {
    // Only an exactly aligned gripper hides the whole goal.
    bool any_green = false;
    for (int y = 0; y < f.height && !any_green; ++y) {
      for (int x = 0; x < f.width && !any_green; ++x) any_green = green(x, y);
    }
    if (any_green) return std::nullopt;
  }
  return s;
}

bool NeedleAtGoal(const SandboxState& s, int width, int height) {
  const int reach = (kGoalBlock - kNeedleBlock) / 2;
  return std::abs(Cell(s.needle.x, width) - Cell(s.goal.x, width)) <= reach &&
         std::abs(Cell(s.needle.y, height) - Cell(s.goal.y, height)) <= reach;
}

std::uint64_t Fnv1a(std::span<const std::uint8_t> bytes, std::uint64_t h) {
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t HashCombine(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over the mixed pair
  std::uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

SandboxState MakeScene(const std::string& task, int trial, std::uint64_t salt) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(task.data());
  Rng rng(HashCombine(HashCombine(Fnv1a({p, task.size()}), static_cast<std::uint64_t>(trial)), salt));
  SandboxState s;
  s.needle = {rng.Uniform(0.30, 0.60), rng.Uniform(0.20, 0.80)};
  do {
    s.goal = {rng.Uniform(0.10, 0.90), rng.Uniform(0.10, 0.90)};
  } while (Distance(s.goal, s.needle) < 0.30);
  do {
    s.gripper = {rng.Uniform(0.10, 0.90), rng.Uniform(0.10, 0.90)};
  } while (Distance(s.gripper, s.needle) < 0.20 || Distance(s.gripper, s.goal) < 0.10);
  s.jaw = 1.0;
  s.grasped = false;
  return s;
}

}  // namespace wmeval::sandbox
