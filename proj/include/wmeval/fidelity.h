// Copyright 2026 The wmeval Authors
// SPDX-License-Identifier: Apache-2.0

// Per-frame L1 and SSIM between a generated rollout and a held-out ground
// truth video. The default kernels are OpenMP-parallel; `serial::` holds the
// single-threaded versions they are tested against. Both reduce per-row
// partial sums in row order, so results are bit-identical across thread
// counts.

#ifndef WMEVAL_FIDELITY_H_
#define WMEVAL_FIDELITY_H_

#include <array>
#include <string>
#include <vector>

#include "wmeval/protocol.h"
#include "wmeval/rollout.h"

namespace wmeval::fidelity {

inline constexpr int kWindow = 11;
inline constexpr double kSigma = 1.5;
inline constexpr double kC1 = (0.01 * 255.0) * (0.01 * 255.0);
inline constexpr double kC2 = (0.03 * 255.0) * (0.03 * 255.0);

// Normalized 11-tap Gaussian, sigma 1.5.
const std::array<double, kWindow>& GaussianTaps();

// ITU-R BT.601 luma of every pixel, row-major.
std::vector<double> Luma(const Frame& f);

// Mean absolute difference over all pixels and channels, in [0, 255].
double L1Frame(const Frame& a, const Frame& b);

// Mean SSIM of the luma planes over all valid 11x11 window positions.
// Throws std::invalid_argument if a side is shorter than the window.
double SsimFrame(const Frame& a, const Frame& b);

struct CurvePoint {
  int index = 0;
  double l1 = 0.0;
  double ssim = 0.0;
  double mean_l1 = 0.0;    // cumulative mean over indices 0..index
  double mean_ssim = 0.0;  // cumulative mean over indices 0..index
};

struct FidelityCurve {
  std::vector<CurvePoint> points;
};

// Pairs frames index by index over the shorter of the two clips.
FidelityCurve ComputeCurve(const VideoClip& generated, const VideoClip& truth);

// "index,l1,ssim" with a header row.
std::string CurveCsv(const FidelityCurve& curve);

namespace serial {
double L1Frame(const Frame& a, const Frame& b);
double SsimFrame(const Frame& a, const Frame& b);
FidelityCurve ComputeCurve(const VideoClip& generated, const VideoClip& truth);
}  // namespace serial

}  // namespace wmeval::fidelity

#endif  // WMEVAL_FIDELITY_H_
