// Copyright 2026 The wmeval Authors
// SPDX-License-Identifier: Apache-2.0

#include "wmeval/fidelity.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace wmeval::fidelity {
namespace {

void RequireSameSize(const Frame& a, const Frame& b) {
  if (!a.SameSize(b)) {
    throw std::invalid_argument("frame size mismatch: " + std::to_string(a.width) + "x" +
                                std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                                std::to_string(b.height));
  }
}

double L1Impl(const Frame& a, const Frame& b, bool parallel) {
  RequireSameSize(a, b);
  if (a.data.empty()) throw std::invalid_argument("l1 of empty frames");
  const int rows = a.height;
  const std::size_t row_bytes = Frame::ByteSize(a.width, 1);
  std::vector<std::uint64_t> row_sum(static_cast<std::size_t>(rows), 0);
#pragma omp parallel for schedule(static) if (parallel)
  for (int y = 0; y < rows; ++y) {
    const std::uint8_t* pa = a.data.data() + static_cast<std::size_t>(y) * row_bytes;
    const std::uint8_t* pb = b.data.data() + static_cast<std::size_t>(y) * row_bytes;
    std::uint64_t s = 0;
    for (std::size_t i = 0; i < row_bytes; ++i) s += static_cast<std::uint64_t>(std::abs(pa[i] - pb[i]));
    row_sum[static_cast<std::size_t>(y)] = s;
  }
  const std::uint64_t total = std::accumulate(row_sum.begin(), row_sum.end(), std::uint64_t{0});
  return static_cast<double>(total) / static_cast<double>(a.data.size());
}

double SsimImpl(const Frame& a, const Frame& b, bool parallel) {
  RequireSameSize(a, b);
  if (a.width < kWindow || a.height < kWindow) {
    throw std::invalid_argument("frame " + std::to_string(a.width) + "x" + std::to_string(a.height) +
                                " is smaller than the 11x11 SSIM window");
  }
  const auto& taps = GaussianTaps();
  const int w = a.width, h = a.height;
  const int ow = w - kWindow + 1, oh = h - kWindow + 1;
  const std::vector<double> x = Luma(a), y = Luma(b);

  // Horizontal pass: h rows x ow columns for mu_x, mu_y, E[x^2], E[y^2], E[xy].
  constexpr int kPlanes = 5;
  std::vector<double> horiz(static_cast<std::size_t>(kPlanes) * h * ow);
  auto H = [&](int p, int r, int c) -> double& {
    return horiz[(static_cast<std::size_t>(p) * h + r) * ow + c];
  };
#pragma omp parallel for schedule(static) if (parallel)
  for (int r = 0; r < h; ++r) {
    const double* xr = x.data() + static_cast<std::size_t>(r) * w;
    const double* yr = y.data() + static_cast<std::size_t>(r) * w;
    for (int c = 0; c < ow; ++c) {
      double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
      for (int t = 0; t < kWindow; ++t) {
        const double g = taps[static_cast<std::size_t>(t)];
        const double xv = xr[c + t], yv = yr[c + t];
        sx += g * xv;
        sy += g * yv;
        sxx += g * (xv * xv);
        syy += g * (yv * yv);
        sxy += g * (xv * yv);
      }
      H(0, r, c) = sx;
      H(1, r, c) = sy;
      H(2, r, c) = sxx;
      H(3, r, c) = syy;
      H(4, r, c) = sxy;
    }
  }

  std::vector<double> row_sum(static_cast<std::size_t>(oh), 0.0);
#pragma omp parallel for schedule(static) if (parallel)
  for (int r = 0; r < oh; ++r) {
    double acc = 0.0;
    for (int c = 0; c < ow; ++c) {
      double m[kPlanes] = {0, 0, 0, 0, 0};
      for (int t = 0; t < kWindow; ++t) {
        const double g = taps[static_cast<std::size_t>(t)];
        for (int p = 0; p < kPlanes; ++p) m[p] += g * H(p, r + t, c);
      }
      const double mx = m[0], my = m[1];
      const double vx = m[2] - mx * mx, vy = m[3] - my * my, cxy = m[4] - mx * my;
      acc += ((2.0 * mx * my + kC1) * (2.0 * cxy + kC2)) /
             ((mx * mx + my * my + kC1) * (vx + vy + kC2));
    }
    row_sum[static_cast<std::size_t>(r)] = acc;
  }
  double total = 0.0;
  for (double s : row_sum) total += s;
  return total / (static_cast<double>(ow) * static_cast<double>(oh));
}

FidelityCurve CurveImpl(const VideoClip& generated, const VideoClip& truth, bool parallel) {
  const int n = static_cast<int>(std::min(generated.size(), truth.size()));
  if (n == 0) throw std::invalid_argument("fidelity curve over an empty overlap");
  FidelityCurve curve;
  curve.points.resize(static_cast<std::size_t>(n));
  // Frames are the parallel unit here; the per-frame kernels stay serial.
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    curve.points[k].index = i;
    curve.points[k].l1 = L1Impl(generated.frames[k], truth.frames[k], false);
    curve.points[k].ssim = SsimImpl(generated.frames[k], truth.frames[k], false);
  }
  double sum_l1 = 0.0, sum_ssim = 0.0;
  for (std::size_t k = 0; k < curve.points.size(); ++k) {
    sum_l1 += curve.points[k].l1;
    sum_ssim += curve.points[k].ssim;
    curve.points[k].mean_l1 = sum_l1 / static_cast<double>(k + 1);
    curve.points[k].mean_ssim = sum_ssim / static_cast<double>(k + 1);
  }
  return curve;
}

}  // namespace

const std::array<double, kWindow>& GaussianTaps() {
  static const std::array<double, kWindow> taps = [] {
    std::array<double, kWindow> t{};
    double sum = 0.0;
    for (int i = 0; i < kWindow; ++i) {
      const double d = i - kWindow / 2;
      t[static_cast<std::size_t>(i)] = std::exp(-(d * d) / (2.0 * kSigma * kSigma));
      sum += t[static_cast<std::size_t>(i)];
    }
    for (double& v : t) v /= sum;
    return t;
  }();
  return taps;
}

std::vector<double> Luma(const Frame& f) {
  std::vector<double> out(static_cast<std::size_t>(f.width) * static_cast<std::size_t>(f.height));
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::uint8_t* p = f.data.data() + i * Frame::kChannels;
    out[i] = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
  }
  return out;
}

double L1Frame(const Frame& a, const Frame& b) { return L1Impl(a, b, true); }
double SsimFrame(const Frame& a, const Frame& b) { return SsimImpl(a, b, true); }
FidelityCurve ComputeCurve(const VideoClip& generated, const VideoClip& truth) {
  return CurveImpl(generated, truth, true);
}

std::string CurveCsv(const FidelityCurve& curve) {
  std::ostringstream out;
  out.precision(17);
  out << "index,l1,ssim\n";
  for (const CurvePoint& p : curve.points) out << p.index << ',' << p.l1 << ',' << p.ssim << '\n';
  return out.str();
}

namespace serial {
double L1Frame(const Frame& a, const Frame& b) { return L1Impl(a, b, false); }
double SsimFrame(const Frame& a, const Frame& b) { return SsimImpl(a, b, false); }
FidelityCurve ComputeCurve(const VideoClip& generated, const VideoClip& truth) {
  return CurveImpl(generated, truth, false);
}
}  // namespace serial

}  // namespace wmeval::fidelity
