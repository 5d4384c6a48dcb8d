// Copyright 2026 The wmeval Authors
// SPDX-License-Identifier: Apache-2.0

#include "wmeval/stats.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace wmeval::stats {
namespace {

void RequireSameLength(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("length mismatch: " + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
  }
}

std::vector<double> Differences(std::span<const double> sim, std::span<const double> real) {
  RequireSameLength(sim, real);
  std::vector<double> d(sim.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = sim[i] - real[i];
  return d;
}

// Continued fraction for the incomplete beta (modified Lentz).
double BetaContinuedFraction(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double Mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean of empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double SampleSd(std::span<const double> xs) {
  if (xs.size() < 2) throw std::invalid_argument("sd needs at least two values");
  const double m = Mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double SuccessRate(const std::vector<bool>& outcomes) {
  if (outcomes.empty()) throw std::invalid_argument("success rate of zero trials");
  const auto s = std::count(outcomes.begin(), outcomes.end(), true);
  return static_cast<double>(s) / static_cast<double>(outcomes.size());
}

double SeedAveragedSuccessRate(std::span<const OutcomeSet> trials) {
  std::size_t total = 0, successes = 0;
  for (const OutcomeSet& t : trials) {
    if (t.empty()) throw std::invalid_argument("trial without labels");
    total += t.size();
    successes += static_cast<std::size_t>(std::count(t.begin(), t.end(), true));
  }
  if (total == 0) throw std::invalid_argument("no trials");
  return static_cast<double>(successes) / static_cast<double>(total);
}

bool MajorityVote(const std::vector<bool>& labels) {
  if (labels.empty()) throw std::invalid_argument("majority vote over no labels");
  const auto s = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
  return 2 * s > labels.size();
}

Correlation Pearson(std::span<const double> xs, std::span<const double> ys) {
  RequireSameLength(xs, ys);
  const std::size_t n = xs.size();
  if (n < 3) throw std::invalid_argument("pearson needs at least 3 points");
  const double mx = Mean(xs), my = Mean(ys);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw UndefinedStatistic("correlation undefined for zero variance");
  Correlation c;
  c.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double df = static_cast<double>(n - 2);
  if (std::abs(c.r) == 1.0) {
    c.p_two_sided = 0.0;
  } else {
    const double t = c.r * std::sqrt(df / (1.0 - c.r * c.r));
    c.p_two_sided = StudentTTwoSidedP(t, df);
  }
  return c;
}

double Mmrv(std::span<const double> sim, std::span<const double> real) {
  RequireSameLength(sim, real);
  const std::size_t n = sim.size();
  if (n < 2) throw std::invalid_argument("mmrv needs at least two policies");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double worst = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if ((sim[i] < sim[j]) != (real[i] < real[j])) worst = std::max(worst, std::abs(real[i] - real[j]));
    }
    total += worst;
  }
  return total / static_cast<double>(n);
}

BiasEstimate MeanBiasError(std::span<const double> sim, std::span<const double> real) {
  const std::vector<double> d = Differences(sim, real);
  if (d.empty()) throw std::invalid_argument("mbe of zero pairs");
  BiasEstimate b;
  b.mbe = Mean(d);
  if (d.size() < 2) {
    b.ci_low = b.ci_high = std::numeric_limits<double>::quiet_NaN();
  } else {
    const double half = kZ95 * SampleSd(d) / std::sqrt(static_cast<double>(d.size()));
    b.ci_low = b.mbe - half;
    b.ci_high = b.mbe + half;
  }
  return b;
}

LimitsOfAgreement BlandAltman(std::span<const double> sim, std::span<const double> real) {
  const std::vector<double> d = Differences(sim, real);
  if (d.size() < 2) throw std::invalid_argument("limits of agreement need at least two pairs");
  LimitsOfAgreement l;
  l.mean_diff = Mean(d);
  l.sd = SampleSd(d);
  l.low = l.mean_diff - kZ95 * l.sd;
  l.high = l.mean_diff + kZ95 * l.sd;
  return l;
}

RatingMatrix::RatingMatrix(std::size_t subjects, std::size_t raters, std::vector<double> values)
    : n_(subjects), k_(raters), values_(std::move(values)) {
  if (n_ < 2 || k_ < 2) throw std::invalid_argument("rating matrix needs >= 2 subjects and raters");
  if (values_.size() != n_ * k_) throw std::invalid_argument("rating matrix has missing cells");
  for (double v : values_) {
    if (!std::isfinite(v)) throw std::invalid_argument("rating matrix has a non-finite cell");
  }
}

double Icc21(const RatingMatrix& m) {
  const std::size_t n = m.subjects(), k = m.raters();
  const double nd = static_cast<double>(n), kd = static_cast<double>(k);
  const double grand = Mean(m.values());

  std::vector<double> row_mean(n, 0.0), col_mean(k, 0.0);
  double ss_total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double v = m(i, j);
      row_mean[i] += v / kd;
      col_mean[j] += v / nd;
      ss_total += (v - grand) * (v - grand);
    }
  }
  if (ss_total == 0.0) return 1.0;

  double ss_rows = 0.0, ss_cols = 0.0;
  for (double r : row_mean) ss_rows += kd * (r - grand) * (r - grand);
  for (double c : col_mean) ss_cols += nd * (c - grand) * (c - grand);
  const double ss_error = std::max(ss_total - ss_rows - ss_cols, 0.0);

  const double ms_rows = ss_rows / (nd - 1.0);
  const double ms_cols = ss_cols / (kd - 1.0);
  const double ms_error = ss_error / ((nd - 1.0) * (kd - 1.0));
  return (ms_rows - ms_error) / (ms_rows + (kd - 1.0) * ms_error + kd / nd * (ms_cols - ms_error));
}

double RegularizedIncompleteBeta(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0) throw std::invalid_argument("incomplete beta needs a, b > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  // The continued fraction converges fast for x < (a + 1) / (a + b + 2).
  if (x < (a + 1.0) / (a + b + 2.0)) return front * BetaContinuedFraction(a, b, x) / a;
  return 1.0 - front * BetaContinuedFraction(b, a, 1.0 - x) / b;
}

double StudentTTwoSidedP(double t, double df) {
  if (df <= 0.0) throw std::invalid_argument("t distribution needs df > 0");
  return RegularizedIncompleteBeta(df / 2.0, 0.5, df / (df + t * t));
}

}  // namespace wmeval::stats
