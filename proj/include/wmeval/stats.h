// Copyright 2026 The wmeval Authors
// SPDX-License-Identifier: Apache-2.0

// Agreement and bias statistics between simulated and real success rates,
// and between raters.

#ifndef WMEVAL_STATS_H_
#define WMEVAL_STATS_H_

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace wmeval::stats {

class UndefinedStatistic : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline constexpr double kZ95 = 1.96;

// S / N. Throws std::invalid_argument on an empty list.
double SuccessRate(const std::vector<bool>& outcomes);

// One trial's labels, e.g. raters x seeds.
using OutcomeSet = std::vector<bool>;

// Mean over every (trial, rater, seed) label.
double SeedAveragedSuccessRate(std::span<const OutcomeSet> trials);

// True iff strictly more than half the labels are successes.
bool MajorityVote(const std::vector<bool>& labels);

struct Correlation {
  double r = 0.0;
  double p_two_sided = 1.0;
};

// Sample Pearson r with a two-sided p-value from Student's t on n - 2
// degrees of freedom. Needs n >= 3 and non-zero variance on both sides
// (UndefinedStatistic otherwise).
Correlation Pearson(std::span<const double> xs, std::span<const double> ys);

// Mean maximum rank violation: for each policy i, the largest real-rate gap
// |real_i - real_j| over policies j whose strict ordering against i differs
// between sim and real; averaged over i.
double Mmrv(std::span<const double> sim, std::span<const double> real);

struct BiasEstimate {
  double mbe = 0.0;
  double ci_low = 0.0;   // NaN when n < 2
  double ci_high = 0.0;  // NaN when n < 2
};

// Mean of sim - real with a normal-approximation 95% interval,
// mbe +/- 1.96 * sd / sqrt(n).
BiasEstimate MeanBiasError(std::span<const double> sim, std::span<const double> real);

struct LimitsOfAgreement {
  double mean_diff = 0.0;
  double sd = 0.0;
  double low = 0.0;
  double high = 0.0;
};

// Bland-Altman: mean difference +/- 1.96 * sd of the differences. n >= 2.
LimitsOfAgreement BlandAltman(std::span<const double> sim, std::span<const double> real);

// n subjects x k raters, row-major, no missing cells.
class RatingMatrix {
 public:
  RatingMatrix(std::size_t subjects, std::size_t raters, std::vector<double> values);

  std::size_t subjects() const { return n_; }
  std::size_t raters() const { return k_; }
  double operator()(std::size_t subject, std::size_t rater) const { return values_[subject * k_ + rater]; }
  std::span<const double> values() const { return values_; }

 private:
  std::size_t n_;
  std::size_t k_;
  std::vector<double> values_;
};

// ICC(2,1): two-way random effects, absolute agreement, single rater.
// A matrix with every cell equal is defined as 1.
double Icc21(const RatingMatrix& m);

double Mean(std::span<const double> xs);
// Sample standard deviation (n - 1 denominator).
double SampleSd(std::span<const double> xs);

// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction.
double RegularizedIncompleteBeta(double a, double b, double x);
// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
double StudentTTwoSidedP(double t, double df);

}  // namespace wmeval::stats

#endif  // WMEVAL_STATS_H_
