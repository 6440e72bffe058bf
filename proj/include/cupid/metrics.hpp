#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cupid {

// One scored sample: an uncertainty score plus either a binary label
// (detection metrics) or a non-negative error (risk/sparsification metrics).
struct ScoredSample {
    double score = 0.0;
    int label = 0;
    double error = 0.0;
};

// ROC AUC with exact tie handling: P(score+ > score-) + P(tie)/2, computed
// from mid-ranks.  Throws if either class is missing.
double roc_auc(std::span<const ScoredSample> samples);

// Area under precision-recall by step-wise interpolation over descending
// score thresholds, tied scores grouped into one threshold.  Throws if there
// are no positives.
double aupr(std::span<const ScoredSample> samples);

// Area under the risk-coverage curve: sort ascending by score (ties keep
// input order), risk(i) = mean error of the i most confident samples, and
// average the risks over i = 1..n.
double aurc(std::span<const ScoredSample> samples);

// Pearson correlation, two-pass.  Throws for n < 2 or a zero-variance input.
double pearson(std::span<const double> a, std::span<const double> b);

// Spearman rank correlation with mid-ranks for ties.  Throws when either
// rank vector has zero variance.
double spearman(std::span<const double> a, std::span<const double> b);

// Area under the sparsification error curve.  For each fraction f = t/steps
// (t = 0..steps-1), sp(f) is the mean error after removing the floor(f*n)
// highest-scored samples; the oracle removes highest-error samples instead.
// Both curves are normalized by sp(0) and AUSE is the mean gap.  Requires
// n >= steps and non-negative errors; all-zero errors give 0.
double ause(std::span<const ScoredSample> samples, std::size_t steps = 100);

// Uncertainty calibration error over equal-width score bins:
//   sum_b (|B_b|/n) * |mean score in B_b - mean error in B_b|
// A degenerate score range collapses to a single bin.  Requires n >= bins.
double uce(std::span<const ScoredSample> samples, std::size_t bins = 10);

}  // namespace cupid
