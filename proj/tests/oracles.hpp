#pragma once

// Brute-force reference implementations of the evaluation metrics.  These
// trade any cleverness for being obviously correct: quadratic pairwise scans,
// per-threshold rescans, per-step recomputation.  The real implementations
// must agree with these to near machine precision.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "cupid/metrics.hpp"

namespace oracle {

using cupid::ScoredSample;

// P(score_pos > score_neg) + P(tie)/2 by scanning every (positive, negative)
// pair.
inline double auc_pairwise(const std::vector<ScoredSample>& s) {
    double wins = 0.0;
    std::size_t pos = 0, neg = 0;
    for (const ScoredSample& p : s) {
        if (p.label != 0) {
            ++pos;
            continue;
        }
        ++neg;
    }
    for (const ScoredSample& p : s) {
        if (p.label == 0) continue;
        for (const ScoredSample& q : s) {
            if (q.label != 0) continue;
            if (p.score > q.score) wins += 1.0;
            if (p.score == q.score) wins += 0.5;
        }
    }
    return wins / (static_cast<double>(pos) * static_cast<double>(neg));
}

// Average precision by stepping through the distinct score values high to
// low and rescanning the whole sample set at each threshold.
inline double aupr_threshold(const std::vector<ScoredSample>& s) {
    std::vector<double> thresholds;
    for (const ScoredSample& p : s) thresholds.push_back(p.score);
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                     thresholds.end());
    std::size_t total_pos = 0;
    for (const ScoredSample& p : s) total_pos += (p.label != 0);

    double ap = 0.0, prev_recall = 0.0;
    for (double t : thresholds) {
        std::size_t tp = 0, taken = 0;
        for (const ScoredSample& p : s) {
            if (p.score < t) continue;
            ++taken;
            tp += (p.label != 0);
        }
        double precision = static_cast<double>(tp) / static_cast<double>(taken);
        double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return ap;
}

// Mid-ranks by counting: rank_i = #{v_j < v_i} + (#{v_j == v_i} + 1) / 2.
inline std::vector<double> midranks_count(const std::vector<double>& v) {
    std::vector<double> rank(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::size_t less = 0, equal = 0;
        for (double x : v) {
            if (x < v[i]) ++less;
            if (x == v[i]) ++equal;
        }
        rank[i] = static_cast<double>(less) +
                  (static_cast<double>(equal) + 1.0) / 2.0;
    }
    return rank;
}

// Pearson from raw moment sums (a different arithmetic path than the
// two-pass implementation).
inline double pearson_raw(const std::vector<double>& a,
                          const std::vector<double>& b) {
    double n = static_cast<double>(a.size());
    double sa = 0, sb = 0, sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sa += a[i];
        sb += b[i];
        sab += a[i] * b[i];
        saa += a[i] * a[i];
        sbb += b[i] * b[i];
    }
    double cov = sab / n - (sa / n) * (sb / n);
    double va = saa / n - (sa / n) * (sa / n);
    double vb = sbb / n - (sb / n) * (sb / n);
    return cov / std::sqrt(va * vb);
}

inline double spearman_count(const std::vector<double>& a,
                             const std::vector<double>& b) {
    return pearson_raw(midranks_count(a), midranks_count(b));
}

// Risk-coverage area: for every coverage k = 1..n select the k lowest-score
// samples (ties resolved toward earlier input order) from scratch and
// average their error means.
inline double aurc_rescan(const std::vector<ScoredSample>& s) {
    std::size_t n = s.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        if (s[x].score != s[y].score) return s[x].score < s[y].score;
        return x < y;
    });
    double total = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
        double err = 0.0;
        for (std::size_t i = 0; i < k; ++i) err += s[order[i]].error;
        total += err / static_cast<double>(k);
    }
    return total / static_cast<double>(n);
}

// Sparsification error area, recomputing each curve point from scratch.
// Removal order breaks score/error ties toward earlier input order, matching
// a stable descending sort.
inline double ause_rescan(const std::vector<ScoredSample>& s,
                          std::size_t steps) {
    std::size_t n = s.size();
    auto removal_order = [&](auto key) {
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t x, std::size_t y) {
                      if (key(s[x]) != key(s[y])) return key(s[x]) > key(s[y]);
                      return x < y;
                  });
        return order;
    };
    auto by_score = removal_order([](const ScoredSample& p) { return p.score; });
    auto by_error = removal_order([](const ScoredSample& p) { return p.error; });

    double base = 0.0;
    for (const ScoredSample& p : s) base += p.error;
    base /= static_cast<double>(n);
    if (base == 0.0) return 0.0;

    auto mean_after_removal = [&](const std::vector<std::size_t>& order,
                                  std::size_t removed) {
        double sum = 0.0;
        for (std::size_t i = removed; i < n; ++i) sum += s[order[i]].error;
        return sum / static_cast<double>(n - removed);
    };

    double acc = 0.0;
    for (std::size_t t = 0; t < steps; ++t) {
        std::size_t removed = t * n / steps;
        acc += (mean_after_removal(by_score, removed) -
                mean_after_removal(by_error, removed)) /
               base;
    }
    return acc / static_cast<double>(steps);
}

// Calibration error with explicit per-bin loops.
inline double uce_loop(const std::vector<ScoredSample>& s, std::size_t bins) {
    std::size_t n = s.size();
    double lo = s[0].score, hi = s[0].score;
    for (const ScoredSample& p : s) {
        lo = std::min(lo, p.score);
        hi = std::max(hi, p.score);
    }
    if (hi == lo) bins = 1;
    double out = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
        double score_sum = 0.0, err_sum = 0.0;
        std::size_t count = 0;
        for (const ScoredSample& p : s) {
            std::size_t bin = 0;
            if (bins > 1) {
                double f = (p.score - lo) / (hi - lo) * static_cast<double>(bins);
                bin = std::min(bins - 1, static_cast<std::size_t>(f));
            }
            if (bin != b) continue;
            score_sum += p.score;
            err_sum += p.error;
            ++count;
        }
        if (count == 0) continue;
        double c = static_cast<double>(count);
        out += (c / static_cast<double>(n)) *
               std::abs(score_sum / c - err_sum / c);
    }
    return out;
}

}  // namespace oracle
