#include "cupid/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "cupid/tensor.hpp"  // ShapeError

namespace cupid {

namespace {

// Mid-ranks (1-based); tied values share the average of their rank range.
std::vector<double> midranks(std::span<const double> v) {
    std::size_t n = v.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> rank(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
        double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = r;
        i = j + 1;
    }
    return rank;
}

}  // namespace

double roc_auc(std::span<const ScoredSample> samples) {
    std::size_t pos = 0, neg = 0;
    std::vector<double> scores;
    scores.reserve(samples.size());
    for (const ScoredSample& s : samples) {
        scores.push_back(s.score);
        (s.label != 0 ? pos : neg) += 1;
    }
    if (pos == 0 || neg == 0) {
        throw ShapeError("roc_auc: needs both classes, got " +
                         std::to_string(pos) + " positives / " +
                         std::to_string(neg) + " negatives");
    }
    std::vector<double> rank = midranks(scores);
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].label != 0) rank_sum += rank[i];
    }
    double p = static_cast<double>(pos), q = static_cast<double>(neg);
    return (rank_sum - p * (p + 1.0) / 2.0) / (p * q);
}

double aupr(std::span<const ScoredSample> samples) {
    std::size_t total_pos = 0;
    for (const ScoredSample& s : samples) total_pos += (s.label != 0);
    if (total_pos == 0) throw ShapeError("aupr: no positive samples");

    std::vector<std::size_t> idx(samples.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return samples[a].score > samples[b].score;
    });

    double ap = 0.0;
    double prev_recall = 0.0;
    std::size_t tp = 0, taken = 0;
    std::size_t i = 0;
    while (i < idx.size()) {
        // One threshold per distinct score value.
        std::size_t j = i;
        while (j + 1 < idx.size() &&
               samples[idx[j + 1]].score == samples[idx[i]].score) {
            ++j;
        }
        for (std::size_t k = i; k <= j; ++k) {
            tp += (samples[idx[k]].label != 0);
            ++taken;
        }
        double precision = static_cast<double>(tp) / static_cast<double>(taken);
        double recall = static_cast<double>(tp) / static_cast<double>(total_pos);
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j + 1;
    }
    return ap;
}

double aurc(std::span<const ScoredSample> samples) {
    if (samples.empty()) throw ShapeError("aurc: empty input");
    std::vector<std::size_t> idx(samples.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return samples[a].score < samples[b].score;
    });
    double err_sum = 0.0, risk_sum = 0.0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        err_sum += samples[idx[i]].error;
        risk_sum += err_sum / static_cast<double>(i + 1);
    }
    return risk_sum / static_cast<double>(samples.size());
}

double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw ShapeError("pearson: length mismatch " + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()));
    }
    std::size_t n = a.size();
    if (n < 2) throw ShapeError("pearson: need at least 2 samples");
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0) {
        throw ShapeError("pearson: zero-variance input");
    }
    return sab / std::sqrt(saa * sbb);
}

double spearman(std::span<const double> a, std::span<const double> b) {
    std::vector<double> ra = midranks(a), rb = midranks(b);
    return pearson(ra, rb);
}

double ause(std::span<const ScoredSample> samples, std::size_t steps) {
    std::size_t n = samples.size();
    if (steps == 0) throw ShapeError("ause: zero steps");
    if (n < steps) {
        throw ShapeError("ause: need at least " + std::to_string(steps) +
                         " samples, got " + std::to_string(n));
    }
    for (const ScoredSample& s : samples) {
        if (s.error < 0.0) throw ShapeError("ause: negative error");
    }

    // Suffix means of the errors once the highest-X samples are removed,
    // where X is the score for the method curve and the error for the oracle.
    auto suffix_curve = [&](auto key) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(),
                         [&](std::size_t x, std::size_t y) {
                             return key(samples[x]) > key(samples[y]);
                         });
        // partial_sum[i] = sum of errors of the n-i lowest-ranked samples.
        std::vector<double> kept_sum(n + 1, 0.0);
        for (std::size_t i = n; i-- > 0;) {
            kept_sum[i] = kept_sum[i + 1] + samples[idx[i]].error;
        }
        return kept_sum;
    };
    std::vector<double> by_score =
        suffix_curve([](const ScoredSample& s) { return s.score; });
    std::vector<double> by_error =
        suffix_curve([](const ScoredSample& s) { return s.error; });

    double base = by_score[0] / static_cast<double>(n);  // mean of all errors
    if (base == 0.0) return 0.0;

    double acc = 0.0;
    for (std::size_t t = 0; t < steps; ++t) {
        std::size_t removed = t * n / steps;
        double kept = static_cast<double>(n - removed);
        double sp = by_score[removed] / kept;
        double oracle = by_error[removed] / kept;
        acc += (sp - oracle) / base;
    }
    return acc / static_cast<double>(steps);
}

double uce(std::span<const ScoredSample> samples, std::size_t bins) {
    std::size_t n = samples.size();
    if (bins == 0) throw ShapeError("uce: zero bins");
    if (n < bins) {
        throw ShapeError("uce: need at least " + std::to_string(bins) +
                         " samples, got " + std::to_string(n));
    }
    double lo = samples[0].score, hi = samples[0].score;
    for (const ScoredSample& s : samples) {
        lo = std::min(lo, s.score);
        hi = std::max(hi, s.score);
    }
    if (hi == lo) bins = 1;  // degenerate range: a single bin

    std::vector<double> score_sum(bins, 0.0), err_sum(bins, 0.0);
    std::vector<std::size_t> count(bins, 0);
    for (const ScoredSample& s : samples) {
        std::size_t b = 0;
        if (bins > 1) {
            double f = (s.score - lo) / (hi - lo) * static_cast<double>(bins);
            b = std::min(bins - 1, static_cast<std::size_t>(f));
        }
        score_sum[b] += s.score;
        err_sum[b] += s.error;
        ++count[b];
    }
    double out = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
        if (count[b] == 0) continue;
        double c = static_cast<double>(count[b]);
        out += (c / static_cast<double>(n)) *
               std::abs(score_sum[b] / c - err_sum[b] / c);
    }
    return out;
}

}  // namespace cupid
