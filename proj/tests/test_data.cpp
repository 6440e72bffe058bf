#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "cupid/data.hpp"
#include "cupid/tensor.hpp"

using namespace cupid;

namespace {

bool in_union(double x, std::initializer_list<std::pair<double, double>> parts) {
    for (auto [lo, hi] : parts) {
        if (x >= lo && x < hi) return true;
    }
    return false;
}

// Mean and standard deviation of the noise residuals of one region.
std::pair<double, double> residual_stats(
    const std::vector<RegressionSample>& samples, int region,
    double (*mean_fn)(double, int)) {
    double sum = 0.0, sumsq = 0.0;
    std::size_t n = 0;
    for (const RegressionSample& s : samples) {
        if (s.region != region) continue;
        double r = s.y - mean_fn(s.x, s.region);
        sum += r;
        sumsq += r * r;
        ++n;
    }
    double m = sum / static_cast<double>(n);
    double var = sumsq / static_cast<double>(n) - m * m;
    return {m, std::sqrt(var)};
}

}  // namespace

TEST_CASE("toy1 respects supports, counts and noise regimes") {
    const std::size_t n = 4000;
    auto samples = gen_toy1(n, 42);
    REQUIRE(samples.size() == 2 * n);

    std::size_t n1 = 0, n2 = 0;
    for (const RegressionSample& s : samples) {
        if (s.region == 1) {
            ++n1;
            CHECK(in_union(s.x, {{5.0, 8.0}, {12.0, 14.0}}));
        } else {
            REQUIRE(s.region == 2);
            ++n2;
            CHECK(in_union(s.x, {{8.0, 12.0}}));
        }
    }
    CHECK(n1 == n);
    CHECK(n2 == n);

    // Residuals are centered with the documented standard deviations.
    // stderr of the mean is sigma/sqrt(n); stderr of sigma-hat ~ sigma/sqrt(2n).
    auto [m1, s1] = residual_stats(samples, 1, toy1_mean);
    auto [m2, s2] = residual_stats(samples, 2, toy1_mean);
    CHECK(std::abs(m1) < 4.0 * 0.7 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(m2) < 4.0 * 0.3 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(s1 - 0.7) < 4.0 * 0.7 / std::sqrt(2.0 * n));
    CHECK(std::abs(s2 - 0.3) < 4.0 * 0.3 / std::sqrt(2.0 * n));
}

TEST_CASE("toy2 leaves the gap empty and uses its own regimes") {
    const std::size_t n = 3000;
    auto samples = gen_toy2(n, 7);
    REQUIRE(samples.size() == 2 * n);
    for (const RegressionSample& s : samples) {
        CHECK_FALSE(in_union(s.x, {{9.0, 11.0}}));  // unsupported gap
        if (s.region == 1) CHECK(in_union(s.x, {{5.0, 9.0}}));
        if (s.region == 2) CHECK(in_union(s.x, {{11.0, 13.0}}));
    }
    auto [m1, s1] = residual_stats(samples, 1, toy2_mean);
    auto [m2, s2] = residual_stats(samples, 2, toy2_mean);
    CHECK(std::abs(m1) < 4.0 * 0.7 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(s1 - 0.7) < 4.0 * 0.7 / std::sqrt(2.0 * n));
    CHECK(std::abs(s2 - 0.2) < 4.0 * 0.2 / std::sqrt(2.0 * n));
}

TEST_CASE("toy mean curves match their closed forms") {
    // Spell the arguments as 0.8 * x (not a pre-multiplied literal) so the
    // expected value rounds identically to the implementation.
    CHECK(toy1_mean(6.0, 1) == 3.0 * std::sin(0.8 * 6.0) + 5.3);
    CHECK(toy1_mean(10.0, 2) == 3.0 * std::sin(0.8 * 10.0) + 5.7);
    CHECK(toy2_mean(6.0, 1) ==
          3.0 * std::sin(0.8 * 6.0) + std::sin(2.0 * 6.0) + 1.3);
    CHECK(toy2_mean(12.0, 2) ==
          3.0 * std::sin(0.8 * 12.0) + std::sin(2.0 * 12.0) + 1.8);
}

TEST_CASE("density ratio scales the second region count") {
    auto half = gen_toy1(100, 3, 0.5);
    std::size_t n2 = 0;
    for (const RegressionSample& s : half) n2 += (s.region == 2);
    CHECK(half.size() == 150);
    CHECK(n2 == 50);

    auto third = gen_toy2(99, 3, 1.0 / 3.0);  // llround(33.0) = 33
    std::size_t t2 = 0;
    for (const RegressionSample& s : third) t2 += (s.region == 2);
    CHECK(t2 == 33);

    CHECK_THROWS_AS(gen_toy1(10, 1, 0.0), ShapeError);
    CHECK_THROWS_AS(gen_toy2(10, 1, -1.0), ShapeError);
}

TEST_CASE("toy generators are deterministic in the seed") {
    auto a = gen_toy2(50, 9);
    auto b = gen_toy2(50, 9);
    auto c = gen_toy2(50, 10);
    REQUIRE(a.size() == b.size());
    bool all_equal = true, any_differs = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        all_equal = all_equal && a[i].x == b[i].x && a[i].y == b[i].y;
        any_differs = any_differs || a[i].x != c[i].x;
    }
    CHECK(all_equal);
    CHECK(any_differs);
}

TEST_CASE("blob centers sit on signed unit axes") {
    CHECK(blob_center(0, 2) == std::vector<double>{1.0, 0.0});
    CHECK(blob_center(1, 2) == std::vector<double>{0.0, 1.0});
    CHECK(blob_center(2, 2) == std::vector<double>{-1.0, 0.0});
    CHECK(blob_center(3, 2) == std::vector<double>{0.0, -1.0});
    CHECK(blob_center(3, 3) == std::vector<double>{-1.0, 0.0, 0.0});
    CHECK(blob_center(6, 3) == std::vector<double>{1.0, 0.0, 0.0});
}

TEST_CASE("gen_blobs produces exact per-class counts around the centers") {
    const std::size_t per_class = 2000;
    auto samples = gen_blobs(3, per_class, 2, 0.4, 11);
    REQUIRE(samples.size() == 3 * per_class);

    for (std::size_t c = 0; c < 3; ++c) {
        std::vector<double> mean(2, 0.0);
        std::size_t count = 0;
        for (const ClassificationSample& s : samples) {
            if (s.label != static_cast<int>(c)) continue;
            CHECK_FALSE(s.is_ood);
            REQUIRE(s.features.size() == 2);
            ++count;
            mean[0] += s.features[0];
            mean[1] += s.features[1];
        }
        CHECK(count == per_class);
        std::vector<double> center = blob_center(c, 2);
        for (std::size_t j = 0; j < 2; ++j) {
            mean[j] /= static_cast<double>(count);
            CHECK(std::abs(mean[j] - center[j]) <
                  4.0 * 0.4 / std::sqrt(static_cast<double>(count)));
        }
    }

    CHECK_THROWS_AS(gen_blobs(1, 10, 2, 0.5, 1), ShapeError);
    CHECK_THROWS_AS(gen_blobs(3, 10, 0, 0.5, 1), ShapeError);
    CHECK_THROWS_AS(gen_blobs(3, 10, 2, 0.0, 1), ShapeError);
}

TEST_CASE("ood shift translates every sample along the diagonal") {
    auto base = gen_blobs(3, 100, 2, 0.5, 21);
    auto zero = gen_ood_shift(3, 100, 2, 0.5, 0.0, 21);
    REQUIRE(base.size() == zero.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
        CHECK(zero[i].is_ood);
        CHECK(zero[i].label == base[i].label);
        CHECK(zero[i].features == base[i].features);  // magnitude 0 = identity
    }

    double mag = 3.0;
    auto shifted = gen_ood_shift(3, 100, 2, 0.5, mag, 21);
    double step = mag / std::sqrt(2.0);
    for (std::size_t i = 0; i < base.size(); ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            CHECK(shifted[i].features[j] ==
                  doctest::Approx(base[i].features[j] + step).epsilon(1e-12));
        }
    }

    CHECK_THROWS_AS(gen_ood_shift(3, 10, 2, 0.5, -1.0, 1), ShapeError);
}

TEST_CASE("label noise flips the right fraction and never keeps a label") {
    auto samples = gen_blobs(4, 2500, 2, 0.5, 31);
    auto noisy = samples;
    inject_label_noise(noisy, 4, 0.2, 99);

    std::size_t flipped = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        CHECK(noisy[i].features == samples[i].features);
        CHECK(noisy[i].label >= 0);
        CHECK(noisy[i].label < 4);
        flipped += (noisy[i].label != samples[i].label);
    }
    // Every selected sample must change class, so flipped ~ Binomial(n, 0.2).
    double n = static_cast<double>(samples.size());
    double sigma = std::sqrt(n * 0.2 * 0.8);
    CHECK(std::abs(static_cast<double>(flipped) - 0.2 * n) < 4.0 * sigma);

    // fraction 0 is a no-op; fraction 1 flips everything.
    auto untouched = samples;
    inject_label_noise(untouched, 4, 0.0, 5);
    bool same = true;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        same = same && untouched[i].label == samples[i].label;
    }
    CHECK(same);

    auto all = samples;
    inject_label_noise(all, 4, 1.0, 5);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        CHECK(all[i].label != samples[i].label);
    }

    // Determinism in the seed.
    auto again = samples;
    inject_label_noise(again, 4, 0.2, 99);
    bool identical = true;
    for (std::size_t i = 0; i < noisy.size(); ++i) {
        identical = identical && again[i].label == noisy[i].label;
    }
    CHECK(identical);

    CHECK_THROWS_AS(inject_label_noise(samples, 4, 1.5, 1), ShapeError);
    CHECK_THROWS_AS(inject_label_noise(samples, 4, -0.1, 1), ShapeError);
}
