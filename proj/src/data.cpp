#include "cupid/data.hpp"

#include <cmath>

#include "cupid/tensor.hpp"  // ShapeError

namespace cupid {

namespace {

struct Interval {
    double lo, hi;
    double len() const { return hi - lo; }
};

// Uniform draw over a union of disjoint intervals, weighted by length.
double sample_union(Rng& rng, const std::vector<Interval>& parts) {
    double total = 0.0;
    for (const Interval& p : parts) total += p.len();
    double u = rng.uniform(0.0, total);
    for (const Interval& p : parts) {
        if (u < p.len()) return p.lo + u;
        u -= p.len();
    }
    return parts.back().hi;  // unreachable except for rounding at the edge
}

struct ToyRegion {
    std::vector<Interval> support;
    double offset;
    double noise_std;
};

std::vector<RegressionSample> gen_piecewise(
    const std::vector<ToyRegion>& regions, double (*mean)(double, int),
    std::size_t n_per_region, std::uint64_t seed, double density_ratio) {
    if (density_ratio <= 0.0) {
        throw ShapeError("toy data: density ratio must be positive");
    }
    std::vector<RegressionSample> out;
    Rng rng = Rng(seed).derive(0xDA7A);
    for (std::size_t r = 0; r < regions.size(); ++r) {
        std::size_t n = n_per_region;
        if (r > 0) {
            n = static_cast<std::size_t>(
                std::llround(static_cast<double>(n_per_region) * density_ratio));
        }
        int region = static_cast<int>(r) + 1;
        for (std::size_t i = 0; i < n; ++i) {
            RegressionSample s;
            s.region = region;
            s.x = sample_union(rng, regions[r].support);
            s.y = mean(s.x, region) + rng.gaussian(0.0, regions[r].noise_std);
            out.push_back(s);
        }
    }
    return out;
}

}  // namespace

double toy1_mean(double x, int region) {
    return 3.0 * std::sin(0.8 * x) + (region == 2 ? 5.7 : 5.3);
}

double toy2_mean(double x, int region) {
    return 3.0 * std::sin(0.8 * x) + std::sin(2.0 * x) +
           (region == 2 ? 1.8 : 1.3);
}

std::vector<RegressionSample> gen_toy1(std::size_t n_per_region,
                                       std::uint64_t seed,
                                       double density_ratio) {
    static const std::vector<ToyRegion> regions = {
        {{{5.0, 8.0}, {12.0, 14.0}}, 5.3, 0.7},
        {{{8.0, 12.0}}, 5.7, 0.3},
    };
    return gen_piecewise(regions, toy1_mean, n_per_region, seed, density_ratio);
}

std::vector<RegressionSample> gen_toy2(std::size_t n_per_region,
                                       std::uint64_t seed,
                                       double density_ratio) {
    static const std::vector<ToyRegion> regions = {
        {{{5.0, 9.0}}, 1.3, 0.7},
        {{{11.0, 13.0}}, 1.8, 0.2},
    };
    return gen_piecewise(regions, toy2_mean, n_per_region, seed, density_ratio);
}

std::vector<double> blob_center(std::size_t c, std::size_t dim) {
    std::vector<double> center(dim, 0.0);
    double sign = ((c / dim) % 2 == 0) ? 1.0 : -1.0;
    center[c % dim] = sign;
    return center;
}

std::vector<ClassificationSample> gen_blobs(std::size_t classes,
                                            std::size_t n_per_class,
                                            std::size_t dim, double spread,
                                            std::uint64_t seed) {
    if (classes < 2) throw ShapeError("gen_blobs: need at least 2 classes");
    if (dim == 0) throw ShapeError("gen_blobs: zero dimension");
    if (spread <= 0.0) throw ShapeError("gen_blobs: spread must be positive");

    std::vector<ClassificationSample> out;
    Rng rng = Rng(seed).derive(0xB10B);
    for (std::size_t c = 0; c < classes; ++c) {
        std::vector<double> center = blob_center(c, dim);
        for (std::size_t i = 0; i < n_per_class; ++i) {
            ClassificationSample s;
            s.label = static_cast<int>(c);
            s.features.resize(dim);
            for (std::size_t j = 0; j < dim; ++j) {
                s.features[j] = center[j] + rng.gaussian(0.0, spread);
            }
            out.push_back(std::move(s));
        }
    }
    return out;
}

std::vector<ClassificationSample> gen_ood_shift(std::size_t classes,
                                                std::size_t n_per_class,
                                                std::size_t dim, double spread,
                                                double magnitude,
                                                std::uint64_t seed) {
    if (magnitude < 0.0) throw ShapeError("gen_ood_shift: negative magnitude");
    auto out = gen_blobs(classes, n_per_class, dim, spread, seed);
    double step = magnitude / std::sqrt(static_cast<double>(dim));
    for (ClassificationSample& s : out) {
        for (double& f : s.features) f += step;
        s.is_ood = true;
    }
    return out;
}

void inject_label_noise(std::vector<ClassificationSample>& samples,
                        std::size_t classes, double fraction,
                        std::uint64_t seed) {
    if (fraction < 0.0 || fraction > 1.0) {
        throw ShapeError("inject_label_noise: fraction outside [0,1]");
    }
    if (fraction == 0.0) return;
    Rng rng = Rng(seed).derive(0x401E);
    for (ClassificationSample& s : samples) {
        if (rng.uniform() >= fraction) continue;
        // Uniform over the other classes.
        auto shift = 1 + static_cast<int>(rng.below(classes - 1));
        s.label = (s.label + shift) % static_cast<int>(classes);
    }
}

}  // namespace cupid
