#pragma once

#include <cstdint>
#include <vector>

#include "cupid/rng.hpp"

namespace cupid {

// One point of a 1-D regression task.  region identifies the generating
// branch (1-based); branches partition the x axis.
struct RegressionSample {
    double x = 0.0;
    double y = 0.0;
    int region = 0;
};

// One point of a synthetic classification task.
struct ClassificationSample {
    std::vector<double> features;
    int label = 0;
    bool is_ood = false;
};

// Piecewise sine task with two noise regimes and full support:
//   region 1: x in [5,8) u [12,14),  y = 3 sin(0.8 x) + 5.3 + N(0, 0.7)
//   region 2: x in [8,12),           y = 3 sin(0.8 x) + 5.7 + N(0, 0.3)
// N(mu, sigma) is a Gaussian with standard deviation sigma.  x is uniform
// within each region (across the union for region 1).  Region 1 draws
// n_per_region samples and region 2 round(n_per_region * density_ratio),
// so relative density is tunable.
std::vector<RegressionSample> gen_toy1(std::size_t n_per_region,
                                       std::uint64_t seed,
                                       double density_ratio = 1.0);

// Same shape of task with an unsupported gap in the middle:
//   region 1: x in [5,9),   y = 3 sin(0.8 x) + sin(2 x) + 1.3 + N(0, 0.7)
//   region 2: x in [11,13), y = 3 sin(0.8 x) + sin(2 x) + 1.8 + N(0, 0.2)
// No samples fall in [9,11).
std::vector<RegressionSample> gen_toy2(std::size_t n_per_region,
                                       std::uint64_t seed,
                                       double density_ratio = 1.0);

// Noise-free regression means of the two tasks, for reference curves.
double toy1_mean(double x, int region);
double toy2_mean(double x, int region);

// Gaussian blobs for classification.  Class centers sit on signed coordinate
// axes at unit radius (center c is +-e_{c mod dim}, sign flipping each wrap),
// fixed deterministically by (classes, dim); samples are N(center, spread^2 I).
// Exactly n_per_class samples per class, classes in order.
std::vector<ClassificationSample> gen_blobs(std::size_t classes,
                                            std::size_t n_per_class,
                                            std::size_t dim, double spread,
                                            std::uint64_t seed);

// Class center used by gen_blobs.
std::vector<double> blob_center(std::size_t c, std::size_t dim);

// Out-of-distribution variant: same blob structure translated by `magnitude`
// along the unit diagonal (1,..,1)/sqrt(dim).  Magnitude 0 is distributionally
// identical to gen_blobs.  All samples are flagged is_ood.
std::vector<ClassificationSample> gen_ood_shift(std::size_t classes,
                                                std::size_t n_per_class,
                                                std::size_t dim, double spread,
                                                double magnitude,
                                                std::uint64_t seed);

// Reassign a fraction of labels uniformly to one of the other classes.
void inject_label_noise(std::vector<ClassificationSample>& samples,
                        std::size_t classes, double fraction,
                        std::uint64_t seed);

}  // namespace cupid
