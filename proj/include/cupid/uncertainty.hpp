#pragma once

#include <optional>
#include <vector>

#include "cupid/cupid_module.hpp"
#include "cupid/nn.hpp"

namespace cupid {

// Per-sample uncertainty scores.  u_epis is the L1 deviation between the
// host prediction and the prediction off the reconstructed feature; u_alea
// is the summed learned variance sum_j exp(s_j).  error is filled only when
// targets are supplied: L1 distance for regression, a 0/1 misclassification
// flag for classification.
struct UncertaintyRecord {
    std::size_t input_id = 0;
    double u_alea = 0.0;
    double u_epis = 0.0;
    std::optional<double> error;
    std::vector<double> y_hat;
    std::vector<double> y_hat_prime;
};

// Score a batch.  x is [n, in]; targets, when present, are [n, k] regression
// values or integer class labels matching the split's head.
std::vector<UncertaintyRecord> estimate(const SplitNetwork& split,
                                        const CupidModule& module,
                                        const Tensor& x);
std::vector<UncertaintyRecord> estimate(const SplitNetwork& split,
                                        const CupidModule& module,
                                        const Tensor& x, const Tensor& y_true);
std::vector<UncertaintyRecord> estimate(const SplitNetwork& split,
                                        const CupidModule& module,
                                        const Tensor& x,
                                        const std::vector<int>& labels);

// First-order probe of the suffix around the layer-l feature of one input x
// ([1, in]).  Compares the exact effect of moving the feature a fraction
// alpha of the way toward the module's reconstruction against the Jacobian
// prediction:
//   exact  = |F(m + alpha dm) - F(m)|_1,   dm = m' - m
//   linear = |J_F(m) (alpha dm)|_1         (k reverse passes for J)
// Suffix outputs are pre-head logits, so the comparison is against the raw
// network map.  rel_err = |exact - linear| / max(linear, 1e-12).
struct TaylorCheck {
    double exact = 0.0;
    double linear = 0.0;
    double rel_err = 0.0;
};
TaylorCheck taylor_check(const SplitNetwork& split, const CupidModule& module,
                         const Tensor& x, double alpha);

// MC-dropout baseline: mean per-coordinate variance of the head output over
// `passes` stochastic forward passes (Bessel-corrected, so passes >= 2).
// The network must have dropout layers.  Deterministic for a given seed.
std::vector<double> mc_dropout_estimate(const Mlp& net, const Tensor& x,
                                        std::size_t passes, std::uint64_t seed);

}  // namespace cupid
