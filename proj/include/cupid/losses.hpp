#pragma once

#include "cupid/tensor.hpp"

namespace cupid {

// Heteroscedastic regression loss, averaged over the batch:
//   (1/N) sum_n sum_j [ exp(-s_nj) * (y_nj - y'_nj)^2 + s_nj ] / 2
// y are targets (one-hot rows for classification, where y' lives in softmax
// space and this becomes a Brier-style objective).  Minimized over s at
// s = log (y - y')^2 per coordinate, so exp(s) learns the squared error.
// All tensors are [n, k] on the same tape.
Tensor alea_loss(Tape& tape, const Tensor& y, const Tensor& y_prime,
                 const Tensor& s);

// Epistemic consistency loss, averaged over the batch:
//   (1/N) sum_n [ |y_hat_n - y_hat'_n|_1 - lambda1 * |m'_n - m_n|_1 ]
// The first term keeps the reconstructed feature prediction-consistent; the
// subtracted term pushes the reconstruction as far from m as consistency
// allows, which is what makes |y_hat - y_hat'| a deviation probe at test
// time.  no_max drops the subtracted term (ablation).
Tensor epis_loss(Tape& tape, const Tensor& y_hat, const Tensor& y_hat_prime,
                 const Tensor& m, const Tensor& m_prime, double lambda1,
                 bool no_max = false);

// total = epis + lambda2 * alea, both already batch-averaged scalars.
Tensor total_loss(Tape& tape, const Tensor& epis, const Tensor& alea,
                  double lambda2);

}  // namespace cupid
