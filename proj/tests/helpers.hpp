#pragma once

// Shared helpers for the test binaries: finite-difference gradient probes and
// small random problem builders.  Everything here is deliberately simple and
// slow; tests compare the real implementation against these.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "cupid/rng.hpp"
#include "cupid/tensor.hpp"

namespace testutil {

// Relative error with a floor, so near-zero gradients compare on an absolute
// scale instead of blowing up 0/0.
inline double rel_err(double a, double b, double floor = 1e-3) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// Central finite difference of f() w.r.t. one entry of *p.  f must read the
// current value of *p on every call (i.e. rebuild its tape from scratch).
template <typename F>
double fd_partial(F&& f, cupid::Tensor* p, std::size_t i, double h = 1e-5) {
    double saved = (*p)[i];
    (*p)[i] = saved + h;
    double up = f();
    (*p)[i] = saved - h;
    double down = f();
    (*p)[i] = saved;
    return (up - down) / (2.0 * h);
}

// Check every entry of every parameter against finite differences.  loss()
// evaluates the objective off the current parameter values; grad(p, i)
// returns the analytic partial.  Returns the worst relative error seen.
template <typename LossFn, typename GradFn>
double max_grad_rel_err(LossFn&& loss, GradFn&& grad,
                        const std::vector<cupid::Tensor*>& params,
                        double h = 1e-5) {
    double worst = 0.0;
    for (cupid::Tensor* p : params) {
        for (std::size_t i = 0; i < p->size(); ++i) {
            double fd = fd_partial(loss, p, i, h);
            worst = std::max(worst, rel_err(grad(p, i), fd));
        }
    }
    return worst;
}

// Random matrix tensor with entries uniform in [-1, 1].
inline cupid::Tensor rand_tensor(cupid::Rng& rng, std::size_t rows,
                                 std::size_t cols, double scale = 1.0) {
    cupid::Tensor t({rows, cols});
    for (std::size_t i = 0; i < t.size(); ++i) {
        t[i] = rng.uniform(-scale, scale);
    }
    return t;
}

inline std::vector<double> rand_vector(cupid::Rng& rng, std::size_t n,
                                       double lo = 0.0, double hi = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
}

}  // namespace testutil
