#include "cupid/uncertainty.hpp"

#include <cmath>

namespace cupid {

namespace {

std::vector<UncertaintyRecord> records_from(const Prediction& pred) {
    std::size_t n = pred.y_hat.rows(), k = pred.y_hat.cols();
    std::vector<UncertaintyRecord> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        UncertaintyRecord& r = out[i];
        r.input_id = i;
        r.y_hat.resize(k);
        r.y_hat_prime.resize(k);
        for (std::size_t j = 0; j < k; ++j) {
            double a = pred.y_hat[i * k + j];
            double b = pred.y_hat_prime[i * k + j];
            r.y_hat[j] = a;
            r.y_hat_prime[j] = b;
            r.u_epis += std::abs(a - b);
            r.u_alea += std::exp(pred.s[i * k + j]);
        }
    }
    return out;
}

std::size_t argmax(const std::vector<double>& v) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < v.size(); ++j) {
        if (v[j] > v[best]) best = j;
    }
    return best;
}

}  // namespace

std::vector<UncertaintyRecord> estimate(const SplitNetwork& split,
                                        const CupidModule& module,
                                        const Tensor& x) {
    return records_from(perturbed_predict(split, module, x));
}

std::vector<UncertaintyRecord> estimate(const SplitNetwork& split,
                                        const CupidModule& module,
                                        const Tensor& x, const Tensor& y_true) {
    if (split.network().spec().head != Head::Regression) {
        throw ShapeError("estimate: tensor targets are for regression heads");
    }
    auto recs = records_from(perturbed_predict(split, module, x));
    std::size_t k = split.output_dim();
    if (!y_true.is_matrix() || y_true.rows() != recs.size() || y_true.cols() != k) {
        throw ShapeError("estimate: targets " + shape_str(y_true.shape()) +
                         " do not match predictions");
    }
    for (std::size_t i = 0; i < recs.size(); ++i) {
        double err = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            err += std::abs(recs[i].y_hat[j] - y_true[i * k + j]);
        }
        recs[i].error = err;
    }
    return recs;
}

std::vector<UncertaintyRecord> estimate(const SplitNetwork& split,
                                        const CupidModule& module,
                                        const Tensor& x,
                                        const std::vector<int>& labels) {
    if (split.network().spec().head != Head::Classification) {
        throw ShapeError("estimate: class labels are for classification heads");
    }
    auto recs = records_from(perturbed_predict(split, module, x));
    if (labels.size() != recs.size()) {
        throw ShapeError("estimate: " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(recs.size()) +
                         " predictions");
    }
    for (std::size_t i = 0; i < recs.size(); ++i) {
        recs[i].error =
            static_cast<int>(argmax(recs[i].y_hat)) == labels[i] ? 0.0 : 1.0;
    }
    return recs;
}

TaylorCheck taylor_check(const SplitNetwork& split, const CupidModule& module,
                         const Tensor& x, double alpha) {
    if (!x.is_matrix() || x.rows() != 1) {
        throw ShapeError("taylor_check: wants a single input row, got " +
                         shape_str(x.shape()));
    }

    // Feature and reconstruction for this input (values only).
    Tensor m_val, dm;
    {
        Tape tape;
        auto px = split.prefix(tape, x);
        Tensor m_prime = module.forward_recon(tape, px.m, px.z);
        m_val = Tensor(px.m.shape(), px.m.data());
        dm = Tensor(px.m.shape(), px.m.data());
        for (std::size_t i = 0; i < dm.size(); ++i) {
            dm[i] = m_prime[i] - px.m[i];
        }
    }

    std::size_t d = split.feature_width(), k = split.output_dim();

    // Exact displacement of the suffix outputs.
    Tensor moved(m_val.shape(), m_val.data());
    for (std::size_t i = 0; i < d; ++i) moved[i] += alpha * dm[i];
    double exact = 0.0;
    {
        Tape tape;
        Tensor y0 = split.suffix_logits(tape, tape.constant(m_val));
        Tensor y1 = split.suffix_logits(tape, tape.constant(moved));
        for (std::size_t j = 0; j < k; ++j) exact += std::abs(y1[j] - y0[j]);
    }

    // Jacobian of the suffix at m, one reverse pass per output coordinate.
    double linear = 0.0;
    {
        Tape tape;
        Tensor m_leaf = tape.param(m_val);
        Tensor y = split.suffix_logits(tape, m_leaf);
        for (std::size_t j = 0; j < k; ++j) {
            GradMap grads = tape.backward(tape.pick(y, j));
            const Tensor& row = grads.at(m_leaf);
            double dot = 0.0;
            for (std::size_t i = 0; i < d; ++i) dot += row[i] * alpha * dm[i];
            linear += std::abs(dot);
        }
    }

    TaylorCheck out;
    out.exact = exact;
    out.linear = linear;
    out.rel_err = std::abs(exact - linear) / std::max(linear, 1e-12);
    return out;
}

std::vector<double> mc_dropout_estimate(const Mlp& net, const Tensor& x,
                                        std::size_t passes, std::uint64_t seed) {
    if (!net.spec().has_dropout()) {
        throw ShapeError("mc_dropout_estimate: network has no dropout layers");
    }
    if (passes < 2) {
        throw ShapeError("mc_dropout_estimate: need at least 2 passes");
    }
    if (!x.is_matrix()) {
        throw ShapeError("mc_dropout_estimate: input must be [n, in]");
    }

    Rng rng = Rng(seed).derive(0x3C);
    std::size_t n = x.rows();
    std::vector<Tensor> outputs;
    outputs.reserve(passes);
    for (std::size_t p = 0; p < passes; ++p) {
        Tape tape;
        DropoutCtx ctx{&rng};
        Tensor logits = net.forward_range(tape, tape.constant(x), 0,
                                          net.layers().size(), ctx);
        outputs.push_back(net.apply_head(tape, logits));
    }
    std::size_t k = outputs[0].cols();

    std::vector<double> u(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            // With all-zero dropout rates every pass is bit-identical; report
            // an exact zero rather than summation noise.
            bool all_same = true;
            double first = outputs[0][i * k + j];
            double mean = 0.0;
            for (const Tensor& o : outputs) {
                all_same = all_same && o[i * k + j] == first;
                mean += o[i * k + j];
            }
            if (all_same) continue;
            mean /= static_cast<double>(passes);
            double ss = 0.0;
            for (const Tensor& o : outputs) {
                double dv = o[i * k + j] - mean;
                ss += dv * dv;
            }
            u[i] += ss / static_cast<double>(passes - 1);
        }
        u[i] /= static_cast<double>(k);
    }
    return u;
}

}  // namespace cupid
