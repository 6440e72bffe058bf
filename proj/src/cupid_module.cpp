#include "cupid/cupid_module.hpp"

#include <cmath>
#include <cstring>
#include <numeric>

#include "cupid/losses.hpp"

namespace cupid {

namespace {

DenseLayer xavier_layer(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    DenseLayer layer{Tensor(Shape{fan_in, fan_out}), Tensor(Shape{fan_out})};
    for (std::size_t k = 0; k < layer.weight.size(); ++k) {
        layer.weight[k] = rng.uniform(-limit, limit);
    }
    return layer;
}

Tensor dense(Tape& tape, const DenseLayer& layer, const Tensor& x) {
    return tape.bias_add(tape.matmul(x, layer.weight), layer.bias);
}

}  // namespace

CupidModule CupidModule::build(std::size_t d, std::size_t k,
                               std::size_t trunk_depth, Activation host_act,
                               std::size_t insertion, std::uint64_t seed) {
    if (d == 0 || k == 0) throw ShapeError("cupid: zero feature/output width");
    if (trunk_depth == 0) throw ShapeError("cupid: zero trunk depth");
    CupidModule mod;
    mod.d_ = d;
    mod.k_ = k;
    mod.insertion_ = insertion;
    mod.host_act_ = host_act;
    Rng rng = Rng(seed).derive(0xC0D);
    for (std::size_t i = 0; i < trunk_depth; ++i) {
        mod.trunk_.push_back(xavier_layer(d, d, rng));
    }
    mod.recon_.push_back(xavier_layer(d, d, rng));
    mod.recon_.push_back(DenseLayer{Tensor(Shape{d, d}), Tensor(Shape{d})});
    mod.unc_.push_back(xavier_layer(d, d, rng));
    mod.unc_.push_back(DenseLayer{Tensor(Shape{d, k}), Tensor(Shape{k})});
    return mod;
}

Tensor CupidModule::trunk_forward(Tape& tape, const Tensor& m) const {
    if (!m.is_matrix() || m.cols() != d_) {
        throw ShapeError("cupid: feature " + shape_str(m.shape()) +
                         " does not match module width " + std::to_string(d_));
    }
    Tensor h = m;
    for (const DenseLayer& block : trunk_) {
        h = tape.leaky_relu(dense(tape, block, h));
    }
    return h;
}

Tensor CupidModule::recon_head(Tape& tape, const Tensor& h, const Tensor& z) const {
    Tensor r = tape.leaky_relu(dense(tape, recon_[0], h));
    r = dense(tape, recon_[1], r);
    return apply_activation(tape, host_act_, tape.add(z, r));
}

Tensor CupidModule::unc_head(Tape& tape, const Tensor& h) const {
    return dense(tape, unc_[1], tape.relu(dense(tape, unc_[0], h)));
}

CupidModule::Output CupidModule::forward(Tape& tape, const Tensor& m,
                                         const Tensor& z) const {
    if (z.shape() != m.shape()) {
        throw ShapeError("cupid: pre-activation shape " + shape_str(z.shape()) +
                         " does not match feature " + shape_str(m.shape()));
    }
    Tensor h = trunk_forward(tape, m);
    return Output{recon_head(tape, h, z), unc_head(tape, h)};
}

CupidModule::Output CupidModule::forward(Tape& tape, const Tensor& m) const {
    if (host_act_ != Activation::None) {
        throw ShapeError("cupid: pre-activation values required when the host "
                         "activation is not linear");
    }
    return forward(tape, m, m);
}

Tensor CupidModule::forward_recon(Tape& tape, const Tensor& m, const Tensor& z) const {
    if (z.shape() != m.shape()) {
        throw ShapeError("cupid: pre-activation shape " + shape_str(z.shape()) +
                         " does not match feature " + shape_str(m.shape()));
    }
    return recon_head(tape, trunk_forward(tape, m), z);
}

Tensor CupidModule::forward_s(Tape& tape, const Tensor& m) const {
    return unc_head(tape, trunk_forward(tape, m));
}

std::vector<Tensor*> CupidModule::params() {
    std::vector<Tensor*> out = trunk_params();
    for (Tensor* p : recon_params()) out.push_back(p);
    for (Tensor* p : unc_params()) out.push_back(p);
    return out;
}

namespace {
std::vector<Tensor*> collect(std::vector<DenseLayer>& layers) {
    std::vector<Tensor*> out;
    for (DenseLayer& l : layers) {
        out.push_back(&l.weight);
        out.push_back(&l.bias);
    }
    return out;
}
}  // namespace

std::vector<Tensor*> CupidModule::trunk_params() { return collect(trunk_); }
std::vector<Tensor*> CupidModule::recon_params() { return collect(recon_); }
std::vector<Tensor*> CupidModule::unc_params() { return collect(unc_); }

std::size_t CupidModule::param_count() const {
    std::size_t n = 0;
    for (const auto* group : {&trunk_, &recon_, &unc_}) {
        for (const DenseLayer& l : *group) n += l.weight.size() + l.bias.size();
    }
    return n;
}

std::uint64_t CupidModule::omega_hash() const {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (const auto* group : {&trunk_, &recon_, &unc_}) {
        for (const DenseLayer& l : *group) {
            for (const Tensor* t : {&l.weight, &l.bias}) {
                for (double v : t->data()) {
                    std::uint64_t bits;
                    std::memcpy(&bits, &v, sizeof(bits));
                    for (int b = 0; b < 8; ++b) {
                        h ^= (bits >> (8 * b)) & 0xFF;
                        h *= 0x100000001B3ULL;
                    }
                }
            }
        }
    }
    return h;
}

Prediction perturbed_predict(const SplitNetwork& split, const CupidModule& module,
                             const Tensor& x) {
    if (module.feature_width() != split.feature_width() ||
        module.insertion() != split.insertion()) {
        throw ShapeError("perturbed_predict: module built for layer " +
                         std::to_string(module.insertion()) + " width " +
                         std::to_string(module.feature_width()) +
                         ", split is layer " + std::to_string(split.insertion()) +
                         " width " + std::to_string(split.feature_width()));
    }
    if (module.output_dim() != split.output_dim()) {
        throw ShapeError("perturbed_predict: module outputs " +
                         std::to_string(module.output_dim()) +
                         " log variances, host has " +
                         std::to_string(split.output_dim()) + " outputs");
    }

    Tape tape;
    auto px = split.prefix(tape, x);
    CupidModule::Output c = module.forward(tape, px.m, px.z);
    Prediction pred;
    pred.y_hat = split.suffix(tape, px.m);
    pred.y_hat_prime = split.suffix(tape, c.m_prime);
    pred.s = c.s;
    pred.m = px.m;
    pred.m_prime = c.m_prime;
    return pred;
}

std::vector<double> train_cupid(const SplitNetwork& split, CupidModule& module,
                                const TensorDataset& data,
                                const CupidTrainHyper& hyper,
                                BranchMode mode) {
    std::size_t n = data.size();
    if (n == 0) throw ShapeError("train_cupid: empty dataset");
    if (hyper.batch_size == 0) throw ShapeError("train_cupid: zero batch size");
    if (module.feature_width() != split.feature_width() ||
        module.insertion() != split.insertion()) {
        throw ShapeError("train_cupid: module/split insertion mismatch");
    }

    std::vector<Tensor*> params;
    switch (mode) {
        case BranchMode::Joint:
            params = module.params();
            break;
        case BranchMode::AleaOnly:
            params = module.trunk_params();
            for (Tensor* p : module.unc_params()) params.push_back(p);
            break;
        case BranchMode::EpisOnly:
            params = module.trunk_params();
            for (Tensor* p : module.recon_params()) params.push_back(p);
            break;
    }

    Rng shuffle_rng = Rng(hyper.seed).derive(0xCF);
    Adam opt(hyper.lr);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> curve;

    for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < n; start += hyper.batch_size) {
            std::size_t end = std::min(n, start + hyper.batch_size);
            Tensor xb = slice_rows(data.x, order, start, end);
            Tensor yb = slice_rows(data.y, order, start, end);

            Tape tape;
            std::vector<Tensor> glist;
            double batch_loss;
            {
                ParamBinding binding(tape, params);
                auto px = split.prefix(tape, tape.constant(xb));
                Tensor y_hat = split.suffix(tape, px.m);
                Tensor yc = tape.constant(yb);
                Tensor loss;
                switch (mode) {
                    case BranchMode::Joint: {
                        CupidModule::Output c = module.forward(tape, px.m, px.z);
                        Tensor y_hat_prime = split.suffix(tape, c.m_prime);
                        Tensor epis = epis_loss(tape, y_hat, y_hat_prime, px.m,
                                                c.m_prime, hyper.lambda1,
                                                hyper.no_max);
                        Tensor alea = alea_loss(tape, yc, y_hat_prime, c.s);
                        loss = total_loss(tape, epis, alea, hyper.lambda2);
                        break;
                    }
                    case BranchMode::AleaOnly: {
                        // Reconstruction branch removed: the perturbed
                        // prediction collapses to the host prediction.
                        Tensor s = module.forward_s(tape, px.m);
                        loss = alea_loss(tape, yc, y_hat, s);
                        break;
                    }
                    case BranchMode::EpisOnly: {
                        Tensor m_prime = module.forward_recon(tape, px.m, px.z);
                        Tensor y_hat_prime = split.suffix(tape, m_prime);
                        loss = epis_loss(tape, y_hat, y_hat_prime, px.m, m_prime,
                                         hyper.lambda1, hyper.no_max);
                        break;
                    }
                }
                glist = binding.grads(tape.backward(loss));
                batch_loss = loss.value();
            }
            opt.step(params, glist);
            loss_sum += batch_loss * static_cast<double>(end - start);
        }
        curve.push_back(loss_sum / static_cast<double>(n));
    }
    return curve;
}

}  // namespace cupid
