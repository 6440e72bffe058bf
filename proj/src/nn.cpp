#include "cupid/nn.hpp"

#include <cmath>
#include <cstring>
#include <numeric>
#include <string>

namespace cupid {

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::None: return "none";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Relu: return "relu";
        case Activation::LeakyRelu: return "leaky-relu";
    }
    return "?";
}

Activation activation_from_name(const std::string& name) {
    if (name == "none") return Activation::None;
    if (name == "sigmoid") return Activation::Sigmoid;
    if (name == "relu") return Activation::Relu;
    if (name == "leaky-relu") return Activation::LeakyRelu;
    throw ShapeError("unknown activation '" + name + "'");
}

Tensor apply_activation(Tape& tape, Activation act, const Tensor& x) {
    switch (act) {
        case Activation::None: return x;
        case Activation::Sigmoid: return tape.sigmoid(x);
        case Activation::Relu: return tape.relu(x);
        case Activation::LeakyRelu: return tape.leaky_relu(x);
    }
    throw ShapeError("unknown activation");
}

void MlpSpec::validate() const {
    if (widths.size() < 3) {
        throw ShapeError("MlpSpec: need at least 2 weight layers, got " +
                         std::to_string(layers()));
    }
    for (std::size_t w : widths) {
        if (w == 0) throw ShapeError("MlpSpec: zero layer width");
    }
    if (activations.size() != layers()) {
        throw ShapeError("MlpSpec: " + std::to_string(activations.size()) +
                         " activations for " + std::to_string(layers()) +
                         " layers");
    }
    if (activations.back() != Activation::None) {
        throw ShapeError("MlpSpec: final layer must be linear; the head "
                         "applies softmax for classification");
    }
    if (!dropouts.empty()) {
        if (dropouts.size() != layers()) {
            throw ShapeError("MlpSpec: " + std::to_string(dropouts.size()) +
                             " dropout rates for " + std::to_string(layers()) +
                             " layers");
        }
        for (double r : dropouts) {
            if (!(r >= 0.0 && r < 1.0)) {
                throw ShapeError("MlpSpec: dropout rate must be in [0,1), got " +
                                 std::to_string(r));
            }
        }
        if (dropouts.back() != 0.0) {
            throw ShapeError("MlpSpec: output layer cannot be dropped");
        }
    }
}

MlpSpec MlpSpec::dense(std::vector<std::size_t> widths, Activation hidden,
                       Head head, double dropout_rate) {
    MlpSpec s;
    s.widths = std::move(widths);
    std::size_t L = s.layers();
    s.activations.assign(L, hidden);
    if (L > 0) s.activations.back() = Activation::None;
    if (dropout_rate > 0.0) {
        // Between hidden layers only: never on the input, never on the output.
        s.dropouts.assign(L, 0.0);
        for (std::size_t i = 0; i + 2 < L; ++i) s.dropouts[i] = dropout_rate;
        if (L >= 2) s.dropouts[L - 2] = dropout_rate;
    }
    s.head = head;
    return s;
}

Mlp Mlp::build(const MlpSpec& spec, std::uint64_t seed) {
    spec.validate();
    Mlp net;
    net.spec_ = spec;
    Rng rng = Rng(seed).derive(0x11D);
    for (std::size_t i = 0; i < spec.layers(); ++i) {
        std::size_t fan_in = spec.widths[i], fan_out = spec.widths[i + 1];
        double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        DenseLayer layer{Tensor(Shape{fan_in, fan_out}), Tensor(Shape{fan_out})};
        for (std::size_t k = 0; k < layer.weight.size(); ++k) {
            layer.weight[k] = rng.uniform(-limit, limit);
        }
        net.layers_.push_back(std::move(layer));
    }
    return net;
}

Tensor Mlp::forward_range(Tape& tape, Tensor x, std::size_t first,
                          std::size_t last, const DropoutCtx& ctx,
                          Tensor* z_out) const {
    if (first >= last || last > layers_.size()) {
        throw ShapeError("forward_range: bad layer range [" +
                         std::to_string(first) + "," + std::to_string(last) + ")");
    }
    if (!x.is_matrix() || x.cols() != spec_.widths[first]) {
        throw ShapeError("forward_range: input " + shape_str(x.shape()) +
                         " does not match layer width " +
                         std::to_string(spec_.widths[first]));
    }
    Tensor h = std::move(x);
    for (std::size_t i = first; i < last; ++i) {
        Tensor z = tape.bias_add(tape.matmul(h, layers_[i].weight), layers_[i].bias);
        if (z_out != nullptr && i + 1 == last) *z_out = z;
        h = apply_activation(tape, spec_.activations[i], z);
        double rate = spec_.has_dropout() ? spec_.dropouts[i] : 0.0;
        if (ctx.rng != nullptr && rate > 0.0) {
            // Inverted dropout: fresh Bernoulli mask per unit and per row.
            Tensor mask(h.shape());
            double keep = 1.0 - rate;
            for (std::size_t k = 0; k < mask.size(); ++k) {
                mask[k] = ctx.rng->uniform() < rate ? 0.0 : 1.0 / keep;
            }
            h = tape.mul(h, mask);
        }
    }
    return h;
}

Tensor Mlp::apply_head(Tape& tape, const Tensor& logits) const {
    if (spec_.head == Head::Classification) return tape.softmax(logits);
    return logits;
}

Tensor Mlp::forward(const Tensor& x) const {
    Tape tape;
    return apply_head(tape, forward_range(tape, x, 0, layers_.size()));
}

Tensor Mlp::forward_logits(const Tensor& x) const {
    Tape tape;
    return forward_range(tape, x, 0, layers_.size());
}

std::size_t Mlp::param_count() const {
    std::size_t n = 0;
    for (const DenseLayer& l : layers_) n += l.weight.size() + l.bias.size();
    return n;
}

std::vector<Tensor*> Mlp::params() {
    std::vector<Tensor*> out;
    for (DenseLayer& l : layers_) {
        out.push_back(&l.weight);
        out.push_back(&l.bias);
    }
    return out;
}

std::uint64_t Mlp::param_hash() const {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    auto eat = [&h](const Tensor& t) {
        for (double v : t.data()) {
            std::uint64_t bits;
            static_assert(sizeof(bits) == sizeof(v));
            std::memcpy(&bits, &v, sizeof(bits));
            for (int b = 0; b < 8; ++b) {
                h ^= (bits >> (8 * b)) & 0xFF;
                h *= 0x100000001B3ULL;
            }
        }
    };
    for (const DenseLayer& l : layers_) {
        eat(l.weight);
        eat(l.bias);
    }
    return h;
}

SplitNetwork::SplitNetwork(Mlp net, std::size_t l) : net_(std::move(net)), l_(l) {
    std::size_t L = net_.spec().layers();
    if (l_ < 1 || l_ >= L) {
        throw ShapeError("split: insertion layer " + std::to_string(l_) +
                         " outside [1," + std::to_string(L) + ")");
    }
}

SplitNetwork::PrefixOut SplitNetwork::prefix(Tape& tape, const Tensor& x) const {
    PrefixOut out;
    out.m = net_.forward_range(tape, x, 0, l_, {}, &out.z);
    return out;
}

Tensor SplitNetwork::suffix(Tape& tape, const Tensor& m) const {
    return net_.apply_head(tape, suffix_logits(tape, m));
}

Tensor SplitNetwork::suffix_logits(Tape& tape, const Tensor& m) const {
    return net_.forward_range(tape, m, l_, net_.spec().layers());
}

std::vector<double> one_hot(int label, std::size_t k) {
    std::vector<double> v(k, 0.0);
    v[static_cast<std::size_t>(label)] = 1.0;
    return v;
}

std::vector<double> train_base(Mlp& net, const TensorDataset& data,
                               const TrainHyper& hyper) {
    std::size_t n = data.size();
    if (n == 0) throw ShapeError("train_base: empty dataset");
    if (hyper.batch_size == 0) throw ShapeError("train_base: zero batch size");
    if (data.y.rows() != n) {
        throw ShapeError("train_base: x/y row mismatch " +
                         shape_str(data.x.shape()) + " vs " +
                         shape_str(data.y.shape()));
    }

    Rng shuffle_rng = Rng(hyper.seed).derive(0x5F);
    Rng dropout_rng = Rng(hyper.seed).derive(0xD0);
    Adam opt(hyper.lr);
    std::vector<Tensor*> params = net.params();

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> curve;

    bool classify = net.spec().head == Head::Classification;
    for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < n; start += hyper.batch_size) {
            std::size_t end = std::min(n, start + hyper.batch_size);
            Tensor xb = slice_rows(data.x, order, start, end);
            Tensor yb = slice_rows(data.y, order, start, end);
            std::size_t bs = end - start;

            Tape tape;
            std::vector<Tensor> glist;
            double batch_loss;
            {
                ParamBinding binding(tape, params);
                DropoutCtx ctx{&dropout_rng};
                Tensor logits = net.forward_range(tape, tape.constant(xb), 0,
                                                  net.layers().size(), ctx);
                Tensor yc = tape.constant(yb);
                Tensor loss;
                if (classify) {
                    // Cross-entropy: -(1/n) sum of log prob at the true class.
                    Tensor probs = tape.softmax(logits);
                    loss = tape.scale(tape.sum(tape.mul(yc, tape.log(probs))),
                                      -1.0 / static_cast<double>(bs));
                } else {
                    // MSE over all output entries.
                    Tensor diff = tape.sub(logits, yc);
                    loss = tape.scale(tape.sum_squares(diff),
                                      1.0 / static_cast<double>(diff.size()));
                }
                glist = binding.grads(tape.backward(loss));
                batch_loss = loss.value();
            }
            opt.step(params, glist);
            loss_sum += batch_loss * static_cast<double>(bs);
        }
        curve.push_back(loss_sum / static_cast<double>(n));
    }
    return curve;
}

double accuracy(const Mlp& net, const TensorDataset& data) {
    if (data.labels.size() != data.size()) {
        throw ShapeError("accuracy: labels missing");
    }
    Tensor probs = net.forward(data.x);
    std::size_t k = probs.cols();
    std::size_t hits = 0;
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < k; ++j) {
            if (probs[i * k + j] > probs[i * k + best]) best = j;
        }
        if (static_cast<int>(best) == data.labels[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(data.size());
}

}  // namespace cupid
