#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "cupid/nn.hpp"
#include "cupid/rng.hpp"
#include "helpers.hpp"

using namespace cupid;

namespace {

// Small regression problem: y = 2x - 1 with a pinch of noise.
TensorDataset line_data(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    TensorDataset d;
    d.x = Tensor({n, 1});
    d.y = Tensor({n, 1});
    for (std::size_t i = 0; i < n; ++i) {
        double x = rng.uniform(-1.0, 1.0);
        d.x[i] = x;
        d.y[i] = 2.0 * x - 1.0 + 0.01 * rng.gaussian();
    }
    return d;
}

// Two linearly separable classes on the x-axis.
TensorDataset two_class_data(std::size_t n_per_class, std::uint64_t seed) {
    Rng rng(seed);
    TensorDataset d;
    std::size_t n = 2 * n_per_class;
    d.x = Tensor({n, 2});
    d.y = Tensor({n, 2});
    d.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        int cls = i < n_per_class ? 0 : 1;
        double cx = cls == 0 ? -1.0 : 1.0;
        d.x.at(i, 0) = cx + 0.1 * rng.gaussian();
        d.x.at(i, 1) = 0.1 * rng.gaussian();
        d.y.at(i, static_cast<std::size_t>(cls)) = 1.0;
        d.labels[i] = cls;
    }
    return d;
}

}  // namespace

TEST_CASE("dense spec builds the expected architecture") {
    MlpSpec spec = MlpSpec::dense({1, 8, 8, 1}, Activation::Sigmoid,
                                  Head::Regression);
    CHECK(spec.layers() == 3);
    CHECK(spec.activations.size() == 3);
    CHECK(spec.activations[0] == Activation::Sigmoid);
    CHECK(spec.activations[1] == Activation::Sigmoid);
    CHECK(spec.activations[2] == Activation::None);
    CHECK_FALSE(spec.has_dropout());
    spec.validate();

    MlpSpec dropped = MlpSpec::dense({2, 4, 2}, Activation::Relu,
                                     Head::Classification, 0.25);
    CHECK(dropped.has_dropout());
    CHECK(dropped.dropouts == std::vector<double>{0.25, 0.0});
    dropped.validate();
}

TEST_CASE("spec validation rejects inconsistent architectures") {
    MlpSpec s = MlpSpec::dense({1, 4, 1}, Activation::Sigmoid, Head::Regression);
    s.widths = {1, 4};
    CHECK_THROWS_AS(s.validate(), ShapeError);

    s = MlpSpec::dense({1, 4, 1}, Activation::Sigmoid, Head::Regression);
    s.widths[1] = 0;
    CHECK_THROWS_AS(s.validate(), ShapeError);

    s = MlpSpec::dense({1, 4, 1}, Activation::Sigmoid, Head::Regression);
    s.activations.pop_back();
    CHECK_THROWS_AS(s.validate(), ShapeError);

    s = MlpSpec::dense({1, 4, 1}, Activation::Sigmoid, Head::Regression);
    s.activations.back() = Activation::Sigmoid;
    CHECK_THROWS_AS(s.validate(), ShapeError);

    s = MlpSpec::dense({1, 4, 1}, Activation::Sigmoid, Head::Regression, 0.5);
    s.dropouts.back() = 0.5;  // output layer must not drop
    CHECK_THROWS_AS(s.validate(), ShapeError);

    s = MlpSpec::dense({1, 4, 1}, Activation::Sigmoid, Head::Regression);
    s.dropouts = {1.5, 0.0};
    CHECK_THROWS_AS(s.validate(), ShapeError);
}

TEST_CASE("activation names round-trip") {
    for (Activation a : {Activation::None, Activation::Sigmoid,
                         Activation::Relu, Activation::LeakyRelu}) {
        CHECK(activation_from_name(activation_name(a)) == a);
    }
    CHECK_THROWS_AS(activation_from_name("swish"), ShapeError);
}

TEST_CASE("xavier init stays in bounds, biases start at zero") {
    MlpSpec spec = MlpSpec::dense({3, 16, 2}, Activation::Sigmoid,
                                  Head::Regression);
    Mlp net = Mlp::build(spec, 7);
    for (const DenseLayer& layer : net.layers()) {
        std::size_t fan_in = layer.weight.rows(), fan_out = layer.weight.cols();
        double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (std::size_t i = 0; i < layer.weight.size(); ++i) {
            CHECK(std::abs(layer.weight[i]) <= limit);
        }
        for (std::size_t i = 0; i < layer.bias.size(); ++i) {
            CHECK(layer.bias[i] == 0.0);
        }
    }
    // Same seed, same parameters; different seed, different parameters.
    CHECK(Mlp::build(spec, 7).param_hash() == net.param_hash());
    CHECK(Mlp::build(spec, 8).param_hash() != net.param_hash());
    CHECK(net.param_count() == 3 * 16 + 16 + 16 * 2 + 2);
}

TEST_CASE("forward matches a hand computation on fixed weights") {
    MlpSpec spec = MlpSpec::dense({1, 2, 1}, Activation::Sigmoid,
                                  Head::Regression);
    Mlp net = Mlp::build(spec, 0);
    net.layers()[0].weight = Tensor({1, 2}, {1.0, -2.0});
    net.layers()[0].bias = Tensor({2}, {0.5, 0.0});
    net.layers()[1].weight = Tensor({2, 1}, {3.0, 1.0});
    net.layers()[1].bias = Tensor({1}, {-0.25});

    Tensor x({1, 1}, {2.0});
    double h0 = 1.0 / (1.0 + std::exp(-(2.0 * 1.0 + 0.5)));
    double h1 = 1.0 / (1.0 + std::exp(-(2.0 * -2.0 + 0.0)));
    double expect = 3.0 * h0 + 1.0 * h1 - 0.25;
    CHECK(net.forward(x).at(0, 0) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("forward_range exposes matching pre-activation values") {
    MlpSpec spec = MlpSpec::dense({2, 4, 3, 1}, Activation::Sigmoid,
                                  Head::Regression);
    Mlp net = Mlp::build(spec, 3);
    Tensor x({2, 2}, {0.3, -0.7, 1.1, 0.4});

    Tape tape;
    Tensor z;
    Tensor m = net.forward_range(tape, tape.constant(x), 0, 2, {}, &z);
    CHECK(m.rows() == 2);
    CHECK(m.cols() == 3);
    CHECK(z.rows() == 2);
    CHECK(z.cols() == 3);
    // m is exactly sigmoid(z), elementwise.
    for (std::size_t i = 0; i < m.size(); ++i) {
        CHECK(m[i] == doctest::Approx(1.0 / (1.0 + std::exp(-z[i]))).epsilon(1e-15));
    }

    Tape t2;
    CHECK_THROWS_AS(net.forward_range(t2, t2.constant(x), 2, 1), ShapeError);
    Tensor bad({1, 3}, {1, 2, 3});
    CHECK_THROWS_AS(net.forward_range(t2, t2.constant(bad), 0, 1), ShapeError);
}

TEST_CASE("split prefix+suffix reproduces the full forward bitwise") {
    MlpSpec spec = MlpSpec::dense({2, 5, 4, 3}, Activation::Sigmoid,
                                  Head::Classification);
    Mlp net = Mlp::build(spec, 11);
    Tensor x({3, 2}, {0.1, -0.2, 0.8, 0.5, -1.0, 0.3});
    Tensor direct = net.forward(x);

    for (std::size_t l = 1; l < spec.layers(); ++l) {
        SplitNetwork split(net, l);
        CHECK(split.insertion() == l);
        CHECK(split.feature_width() == spec.widths[l]);
        CHECK(split.output_dim() == 3);
        CHECK(split.insertion_activation() == Activation::Sigmoid);
        Tape tape;
        SplitNetwork::PrefixOut pre = split.prefix(tape, x);
        Tensor combined = split.suffix(tape, pre.m);
        REQUIRE(combined.size() == direct.size());
        for (std::size_t i = 0; i < direct.size(); ++i) {
            CHECK(combined[i] == direct[i]);  // identical op sequence, bitwise
        }
    }
    CHECK_THROWS_AS(SplitNetwork(net, 0), ShapeError);
    CHECK_THROWS_AS(SplitNetwork(net, 3), ShapeError);
}

TEST_CASE("classification head is a row-stochastic softmax") {
    MlpSpec spec = MlpSpec::dense({2, 4, 3}, Activation::Relu,
                                  Head::Classification);
    Mlp net = Mlp::build(spec, 5);
    Tensor x({4, 2}, {1, 2, -1, 0.5, 0, 0, 3, -2});
    Tensor probs = net.forward(x);
    for (std::size_t r = 0; r < 4; ++r) {
        double row = 0.0;
        for (std::size_t c = 0; c < 3; ++c) {
            CHECK(probs.at(r, c) > 0.0);
            row += probs.at(r, c);
        }
        CHECK(row == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("dropout zeroes units and rescales survivors") {
    MlpSpec spec = MlpSpec::dense({1, 64, 1}, Activation::Relu,
                                  Head::Regression, 0.5);
    Mlp net = Mlp::build(spec, 21);
    Tensor x({1, 1}, {1.0});

    // Reference hidden output without dropout.
    Tape t0;
    Tensor clean = net.forward_range(t0, t0.constant(x), 0, 1);

    Rng rng(77);
    DropoutCtx ctx{&rng};
    Tape t1;
    Tensor dropped = net.forward_range(t1, t1.constant(x), 0, 1, ctx);

    // Only relu-alive units can show the mask; count drops among those.
    std::size_t alive = 0, zeros = 0;
    for (std::size_t i = 0; i < dropped.size(); ++i) {
        if (clean[i] == 0.0) continue;
        ++alive;
        if (dropped[i] == 0.0) {
            ++zeros;
            continue;
        }
        // Survivors are scaled by exactly 1/(1-rate) = 2.
        CHECK(dropped[i] == doctest::Approx(2.0 * clean[i]).epsilon(1e-12));
    }
    // Binomial(alive, 0.5) within 4 sigma.
    double expect_drop = 0.5 * static_cast<double>(alive);
    double margin = 4.0 * std::sqrt(0.25 * static_cast<double>(alive));
    CHECK(static_cast<double>(zeros) > expect_drop - margin);
    CHECK(static_cast<double>(zeros) < expect_drop + margin);

    // Same rng stream, same masks.
    Rng rng2(77);
    DropoutCtx ctx2{&rng2};
    Tape t2;
    Tensor again = net.forward_range(t2, t2.constant(x), 0, 1, ctx2);
    for (std::size_t i = 0; i < again.size(); ++i) CHECK(again[i] == dropped[i]);
}

TEST_CASE("train_base fits a line and is deterministic") {
    MlpSpec spec = MlpSpec::dense({1, 8, 1}, Activation::Sigmoid,
                                  Head::Regression);
    TensorDataset data = line_data(64, 2);

    Mlp net = Mlp::build(spec, 1);
    TrainHyper hyper{30, 8, 1e-2, 4};
    std::vector<double> curve = train_base(net, data, hyper);
    REQUIRE(curve.size() == 30);
    CHECK(curve.back() < 0.25 * curve.front());

    Mlp net2 = Mlp::build(spec, 1);
    std::vector<double> curve2 = train_base(net2, data, hyper);
    CHECK(net.param_hash() == net2.param_hash());
    CHECK(curve == curve2);

    Mlp net3 = Mlp::build(spec, 1);
    TrainHyper other = hyper;
    other.seed = 5;  // different batch order, different trajectory
    train_base(net3, data, other);
    CHECK(net.param_hash() != net3.param_hash());
}

TEST_CASE("train_base rejects degenerate inputs") {
    MlpSpec spec = MlpSpec::dense({1, 4, 1}, Activation::Sigmoid,
                                  Head::Regression);
    Mlp net = Mlp::build(spec, 1);
    TensorDataset empty;
    CHECK_THROWS_AS(train_base(net, empty, TrainHyper{}), ShapeError);

    TensorDataset data = line_data(8, 3);
    TrainHyper zero_batch{10, 0, 1e-3, 0};
    CHECK_THROWS_AS(train_base(net, data, zero_batch), ShapeError);
}

TEST_CASE("classification training reaches high accuracy") {
    MlpSpec spec = MlpSpec::dense({2, 8, 2}, Activation::Sigmoid,
                                  Head::Classification);
    Mlp net = Mlp::build(spec, 9);
    TensorDataset data = two_class_data(40, 6);
    train_base(net, data, TrainHyper{40, 8, 1e-2, 2});
    CHECK(accuracy(net, data) > 0.95);

    TensorDataset unlabeled = data;
    unlabeled.labels.clear();
    CHECK_THROWS_AS(accuracy(net, unlabeled), ShapeError);
}

TEST_CASE("param binding restores stored tensors even when a pass throws") {
    MlpSpec spec = MlpSpec::dense({1, 4, 1}, Activation::Sigmoid,
                                  Head::Regression);
    Mlp net = Mlp::build(spec, 13);
    std::vector<double> before = net.layers()[0].weight.data();

    {
        Tape tape;
        ParamBinding binding(tape, net.params());
        CHECK(net.layers()[0].weight.on_tape());
        Tensor x({1, 1}, {0.5});
        Tensor out = net.forward_range(tape, tape.constant(x), 0, 2);
        GradMap g = tape.backward(tape.sum(out));
        std::vector<Tensor> grads = binding.grads(g);
        CHECK(grads.size() == net.params().size());
    }
    CHECK_FALSE(net.layers()[0].weight.on_tape());
    CHECK(net.layers()[0].weight.data() == before);

    // The destructor must also run on the exception path.
    try {
        Tape tape;
        ParamBinding binding(tape, net.params());
        throw std::runtime_error("boom");
    } catch (const std::runtime_error&) {
    }
    CHECK_FALSE(net.layers()[0].weight.on_tape());
    CHECK(net.layers()[0].weight.data() == before);
}

TEST_CASE("one_hot places a single one") {
    std::vector<double> v = one_hot(2, 4);
    CHECK(v == std::vector<double>{0.0, 0.0, 1.0, 0.0});
}
