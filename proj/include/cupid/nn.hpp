#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cupid/rng.hpp"
#include "cupid/tensor.hpp"

namespace cupid {

enum class Activation { None, Sigmoid, Relu, LeakyRelu };
enum class Head { Regression, Classification };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

// Apply an activation as a tape op (None is a pass-through).
Tensor apply_activation(Tape& tape, Activation act, const Tensor& x);

// Architecture of a fully connected network.  widths has L+1 entries for L
// weight layers; activations and dropouts have one entry per weight layer,
// where dropouts[i] is the rate applied to layer i's post-activation output
// (an empty dropouts vector means the network has no dropout layers at all,
// which matters to the MC-dropout estimator).
struct MlpSpec {
    std::vector<std::size_t> widths;
    std::vector<Activation> activations;
    std::vector<double> dropouts;
    Head head = Head::Regression;

    std::size_t layers() const { return widths.empty() ? 0 : widths.size() - 1; }
    bool has_dropout() const { return !dropouts.empty(); }
    void validate() const;  // throws ShapeError on an inconsistent spec

    // Common case: one hidden activation everywhere, linear final layer.
    static MlpSpec dense(std::vector<std::size_t> widths, Activation hidden,
                         Head head, double dropout_rate = 0.0);
};

struct DenseLayer {
    Tensor weight;  // [in, out]
    Tensor bias;    // [out]
};

// Dropout behaviour for one forward pass.  When enabled, each dropped unit is
// zeroed and survivors are scaled by 1/(1-rate) so expectations match the
// dropout-free network.
struct DropoutCtx {
    Rng* rng = nullptr;
};

class Mlp {
public:
    Mlp() = default;

    // Xavier-uniform weights (limit sqrt(6/(fan_in+fan_out))), zero biases.
    static Mlp build(const MlpSpec& spec, std::uint64_t seed);

    const MlpSpec& spec() const { return spec_; }
    std::vector<DenseLayer>& layers() { return layers_; }
    const std::vector<DenseLayer>& layers() const { return layers_; }

    // Forward through weight layers [first, last) on a tape.  x is [n, w_first].
    // Returns the post-activation output of layer last-1; if z_out is given it
    // receives that layer's pre-activation values (needed by the plug-in
    // module, which perturbs features before the activation is applied).
    // Dropout masks are drawn from ctx.rng when provided; inference passes
    // leave ctx empty and are deterministic.
    Tensor forward_range(Tape& tape, Tensor x, std::size_t first,
                         std::size_t last, const DropoutCtx& ctx = {},
                         Tensor* z_out = nullptr) const;

    // Head output: identity for regression, row softmax for classification.
    Tensor apply_head(Tape& tape, const Tensor& logits) const;

    // Full-network conveniences (no dropout).  x is [n, in].
    Tensor forward(const Tensor& x) const;         // post-head
    Tensor forward_logits(const Tensor& x) const;  // pre-head

    std::size_t param_count() const;
    std::vector<Tensor*> params();
    // FNV-1a over the raw parameter bytes; used to assert the base network
    // stays frozen through downstream training.
    std::uint64_t param_hash() const;

private:
    MlpSpec spec_;
    std::vector<DenseLayer> layers_;
};

// A trained network cut at weight layer l (1 <= l < layers): the prefix runs
// layers [0, l) and exposes the layer-(l-1) feature, the suffix runs [l, L).
// Holds its own frozen copy of the network.
class SplitNetwork {
public:
    SplitNetwork(Mlp net, std::size_t l);

    std::size_t insertion() const { return l_; }
    std::size_t feature_width() const { return net_.spec().widths[l_]; }
    std::size_t output_dim() const { return net_.spec().widths.back(); }
    Activation insertion_activation() const {
        return net_.spec().activations[l_ - 1];
    }
    const Mlp& network() const { return net_; }
    std::uint64_t theta_hash() const { return net_.param_hash(); }

    struct PrefixOut {
        Tensor m;  // post-activation feature, width d
        Tensor z;  // matching pre-activation values
    };
    PrefixOut prefix(Tape& tape, const Tensor& x) const;
    Tensor suffix(Tape& tape, const Tensor& m) const;         // post-head
    Tensor suffix_logits(Tape& tape, const Tensor& m) const;  // pre-head

private:
    Mlp net_;
    std::size_t l_;
};

// Supervised dataset in tensor form.  y is [n, k]: regression targets or
// one-hot class rows.  labels carries the integer classes for classification.
struct TensorDataset {
    Tensor x;
    Tensor y;
    std::vector<int> labels;
    std::size_t size() const { return x.is_matrix() ? x.rows() : 0; }
};

struct TrainHyper {
    std::size_t epochs = 50;
    std::size_t batch_size = 16;
    double lr = 1e-3;
    std::uint64_t seed = 0;
};

// Train in place with Adam: MSE over all output entries for regression,
// cross-entropy on softmax probabilities for classification.  Returns the
// mean training loss per epoch.  A non-finite loss aborts with NumericError.
std::vector<double> train_base(Mlp& net, const TensorDataset& data,
                               const TrainHyper& hyper);

// Scoped swap of stored parameters for their tape-bound copies.  While alive,
// forward passes through the owning model record against trainable leaves;
// the destructor restores the plain tensors even if the pass throws.
class ParamBinding {
public:
    ParamBinding(Tape& tape, const std::vector<Tensor*>& params)
        : params_(params) {
        saved_.reserve(params.size());
        bound_.reserve(params.size());
        for (Tensor* p : params) {
            saved_.push_back(*p);
            bound_.push_back(tape.param(*p));
            *p = bound_.back();
        }
    }
    ~ParamBinding() {
        for (std::size_t i = 0; i < params_.size(); ++i) *params_[i] = saved_[i];
    }
    ParamBinding(const ParamBinding&) = delete;
    ParamBinding& operator=(const ParamBinding&) = delete;

    // Gradients in parameter order, for feeding straight into Adam::step.
    std::vector<Tensor> grads(const GradMap& map) const {
        std::vector<Tensor> out;
        out.reserve(bound_.size());
        for (const Tensor& b : bound_) out.push_back(map.at(b));
        return out;
    }

private:
    std::vector<Tensor*> params_;
    std::vector<Tensor> saved_;
    std::vector<Tensor> bound_;
};

// Classification accuracy against integer labels (argmax of the head output).
double accuracy(const Mlp& net, const TensorDataset& data);

std::vector<double> one_hot(int label, std::size_t k);

}  // namespace cupid
