#pragma once

#include <cstdint>
#include <vector>

#include "cupid/nn.hpp"
#include "cupid/tensor.hpp"

namespace cupid {

// Plug-in uncertainty module.  Sits at a host network's insertion layer and
// maps the layer-l feature m (width d) to a reconstructed feature m' plus a
// log-variance vector s (width k, the host's output dimension).
//
//   trunk:  trunk_depth dense d->d blocks with leaky-relu
//   recon:  dense d->d + leaky-relu, then a zero-initialized dense d->d whose
//           output is added to the host's pre-activation values and passed
//           through the host's own activation.  Working on pre-activation
//           values gives an exact identity at initialization without ever
//           inverting a sigmoid.
//   unc:    dense d->d + relu, then a zero-initialized linear d->k, so s = 0
//           (unit variance) at the start of training.
class CupidModule {
public:
    CupidModule() = default;

    static CupidModule build(std::size_t d, std::size_t k,
                             std::size_t trunk_depth, Activation host_act,
                             std::size_t insertion, std::uint64_t seed);

    std::size_t feature_width() const { return d_; }
    std::size_t output_dim() const { return k_; }
    std::size_t trunk_depth() const { return trunk_.size(); }
    std::size_t insertion() const { return insertion_; }
    Activation host_activation() const { return host_act_; }

    struct Output {
        Tensor m_prime;  // reconstructed feature, same shape as m
        Tensor s;        // log variance, [n, k]
    };

    // m and z are the host's post- and pre-activation features at layer l
    // ([n, d] each, with host_act(z) == m).  Differentiable w.r.t. this
    // module's parameters on the given tape.
    Output forward(Tape& tape, const Tensor& m, const Tensor& z) const;

    // Convenience for hosts whose insertion activation is None (z == m).
    Output forward(Tape& tape, const Tensor& m) const;

    // Single-branch passes, used when one branch is ablated away.
    Tensor forward_recon(Tape& tape, const Tensor& m, const Tensor& z) const;
    Tensor forward_s(Tape& tape, const Tensor& m) const;

    std::vector<Tensor*> params();       // trunk + recon + unc
    std::vector<Tensor*> trunk_params();
    std::vector<Tensor*> recon_params();
    std::vector<Tensor*> unc_params();
    std::size_t param_count() const;
    std::uint64_t omega_hash() const;

    std::vector<DenseLayer>& trunk() { return trunk_; }
    std::vector<DenseLayer>& recon() { return recon_; }
    std::vector<DenseLayer>& unc() { return unc_; }
    const std::vector<DenseLayer>& trunk() const { return trunk_; }
    const std::vector<DenseLayer>& recon() const { return recon_; }
    const std::vector<DenseLayer>& unc() const { return unc_; }

private:
    Tensor trunk_forward(Tape& tape, const Tensor& m) const;
    Tensor recon_head(Tape& tape, const Tensor& h, const Tensor& z) const;
    Tensor unc_head(Tape& tape, const Tensor& h) const;

    std::size_t d_ = 0, k_ = 0, insertion_ = 0;
    Activation host_act_ = Activation::None;
    std::vector<DenseLayer> trunk_;
    std::vector<DenseLayer> recon_;  // [hidden, zero-init residual head]
    std::vector<DenseLayer> unc_;    // [hidden, zero-init linear head]
};

// Everything the estimators need from one pass: the host's own prediction,
// the prediction off the reconstructed feature, and the log variances.
// Predictions are post-head (softmax space for classification).
struct Prediction {
    Tensor y_hat;
    Tensor y_hat_prime;
    Tensor s;
    Tensor m;
    Tensor m_prime;
};

// Run x through prefix, module and suffix.  The module must sit at the same
// insertion layer as the split.  x is [n, in]; all outputs are row-aligned.
Prediction perturbed_predict(const SplitNetwork& split, const CupidModule& module,
                             const Tensor& x);

struct CupidTrainHyper {
    std::size_t epochs = 50;
    std::size_t batch_size = 8;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    double lambda1 = 1e-3;
    double lambda2 = 1e-2;
    bool no_max = false;  // drop the deviation reward from the epistemic loss
};

// Which parameters train and which loss applies.  Joint is the full
// objective; AleaOnly removes the reconstruction branch (predictions and
// targets compare against the host output) and trains trunk + unc under the
// aleatoric loss alone; EpisOnly removes the variance head and trains
// trunk + recon under the epistemic loss alone.
enum class BranchMode { Joint, AleaOnly, EpisOnly };

// Train the module against a frozen host.  The host's parameters enter every
// tape as constants, so they cannot receive gradients, let alone updates.
// Returns the mean training loss per epoch.
std::vector<double> train_cupid(const SplitNetwork& split, CupidModule& module,
                                const TensorDataset& data,
                                const CupidTrainHyper& hyper,
                                BranchMode mode = BranchMode::Joint);

}  // namespace cupid
