#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace cupid {

// Shape/precondition violations (mismatched dims, wrong tape, bad arguments).
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// NaN/Inf encountered in a forward value.  Non-finite numbers are treated as
// an error condition everywhere, never as data.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);

// Dense row-major tensor of doubles.  Rank 0 (empty shape) is a scalar with
// one element.  A tensor optionally carries a handle (tape id + node id) into
// the tape that produced it; tensors off the tape are plain values.
class Tensor {
public:
    Tensor() : data_(1, 0.0) {}
    explicit Tensor(Shape shape);
    Tensor(Shape shape, std::vector<double> data);

    static Tensor scalar(double v);
    static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
    static Tensor full(Shape shape, double v);

    const Shape& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    bool is_scalar() const { return shape_.empty(); }
    bool is_matrix() const { return shape_.size() == 2; }

    // Row/column counts for rank-2 tensors only.
    std::size_t rows() const;
    std::size_t cols() const;

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double& at(std::size_t r, std::size_t c);
    double at(std::size_t r, std::size_t c) const;
    double value() const;  // scalar tensors only

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool on_tape() const { return node_ >= 0; }
    int node() const { return node_; }

private:
    Shape shape_{};
    std::vector<double> data_;
    int node_ = -1;
    std::uint64_t tape_id_ = 0;

    friend class Tape;
    friend class GradMap;
};

enum class Op : std::uint8_t {
    Leaf,       // trainable parameter; receives a gradient
    ConstLeaf,  // data/targets/masks; no gradient emitted
    MatMul,
    Add,
    Sub,
    Mul,
    Scale,      // x * attr
    BiasAdd,    // [n,m] + [m], broadcast over rows
    Sigmoid,
    Relu,
    LeakyRelu,  // slope in attr
    PRelu,      // learnable slope as second input, shape [1] or [m]
    Exp,
    Log,
    Softmax,    // row-wise over the last dimension
    L1Norm,     // sum of |x| over all entries -> scalar
    SumSquares, // sum of x^2 over all entries -> scalar
    Sum,        // -> scalar
    Mean,       // -> scalar
    Pick,       // flat element attr -> scalar
};

const char* op_name(Op op);

// Gradients of the trainable leaves of one backward pass, keyed by node.
class GradMap {
public:
    const Tensor& at(const Tensor& leaf) const;
    bool contains(const Tensor& leaf) const { return grads_.count(leaf.node()) > 0; }
    std::size_t size() const { return grads_.size(); }

private:
    std::unordered_map<int, Tensor> grads_;
    std::uint64_t tape_id_ = 0;
    friend class Tape;
};

// Reverse-mode tape.  Records every operation in execution order (which is a
// topological order by construction) and replays it backwards for gradients.
// One tape per training step; tapes are independent, so separate threads may
// each own one.
class Tape {
public:
    Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Register a trainable leaf (deep copy of the value).
    Tensor param(const Tensor& t);
    // Register a non-trainable leaf; inputs/targets/dropout masks go here.
    Tensor constant(const Tensor& t);

    // Generic entry point; the named wrappers below all funnel through this.
    Tensor record(Op op, const std::vector<Tensor>& inputs, double attr = 0.0);

    Tensor matmul(const Tensor& a, const Tensor& b);
    Tensor add(const Tensor& a, const Tensor& b);
    Tensor sub(const Tensor& a, const Tensor& b);
    Tensor mul(const Tensor& a, const Tensor& b);
    Tensor scale(const Tensor& x, double c);
    Tensor bias_add(const Tensor& x, const Tensor& b);
    Tensor sigmoid(const Tensor& x);
    Tensor relu(const Tensor& x);
    Tensor leaky_relu(const Tensor& x, double slope = 0.01);
    Tensor prelu(const Tensor& x, const Tensor& slope);
    Tensor exp(const Tensor& x);
    Tensor log(const Tensor& x);
    Tensor softmax(const Tensor& x);
    Tensor l1_norm(const Tensor& x);
    Tensor sum_squares(const Tensor& x);
    Tensor sum(const Tensor& x);
    Tensor mean(const Tensor& x);
    Tensor pick(const Tensor& x, std::size_t index);

    // Reverse sweep from a scalar loss.  Returns gradients for every Leaf
    // node (zeros for leaves the loss does not reach).  ConstLeaf nodes get
    // no entry, so frozen host parameters receive no gradient by design.
    GradMap backward(const Tensor& loss);

    std::size_t size() const { return nodes_.size(); }
    // Nodes visited by the most recent backward sweep; equals size() because
    // the sweep walks the whole tape exactly once.
    std::size_t last_backward_visits() const { return last_visits_; }

private:
    struct Node {
        Op op;
        std::vector<int> parents;
        Tensor value;
        double attr = 0.0;
    };

    int push(Op op, std::vector<int> parents, Tensor value, double attr);
    // Adopt an input tensor: verify tape ownership, auto-promote plain
    // values to ConstLeaf nodes.
    int adopt(const Tensor& t);
    const Tensor& val(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }

    std::vector<Node> nodes_;
    std::uint64_t id_;
    std::size_t last_visits_ = 0;
};

// Gather matrix rows order[begin..end) into a new [end-begin, cols] tensor.
Tensor slice_rows(const Tensor& t, const std::vector<std::size_t>& order,
                  std::size_t begin, std::size_t end);

// Adam with bias correction.  Moment slots attach to parameters positionally
// on first use, so call step() with a stable parameter order.
class Adam {
public:
    explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8);

    void step(std::span<Tensor* const> params, std::span<const Tensor> grads);
    std::size_t steps_taken() const { return t_; }

private:
    double lr_, beta1_, beta2_, eps_;
    std::size_t t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

}  // namespace cupid
