#include "cupid/tensor.hpp"

#include <atomic>
#include <cmath>
#include <numeric>

namespace cupid {

namespace {

std::size_t shape_numel(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
}

void ensure_finite(Op op, const std::vector<double>& v) {
    for (double x : v) {
        if (!std::isfinite(x)) {
            throw NumericError(std::string(op_name(op)) +
                               " produced a non-finite value");
        }
    }
}

[[noreturn]] void shape_fail(Op op, const Shape& a, const Shape& b) {
    throw ShapeError(std::string(op_name(op)) + ": incompatible shapes " +
                     shape_str(a) + " vs " + shape_str(b));
}

[[noreturn]] void shape_fail(Op op, const Shape& a, const std::string& why) {
    throw ShapeError(std::string(op_name(op)) + ": " + why + ", got " +
                     shape_str(a));
}

std::atomic<std::uint64_t> next_tape_id{1};

}  // namespace

std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

const char* op_name(Op op) {
    switch (op) {
        case Op::Leaf: return "leaf";
        case Op::ConstLeaf: return "const";
        case Op::MatMul: return "matmul";
        case Op::Add: return "add";
        case Op::Sub: return "sub";
        case Op::Mul: return "mul";
        case Op::Scale: return "scale";
        case Op::BiasAdd: return "bias_add";
        case Op::Sigmoid: return "sigmoid";
        case Op::Relu: return "relu";
        case Op::LeakyRelu: return "leaky_relu";
        case Op::PRelu: return "prelu";
        case Op::Exp: return "exp";
        case Op::Log: return "log";
        case Op::Softmax: return "softmax";
        case Op::L1Norm: return "l1_norm";
        case Op::SumSquares: return "sum_squares";
        case Op::Sum: return "sum";
        case Op::Mean: return "mean";
        case Op::Pick: return "pick";
    }
    return "?";
}

Tensor::Tensor(Shape shape)
    : shape_(std::move(shape)), data_(shape_numel(shape_), 0.0) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_numel(shape_) != data_.size()) {
        throw ShapeError("tensor: shape " + shape_str(shape_) + " wants " +
                         std::to_string(shape_numel(shape_)) +
                         " entries, got " + std::to_string(data_.size()));
    }
}

Tensor Tensor::scalar(double v) {
    Tensor t;
    t.data_[0] = v;
    return t;
}

Tensor Tensor::full(Shape shape, double v) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), v);
    return t;
}

std::size_t Tensor::rows() const {
    if (!is_matrix()) throw ShapeError("rows(): not a matrix: " + shape_str(shape_));
    return shape_[0];
}

std::size_t Tensor::cols() const {
    if (!is_matrix()) throw ShapeError("cols(): not a matrix: " + shape_str(shape_));
    return shape_[1];
}

double& Tensor::at(std::size_t r, std::size_t c) {
    return data_[r * cols() + c];
}

double Tensor::at(std::size_t r, std::size_t c) const {
    return data_[r * cols() + c];
}

double Tensor::value() const {
    if (!is_scalar()) {
        throw ShapeError("value(): not a scalar: " + shape_str(shape_));
    }
    return data_[0];
}

const Tensor& GradMap::at(const Tensor& leaf) const {
    auto it = grads_.find(leaf.node());
    if (!leaf.on_tape() || leaf.tape_id_ != tape_id_ || it == grads_.end()) {
        throw ShapeError("GradMap: tensor is not a trainable leaf of this tape");
    }
    return it->second;
}

Tape::Tape() : id_(next_tape_id.fetch_add(1)) {}

int Tape::push(Op op, std::vector<int> parents, Tensor value, double attr) {
    ensure_finite(op, value.data());
    int id = static_cast<int>(nodes_.size());
    value.node_ = id;
    value.tape_id_ = id_;
    nodes_.push_back(Node{op, std::move(parents), std::move(value), attr});
    return id;
}

Tensor Tape::param(const Tensor& t) {
    Tensor v = t;
    v.node_ = -1;
    return nodes_[static_cast<std::size_t>(push(Op::Leaf, {}, std::move(v), 0.0))].value;
}

Tensor Tape::constant(const Tensor& t) {
    Tensor v = t;
    v.node_ = -1;
    return nodes_[static_cast<std::size_t>(push(Op::ConstLeaf, {}, std::move(v), 0.0))].value;
}

int Tape::adopt(const Tensor& t) {
    if (t.on_tape()) {
        if (t.tape_id_ != id_) {
            throw ShapeError("tensor belongs to a different tape");
        }
        return t.node_;
    }
    return constant(t).node_;
}

namespace {

bool same_shape(const Tensor& a, const Tensor& b) { return a.shape() == b.shape(); }

// add/sub/mul accept equal shapes or a rank-0 scalar on either side.
enum class EwMode { Same, ScalarLeft, ScalarRight };

EwMode ew_mode(Op op, const Tensor& a, const Tensor& b) {
    if (same_shape(a, b)) return EwMode::Same;
    if (a.is_scalar()) return EwMode::ScalarLeft;
    if (b.is_scalar()) return EwMode::ScalarRight;
    shape_fail(op, a.shape(), b.shape());
}

}  // namespace

Tensor Tape::record(Op op, const std::vector<Tensor>& inputs, double attr) {
    auto arity = [&](std::size_t n) {
        if (inputs.size() != n) {
            throw ShapeError(std::string(op_name(op)) + ": expected " +
                             std::to_string(n) + " inputs, got " +
                             std::to_string(inputs.size()));
        }
    };
    auto nonempty = [&](const Tensor& t) {
        if (t.size() == 0) shape_fail(op, t.shape(), "empty input");
    };

    switch (op) {
        case Op::Leaf:
            arity(1);
            return param(inputs[0]);
        case Op::ConstLeaf:
            arity(1);
            return constant(inputs[0]);

        case Op::MatMul: {
            arity(2);
            const Tensor& a = inputs[0];
            const Tensor& b = inputs[1];
            if (!a.is_matrix() || !b.is_matrix() || a.cols() != b.rows()) {
                shape_fail(op, a.shape(), b.shape());
            }
            std::size_t n = a.rows(), m = a.cols(), p = b.cols();
            Tensor out(Shape{n, p});
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t l = 0; l < m; ++l) {
                    double av = a[i * m + l];
                    if (av == 0.0) continue;
                    for (std::size_t j = 0; j < p; ++j) {
                        out[i * p + j] += av * b[l * p + j];
                    }
                }
            }
            int id = push(op, {adopt(a), adopt(b)}, std::move(out), attr);
            return nodes_[static_cast<std::size_t>(id)].value;
        }

        case Op::Add:
        case Op::Sub:
        case Op::Mul: {
            arity(2);
            const Tensor& a = inputs[0];
            const Tensor& b = inputs[1];
            nonempty(a);
            nonempty(b);
            EwMode mode = ew_mode(op, a, b);
            const Tensor& big = (mode == EwMode::ScalarLeft) ? b : a;
            Tensor out(big.shape());
            for (std::size_t i = 0; i < out.size(); ++i) {
                double x = (mode == EwMode::ScalarLeft) ? a[0] : a[i];
                double y = (mode == EwMode::ScalarRight) ? b[0] : b[i];
                out[i] = (op == Op::Add) ? x + y : (op == Op::Sub) ? x - y : x * y;
            }
            int id = push(op, {adopt(a), adopt(b)}, std::move(out), attr);
            return nodes_[static_cast<std::size_t>(id)].value;
        }

        case Op::Scale: {
            arity(1);
            const Tensor& x = inputs[0];
            nonempty(x);
            Tensor out(x.shape());
            for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * attr;
            int id = push(op, {adopt(x)}, std::move(out), attr);
            return nodes_[static_cast<std::size_t>(id)].value;
        }

        case Op::BiasAdd: {
            arity(2);
            const Tensor& x = inputs[0];
            const Tensor& b = inputs[1];
            if (!x.is_matrix() || b.shape().size() != 1 || b.size() != x.cols()) {
                shape_fail(op, x.shape(), b.shape());
            }
            std::size_t n = x.rows(), m = x.cols();
            Tensor out(x.shape());
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < m; ++j) {
                    out[i * m + j] = x[i * m + j] + b[j];
                }
            }
            int id = push(op, {adopt(x), adopt(b)}, std::move(out), attr);
            return nodes_[static_cast<std::size_t>(id)].value;
        }

        case Op::Sigmoid:
        case Op::Relu:
        case Op::LeakyRelu:
        case Op::Exp:
        case Op::Log: {
            arity(1);
            const Tensor& x = inputs[0];
            nonempty(x);
            Tensor out(x.shape());
            for (std::size_t i = 0; i < x.size(); ++i) {
                double v = x[i];
                switch (op) {
                    case Op::Sigmoid: out[i] = 1.0 / (1.0 + std::exp(-v)); break;
                    case Op::Relu: out[i] = v > 0.0 ? v : 0.0; break;
                    case Op::LeakyRelu: out[i] = v > 0.0 ? v : attr * v; break;
                    case Op::Exp: out[i] = std::exp(v); break;
                    case Op::Log: out[i] = std::log(v); break;
                    default: break;
                }
            }
            int id = push(op, {adopt(x)}, std::move(out), attr);
            return nodes_[static_cast<std::size_t>(id)].value;
        }

        case Op::PRelu: {
            arity(2);
            const Tensor& x = inputs[0];
            const Tensor& a = inputs[1];
            nonempty(x);
            bool per_col = a.shape().size() == 1 && x.is_matrix() &&
                           a.size() == x.cols();
            bool single = a.size() == 1;
            if (!per_col && !single) shape_fail(op, x.shape(), a.shape());
            Tensor out(x.shape());
            std::size_t m = per_col ? x.cols() : 1;
            for (std::size_t i = 0; i < x.size(); ++i) {
                double slope = per_col ? a[i % m] : a[0];
                out[i] = x[i] > 0.0 ? x[i] : slope * x[i];
            }
            int id = push(op, {adopt(x), adopt(a)}, std::move(out), attr);
            return nodes_[static_cast<std::size_t>(id)].value;
        }

        case Op::Softmax: {
            arity(1);
            const Tensor& x = inputs[0];
            if (!x.is_matrix() || x.cols() == 0 || x.rows() == 0) {
                shape_fail(op, x.shape(), "wants a non-empty matrix");
            }
            std::size_t n = x.rows(), k = x.cols();
            Tensor out(x.shape());
            for (std::size_t i = 0; i < n; ++i) {
                double mx = x[i * k];
                for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, x[i * k + j]);
                double z = 0.0;
                for (std::size_t j = 0; j < k; ++j) {
                    out[i * k + j] = std::exp(x[i * k + j] - mx);
                    z += out[i * k + j];
                }
                for (std::size_t j = 0; j < k; ++j) out[i * k + j] /= z;
            }
            int id = push(op, {adopt(x)}, std::move(out), attr);
            return nodes_[static_cast<std::size_t>(id)].value;
        }

        case Op::L1Norm:
        case Op::SumSquares:
        case Op::Sum:
        case Op::Mean: {
            arity(1);
            const Tensor& x = inputs[0];
            nonempty(x);
            double acc = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                double v = x[i];
                acc += (op == Op::L1Norm)      ? std::abs(v)
                       : (op == Op::SumSquares) ? v * v
                                                : v;
            }
            if (op == Op::Mean) acc /= static_cast<double>(x.size());
            int id = push(op, {adopt(x)}, Tensor::scalar(acc), attr);
            return nodes_[static_cast<std::size_t>(id)].value;
        }

        case Op::Pick: {
            arity(1);
            const Tensor& x = inputs[0];
            auto index = static_cast<std::size_t>(attr);
            if (index >= x.size()) {
                shape_fail(op, x.shape(),
                           "index " + std::to_string(index) + " out of range");
            }
            int id = push(op, {adopt(x)}, Tensor::scalar(x[index]), attr);
            return nodes_[static_cast<std::size_t>(id)].value;
        }
    }
    throw ShapeError("record: unknown op");
}

Tensor Tape::matmul(const Tensor& a, const Tensor& b) { return record(Op::MatMul, {a, b}); }
Tensor Tape::add(const Tensor& a, const Tensor& b) { return record(Op::Add, {a, b}); }
Tensor Tape::sub(const Tensor& a, const Tensor& b) { return record(Op::Sub, {a, b}); }
Tensor Tape::mul(const Tensor& a, const Tensor& b) { return record(Op::Mul, {a, b}); }
Tensor Tape::scale(const Tensor& x, double c) { return record(Op::Scale, {x}, c); }
Tensor Tape::bias_add(const Tensor& x, const Tensor& b) { return record(Op::BiasAdd, {x, b}); }
Tensor Tape::sigmoid(const Tensor& x) { return record(Op::Sigmoid, {x}); }
Tensor Tape::relu(const Tensor& x) { return record(Op::Relu, {x}); }
Tensor Tape::leaky_relu(const Tensor& x, double slope) { return record(Op::LeakyRelu, {x}, slope); }
Tensor Tape::prelu(const Tensor& x, const Tensor& slope) { return record(Op::PRelu, {x, slope}); }
Tensor Tape::exp(const Tensor& x) { return record(Op::Exp, {x}); }
Tensor Tape::log(const Tensor& x) { return record(Op::Log, {x}); }
Tensor Tape::softmax(const Tensor& x) { return record(Op::Softmax, {x}); }
Tensor Tape::l1_norm(const Tensor& x) { return record(Op::L1Norm, {x}); }
Tensor Tape::sum_squares(const Tensor& x) { return record(Op::SumSquares, {x}); }
Tensor Tape::sum(const Tensor& x) { return record(Op::Sum, {x}); }
Tensor Tape::mean(const Tensor& x) { return record(Op::Mean, {x}); }
Tensor Tape::pick(const Tensor& x, std::size_t index) {
    return record(Op::Pick, {x}, static_cast<double>(index));
}

GradMap Tape::backward(const Tensor& loss) {
    if (!loss.on_tape() || loss.tape_id_ != id_) {
        throw ShapeError("backward: loss is not on this tape");
    }
    if (!loss.is_scalar()) {
        throw ShapeError("backward: loss must be scalar, got " +
                         shape_str(loss.shape()));
    }

    std::size_t n = nodes_.size();
    std::vector<std::vector<double>> grad(n);
    grad[static_cast<std::size_t>(loss.node())] = {1.0};
    last_visits_ = 0;

    // Construction order is topological, so a single reverse sweep visits
    // every node once with its output gradient fully accumulated.
    for (std::size_t i = n; i-- > 0;) {
        ++last_visits_;
        const Node& nd = nodes_[i];
        if (grad[i].empty()) continue;
        const std::vector<double>& g = grad[i];
        auto parent_grad = [&](std::size_t slot) -> std::vector<double>& {
            auto pid = static_cast<std::size_t>(nd.parents[slot]);
            if (grad[pid].empty()) grad[pid].assign(val(nd.parents[slot]).size(), 0.0);
            return grad[pid];
        };

        switch (nd.op) {
            case Op::Leaf:
            case Op::ConstLeaf:
                break;

            case Op::MatMul: {
                const Tensor& a = val(nd.parents[0]);
                const Tensor& b = val(nd.parents[1]);
                std::size_t rn = a.rows(), m = a.cols(), p = b.cols();
                auto& ga = parent_grad(0);
                auto& gb = parent_grad(1);
                // dA = dC * B^T, dB = A^T * dC
                for (std::size_t r = 0; r < rn; ++r) {
                    for (std::size_t j = 0; j < p; ++j) {
                        double gv = g[r * p + j];
                        if (gv == 0.0) continue;
                        for (std::size_t l = 0; l < m; ++l) {
                            ga[r * m + l] += gv * b[l * p + j];
                            gb[l * p + j] += gv * a[r * m + l];
                        }
                    }
                }
                break;
            }

            case Op::Add:
            case Op::Sub: {
                const Tensor& a = val(nd.parents[0]);
                const Tensor& b = val(nd.parents[1]);
                auto& ga = parent_grad(0);
                auto& gb = parent_grad(1);
                double sign = (nd.op == Op::Sub) ? -1.0 : 1.0;
                for (std::size_t k = 0; k < g.size(); ++k) {
                    ga[a.size() == 1 ? 0 : k] += g[k];
                    gb[b.size() == 1 ? 0 : k] += sign * g[k];
                }
                break;
            }

            case Op::Mul: {
                const Tensor& a = val(nd.parents[0]);
                const Tensor& b = val(nd.parents[1]);
                auto& ga = parent_grad(0);
                auto& gb = parent_grad(1);
                for (std::size_t k = 0; k < g.size(); ++k) {
                    double av = a[a.size() == 1 ? 0 : k];
                    double bv = b[b.size() == 1 ? 0 : k];
                    ga[a.size() == 1 ? 0 : k] += g[k] * bv;
                    gb[b.size() == 1 ? 0 : k] += g[k] * av;
                }
                break;
            }

            case Op::Scale: {
                auto& gx = parent_grad(0);
                for (std::size_t k = 0; k < g.size(); ++k) gx[k] += g[k] * nd.attr;
                break;
            }

            case Op::BiasAdd: {
                const Tensor& x = val(nd.parents[0]);
                auto& gx = parent_grad(0);
                auto& gb = parent_grad(1);
                std::size_t m = x.cols();
                for (std::size_t k = 0; k < g.size(); ++k) {
                    gx[k] += g[k];
                    gb[k % m] += g[k];
                }
                break;
            }

            case Op::Sigmoid: {
                const Tensor& y = nd.value;
                auto& gx = parent_grad(0);
                for (std::size_t k = 0; k < g.size(); ++k) {
                    gx[k] += g[k] * y[k] * (1.0 - y[k]);
                }
                break;
            }

            case Op::Relu: {
                const Tensor& x = val(nd.parents[0]);
                auto& gx = parent_grad(0);
                for (std::size_t k = 0; k < g.size(); ++k) {
                    if (x[k] > 0.0) gx[k] += g[k];
                }
                break;
            }

            case Op::LeakyRelu: {
                const Tensor& x = val(nd.parents[0]);
                auto& gx = parent_grad(0);
                for (std::size_t k = 0; k < g.size(); ++k) {
                    gx[k] += g[k] * (x[k] > 0.0 ? 1.0 : nd.attr);
                }
                break;
            }

            case Op::PRelu: {
                const Tensor& x = val(nd.parents[0]);
                const Tensor& a = val(nd.parents[1]);
                auto& gx = parent_grad(0);
                auto& ga = parent_grad(1);
                std::size_t m = (a.size() > 1) ? x.cols() : 1;
                for (std::size_t k = 0; k < g.size(); ++k) {
                    std::size_t ai = (a.size() > 1) ? k % m : 0;
                    if (x[k] > 0.0) {
                        gx[k] += g[k];
                    } else {
                        gx[k] += g[k] * a[ai];
                        ga[ai] += g[k] * x[k];
                    }
                }
                break;
            }

            case Op::Exp: {
                const Tensor& y = nd.value;
                auto& gx = parent_grad(0);
                for (std::size_t k = 0; k < g.size(); ++k) gx[k] += g[k] * y[k];
                break;
            }

            case Op::Log: {
                const Tensor& x = val(nd.parents[0]);
                auto& gx = parent_grad(0);
                for (std::size_t k = 0; k < g.size(); ++k) gx[k] += g[k] / x[k];
                break;
            }

            case Op::Softmax: {
                const Tensor& y = nd.value;
                auto& gx = parent_grad(0);
                std::size_t rn = y.rows(), k = y.cols();
                for (std::size_t r = 0; r < rn; ++r) {
                    double dot = 0.0;
                    for (std::size_t j = 0; j < k; ++j) {
                        dot += g[r * k + j] * y[r * k + j];
                    }
                    for (std::size_t j = 0; j < k; ++j) {
                        gx[r * k + j] += y[r * k + j] * (g[r * k + j] - dot);
                    }
                }
                break;
            }

            case Op::L1Norm: {
                const Tensor& x = val(nd.parents[0]);
                auto& gx = parent_grad(0);
                for (std::size_t k = 0; k < x.size(); ++k) {
                    double s = x[k] > 0.0 ? 1.0 : (x[k] < 0.0 ? -1.0 : 0.0);
                    gx[k] += g[0] * s;
                }
                break;
            }

            case Op::SumSquares: {
                const Tensor& x = val(nd.parents[0]);
                auto& gx = parent_grad(0);
                for (std::size_t k = 0; k < x.size(); ++k) {
                    gx[k] += g[0] * 2.0 * x[k];
                }
                break;
            }

            case Op::Sum: {
                const Tensor& x = val(nd.parents[0]);
                auto& gx = parent_grad(0);
                for (std::size_t k = 0; k < x.size(); ++k) gx[k] += g[0];
                break;
            }

            case Op::Mean: {
                const Tensor& x = val(nd.parents[0]);
                auto& gx = parent_grad(0);
                double inv = 1.0 / static_cast<double>(x.size());
                for (std::size_t k = 0; k < x.size(); ++k) gx[k] += g[0] * inv;
                break;
            }

            case Op::Pick: {
                auto& gx = parent_grad(0);
                gx[static_cast<std::size_t>(nd.attr)] += g[0];
                break;
            }
        }
    }

    GradMap out;
    out.tape_id_ = id_;
    for (std::size_t i = 0; i < n; ++i) {
        if (nodes_[i].op != Op::Leaf) continue;
        Tensor gt(nodes_[i].value.shape());
        if (!grad[i].empty()) gt.data() = grad[i];
        out.grads_.emplace(static_cast<int>(i), std::move(gt));
    }
    return out;
}

Tensor slice_rows(const Tensor& t, const std::vector<std::size_t>& order,
                  std::size_t begin, std::size_t end) {
    std::size_t m = t.cols();
    if (begin > end || end > order.size()) {
        throw ShapeError("slice_rows: bad range");
    }
    Tensor out(Shape{end - begin, m});
    for (std::size_t i = begin; i < end; ++i) {
        if (order[i] >= t.rows()) throw ShapeError("slice_rows: row out of range");
        for (std::size_t j = 0; j < m; ++j) {
            out[(i - begin) * m + j] = t[order[i] * m + j];
        }
    }
    return out;
}

Adam::Adam(double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step(std::span<Tensor* const> params, std::span<const Tensor> grads) {
    if (params.size() != grads.size()) {
        throw ShapeError("adam: " + std::to_string(params.size()) +
                         " params vs " + std::to_string(grads.size()) + " grads");
    }
    if (m_.empty()) {
        m_.resize(params.size());
        v_.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i].assign(params[i]->size(), 0.0);
            v_[i].assign(params[i]->size(), 0.0);
        }
    }
    if (m_.size() != params.size()) {
        throw ShapeError("adam: parameter list changed size between steps");
    }

    ++t_;
    double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        const Tensor& g = grads[i];
        if (p.shape() != g.shape()) {
            throw ShapeError("adam: param/grad shape mismatch " +
                             shape_str(p.shape()) + " vs " + shape_str(g.shape()));
        }
        for (std::size_t k = 0; k < p.size(); ++k) {
            m_[i][k] = beta1_ * m_[i][k] + (1.0 - beta1_) * g[k];
            v_[i][k] = beta2_ * v_[i][k] + (1.0 - beta2_) * g[k] * g[k];
            double mhat = m_[i][k] / bc1;
            double vhat = v_[i][k] / bc2;
            p[k] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

}  // namespace cupid
