#include "qdrqn/autograd.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace qdrqn {

namespace {

std::string shape_str(const Matrix &m) {
    return "[" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + "]";
}

bool is_scalar(const Matrix &m) { return m.rows() == 1 && m.cols() == 1; }

// Reduce a gradient to the shape of a (possibly broadcast) operand.
Matrix reduce_to(const Matrix &g, const Matrix &like) {
    if (is_scalar(like) && !is_scalar(g)) {
        return Matrix::Constant(1, 1, g.sum());
    }
    return g;
}

} // namespace

const Tape::Node &Tape::node(Var v) const {
    if (v.id_ < 0 || static_cast<std::size_t>(v.id_) >= nodes_.size()) {
        throw std::out_of_range("Var does not belong to this tape");
    }
    return nodes_[v.id_];
}

Var Tape::push(Node n, const char *what) {
    if (checked_ == Checked::kOn && !n.value.allFinite()) {
        throw std::domain_error(std::string("non-finite value produced by ") + what);
    }
    nodes_.push_back(std::move(n));
    return Var(static_cast<int>(nodes_.size()) - 1);
}

Var Tape::constant(Matrix value) {
    Node n;
    n.op = Op::kConstant;
    n.value = std::move(value);
    return push(std::move(n), "constant");
}

Var Tape::variable(Matrix value) {
    Node n;
    n.op = Op::kVariable;
    n.value = std::move(value);
    n.requires_grad = true;
    return push(std::move(n), "variable");
}

Var Tape::parameter(Parameter &p) {
    Node n;
    n.op = Op::kParameter;
    n.value = p.value;
    n.param = &p;
    n.requires_grad = true;
    return push(std::move(n), p.name.c_str());
}

Var Tape::linear(Var input, Var weight, Var bias) {
    const Matrix &x = node(input).value;
    const Matrix &w = node(weight).value;
    const Matrix &b = node(bias).value;
    if (x.cols() != w.cols() || b.rows() != 1 || b.cols() != w.rows()) {
        throw std::invalid_argument("linear: shape mismatch input " + shape_str(x) + ", weight " + shape_str(w) +
                                    ", bias " + shape_str(b));
    }
    Node n;
    n.op = Op::kLinear;
    n.in = {input.id_, weight.id_, bias.id_};
    n.value = x * w.transpose();
    n.value.rowwise() += b.row(0);
    n.requires_grad = node(input).requires_grad || node(weight).requires_grad || node(bias).requires_grad;
    return push(std::move(n), "linear");
}

Var Tape::elementwise_binary(Op op, Var a, Var b, const char *what) {
    const Matrix &x = node(a).value;
    const Matrix &y = node(b).value;
    Node n;
    n.op = op;
    n.in = {a.id_, b.id_, -1};
    auto combine = [op](const auto &l, const auto &r) -> Matrix {
        switch (op) {
        case Op::kAdd:
            return l + r;
        case Op::kSub:
            return l - r;
        default:
            return l.cwiseProduct(r);
        }
    };
    if (x.rows() == y.rows() && x.cols() == y.cols()) {
        n.value = combine(x, y);
    } else if (is_scalar(y)) {
        n.value = combine(x.array(), Eigen::ArrayXXd::Constant(x.rows(), x.cols(), y(0, 0))).matrix();
    } else if (is_scalar(x)) {
        n.value = combine(Eigen::ArrayXXd::Constant(y.rows(), y.cols(), x(0, 0)), y.array()).matrix();
    } else {
        throw std::invalid_argument(std::string(what) + ": shape mismatch " + shape_str(x) + " vs " + shape_str(y));
    }
    n.requires_grad = node(a).requires_grad || node(b).requires_grad;
    return push(std::move(n), what);
}

Var Tape::add(Var a, Var b) { return elementwise_binary(Op::kAdd, a, b, "add"); }
Var Tape::sub(Var a, Var b) { return elementwise_binary(Op::kSub, a, b, "sub"); }
Var Tape::mul(Var a, Var b) { return elementwise_binary(Op::kMul, a, b, "mul"); }

Var Tape::scale(Var a, double s) {
    Node n;
    n.op = Op::kScale;
    n.in = {a.id_, -1, -1};
    n.scalar = s;
    n.value = node(a).value * s;
    n.requires_grad = node(a).requires_grad;
    return push(std::move(n), "scale");
}

Var Tape::sigmoid(Var a) {
    Node n;
    n.op = Op::kSigmoid;
    n.in = {a.id_, -1, -1};
    n.value = (1.0 + (-node(a).value.array()).exp()).inverse().matrix();
    n.requires_grad = node(a).requires_grad;
    return push(std::move(n), "sigmoid");
}

Var Tape::tanh(Var a) {
    Node n;
    n.op = Op::kTanh;
    n.in = {a.id_, -1, -1};
    n.value = node(a).value.array().tanh().matrix();
    n.requires_grad = node(a).requires_grad;
    return push(std::move(n), "tanh");
}

Var Tape::arctan(Var a) {
    Node n;
    n.op = Op::kArctan;
    n.in = {a.id_, -1, -1};
    n.value = node(a).value.array().atan().matrix();
    n.requires_grad = node(a).requires_grad;
    return push(std::move(n), "arctan");
}

Var Tape::square(Var a) {
    Node n;
    n.op = Op::kSquare;
    n.in = {a.id_, -1, -1};
    n.value = node(a).value.array().square().matrix();
    n.requires_grad = node(a).requires_grad;
    return push(std::move(n), "square");
}

Var Tape::slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
    const Matrix &x = node(a).value;
    if (start < 0 || count < 0 || start + count > x.cols()) {
        throw std::invalid_argument("slice_cols: [" + std::to_string(start) + ", +" + std::to_string(count) +
                                    ") outside " + shape_str(x));
    }
    Node n;
    n.op = Op::kSliceCols;
    n.in = {a.id_, -1, -1};
    n.offset = start;
    n.value = x.middleCols(start, count);
    n.requires_grad = node(a).requires_grad;
    return push(std::move(n), "slice_cols");
}

Var Tape::concat_cols(Var a, Var b) {
    const Matrix &x = node(a).value;
    const Matrix &y = node(b).value;
    if (x.rows() != y.rows()) {
        throw std::invalid_argument("concat_cols: row mismatch " + shape_str(x) + " vs " + shape_str(y));
    }
    Node n;
    n.op = Op::kConcatCols;
    n.in = {a.id_, b.id_, -1};
    n.value.resize(x.rows(), x.cols() + y.cols());
    n.value << x, y;
    n.requires_grad = node(a).requires_grad || node(b).requires_grad;
    return push(std::move(n), "concat_cols");
}

Var Tape::pick(Var a, std::vector<int> cols) {
    const Matrix &x = node(a).value;
    if (static_cast<Eigen::Index>(cols.size()) != x.rows()) {
        throw std::invalid_argument("pick: need one column index per row of " + shape_str(x));
    }
    Node n;
    n.op = Op::kPick;
    n.in = {a.id_, -1, -1};
    n.value.resize(x.rows(), 1);
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        if (cols[r] < 0 || cols[r] >= x.cols()) {
            throw std::out_of_range("pick: column " + std::to_string(cols[r]) + " outside " + shape_str(x));
        }
        n.value(r, 0) = x(r, cols[r]);
    }
    n.indices = std::move(cols);
    n.requires_grad = node(a).requires_grad;
    return push(std::move(n), "pick");
}

Var Tape::sum(Var a) {
    Node n;
    n.op = Op::kSum;
    n.in = {a.id_, -1, -1};
    n.value = Matrix::Constant(1, 1, node(a).value.sum());
    n.requires_grad = node(a).requires_grad;
    return push(std::move(n), "sum");
}

Var Tape::vqc(Var inputs, Var angles, const CircuitSpec &spec, GradientMethod method) {
    spec.validate();
    const Matrix &x = node(inputs).value;
    const Matrix &p = node(angles).value;
    if (x.cols() != spec.n_qubits) {
        throw std::invalid_argument("vqc: inputs " + shape_str(x) + " do not match " +
                                    std::to_string(spec.n_qubits) + " qubits");
    }
    if (p.size() != spec.num_parameters()) {
        throw std::invalid_argument("vqc: angles " + shape_str(p) + " do not match " +
                                    std::to_string(spec.num_parameters()) + " parameters");
    }
    const Eigen::Map<const Vector> flat(p.data(), p.size());
    Node n;
    n.op = Op::kVqc;
    n.in = {inputs.id_, angles.id_, -1};
    n.spec = spec;
    n.method = method;
    n.value.resize(x.rows(), spec.n_qubits);
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        n.value.row(r) = run_vqc(spec, x.row(r).transpose(), flat).transpose();
    }
    n.requires_grad = node(inputs).requires_grad || node(angles).requires_grad;
    return push(std::move(n), "vqc");
}

const Matrix &Tape::value(Var v) const { return node(v).value; }

const Matrix &Tape::grad(Var v) const {
    const Node &n = node(v);
    if (n.grad.size() == 0) {
        throw std::logic_error("grad: node has no gradient (constant, or backward not run)");
    }
    return n.grad;
}

std::array<Eigen::Index, 2> Tape::shape(Var v) const {
    const Matrix &m = node(v).value;
    return {m.rows(), m.cols()};
}

bool Tape::requires_grad(Var v) const { return node(v).requires_grad; }

void Tape::accumulate(int target, const Matrix &g) {
    Node &t = nodes_[target];
    if (t.requires_grad) {
        t.grad += g;
    }
}

void Tape::backward(Var root) {
    const Node &r = node(root);
    if (r.value.rows() != 1 || r.value.cols() != 1) {
        throw std::invalid_argument("backward: root must be 1x1, got " + shape_str(r.value));
    }
    for (std::size_t k = 0; k <= static_cast<std::size_t>(root.id_); ++k) {
        Node &n = nodes_[k];
        if (n.requires_grad) {
            n.grad.setZero(n.value.rows(), n.value.cols());
        }
    }
    if (!r.requires_grad) {
        return;
    }
    nodes_[root.id_].grad(0, 0) = 1.0;
    for (int k = root.id_; k >= 0; --k) {
        const Node &n = nodes_[k];
        if (n.requires_grad) {
            backward_node(n);
        }
    }
}

void Tape::backward_node(const Node &n) {
    const Matrix &g = n.grad;
    switch (n.op) {
    case Op::kConstant:
    case Op::kVariable:
        break;
    case Op::kParameter:
        n.param->grad += g;
        break;
    case Op::kLinear: {
        const Matrix &x = nodes_[n.in[0]].value;
        const Matrix &w = nodes_[n.in[1]].value;
        accumulate(n.in[0], g * w);
        accumulate(n.in[1], g.transpose() * x);
        accumulate(n.in[2], g.colwise().sum());
        break;
    }
    case Op::kAdd:
    case Op::kSub:
    case Op::kMul: {
        const Matrix &a = nodes_[n.in[0]].value;
        const Matrix &b = nodes_[n.in[1]].value;
        if (n.op == Op::kMul) {
            const auto bcast = [&](const Matrix &m) -> Matrix {
                return is_scalar(m) ? Matrix::Constant(g.rows(), g.cols(), m(0, 0)) : m;
            };
            accumulate(n.in[0], reduce_to(g.cwiseProduct(bcast(b)), a));
            accumulate(n.in[1], reduce_to(g.cwiseProduct(bcast(a)), b));
        } else {
            accumulate(n.in[0], reduce_to(g, a));
            accumulate(n.in[1], reduce_to(n.op == Op::kSub ? Matrix(-g) : g, b));
        }
        break;
    }
    case Op::kScale:
        accumulate(n.in[0], g * n.scalar);
        break;
    case Op::kSigmoid:
        accumulate(n.in[0], (g.array() * n.value.array() * (1.0 - n.value.array())).matrix());
        break;
    case Op::kTanh:
        accumulate(n.in[0], (g.array() * (1.0 - n.value.array().square())).matrix());
        break;
    case Op::kArctan: {
        const Matrix &x = nodes_[n.in[0]].value;
        accumulate(n.in[0], (g.array() / (1.0 + x.array().square())).matrix());
        break;
    }
    case Op::kSquare: {
        const Matrix &x = nodes_[n.in[0]].value;
        accumulate(n.in[0], (2.0 * g.array() * x.array()).matrix());
        break;
    }
    case Op::kSliceCols: {
        Node &src = nodes_[n.in[0]];
        if (src.requires_grad) {
            src.grad.middleCols(n.offset, g.cols()) += g;
        }
        break;
    }
    case Op::kConcatCols: {
        const Eigen::Index left = nodes_[n.in[0]].value.cols();
        accumulate(n.in[0], g.leftCols(left));
        accumulate(n.in[1], g.rightCols(g.cols() - left));
        break;
    }
    case Op::kPick: {
        Node &src = nodes_[n.in[0]];
        if (src.requires_grad) {
            for (Eigen::Index r = 0; r < g.rows(); ++r) {
                src.grad(r, n.indices[r]) += g(r, 0);
            }
        }
        break;
    }
    case Op::kSum: {
        Node &src = nodes_[n.in[0]];
        if (src.requires_grad) {
            src.grad.array() += g(0, 0);
        }
        break;
    }
    case Op::kVqc: {
        Node &in = nodes_[n.in[0]];
        Node &ang = nodes_[n.in[1]];
        const Eigen::Map<const Vector> flat(ang.value.data(), ang.value.size());
        for (Eigen::Index r = 0; r < in.value.rows(); ++r) {
            if (g.row(r).isZero(0.0)) {
                continue;
            }
            const auto vg = vqc_gradient(n.spec, in.value.row(r).transpose(), flat, g.row(r).transpose(), n.method);
            if (in.requires_grad) {
                in.grad.row(r) += vg.d_input.transpose();
            }
            if (ang.requires_grad) {
                Eigen::Map<Vector>(ang.grad.data(), ang.grad.size()) += vg.d_angles;
            }
        }
        break;
    }
    }
}

} // namespace qdrqn
