#pragma once

#include "qdrqn/vqc.hpp"

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace qdrqn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// A trainable tensor owned by a model. Gradients recorded on a Tape
/// accumulate into `grad` when backward runs.
struct Parameter {
    std::string name;
    Matrix value;
    Matrix grad;

    Parameter() = default;
    Parameter(std::string name_, Matrix value_)
        : name(std::move(name_)), value(std::move(value_)), grad(Matrix::Zero(value.rows(), value.cols())) {}

    Eigen::Index size() const { return value.size(); }
    void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

/// Handle to a node on a Tape.
class Var {
  public:
    Var() = default;
    int id() const { return id_; }
    bool valid() const { return id_ >= 0; }

  private:
    explicit Var(int id) : id_(id) {}
    int id_ = -1;
    friend class Tape;
};

/// NaN/Inf screening of every recorded value.
enum class Checked : bool { kOff = false, kOn = true };

/// Reverse-mode gradient tape over 2-D row-major-by-convention tensors
/// (rows are batch entries). Nodes are appended in evaluation order, so the
/// tape itself is a topological order and backward is a single reverse scan.
///
/// Binary elementwise ops require equal shapes, except that either operand
/// may be 1x1 and is then broadcast.
class Tape {
  public:
    explicit Tape(Checked checked = Checked::kOn) : checked_(checked) {}

    Var constant(Matrix value);
    /// Differentiable leaf; read its gradient with grad() after backward().
    Var variable(Matrix value);
    /// Leaf bound to `p`; backward() adds into p.grad. `p` must outlive the tape.
    Var parameter(Parameter &p);

    /// input[b x n] * weight[m x n]^T + bias[1 x m]
    Var linear(Var input, Var weight, Var bias);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var scale(Var a, double s);
    Var sigmoid(Var a);
    Var tanh(Var a);
    Var arctan(Var a);
    Var square(Var a);
    Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
    Var concat_cols(Var a, Var b);
    /// out(r, 0) = a(r, cols[r])
    Var pick(Var a, std::vector<int> cols);
    /// 1x1 sum of all entries.
    Var sum(Var a);
    /// Row r of the result is the per-qubit <Z> of the circuit run on row r
    /// of `inputs`. `angles` is a 1 x num_parameters row.
    Var vqc(Var inputs, Var angles, const CircuitSpec &spec,
            GradientMethod method = GradientMethod::kAdjoint);

    const Matrix &value(Var v) const;
    const Matrix &grad(Var v) const;
    std::array<Eigen::Index, 2> shape(Var v) const;
    bool requires_grad(Var v) const;
    std::size_t size() const { return nodes_.size(); }

    /// Seeds d(root)/d(root) = 1 for a 1x1 root and propagates to every node
    /// recorded before it. Node gradients are reset on each call; parameter
    /// gradients accumulate.
    void backward(Var root);

  private:
    enum class Op {
        kConstant,
        kVariable,
        kParameter,
        kLinear,
        kAdd,
        kSub,
        kMul,
        kScale,
        kSigmoid,
        kTanh,
        kArctan,
        kSquare,
        kSliceCols,
        kConcatCols,
        kPick,
        kSum,
        kVqc,
    };

    struct Node {
        Op op = Op::kConstant;
        std::array<int, 3> in{-1, -1, -1};
        Matrix value;
        Matrix grad;
        bool requires_grad = false;
        Parameter *param = nullptr;
        double scalar = 0.0;
        Eigen::Index offset = 0;
        std::vector<int> indices;
        CircuitSpec spec;
        GradientMethod method = GradientMethod::kAdjoint;
    };

    const Node &node(Var v) const;
    Var push(Node n, const char *what);
    Var elementwise_binary(Op op, Var a, Var b, const char *what);
    void accumulate(int target, const Matrix &g);
    void backward_node(const Node &n);

    std::vector<Node> nodes_;
    Checked checked_;
};

} // namespace qdrqn
