#pragma once

#include "qdrqn/autograd.hpp"
#include "qdrqn/vqc.hpp"

#include <array>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace qdrqn {

using Rng = std::mt19937_64;

/// Recurrent state on a tape: h is [b x hidden], c is [b x cell].
struct CoreState {
    Var h;
    Var c;
};

/// Dense layer y = x W^T + b, initialised uniform in +-1/sqrt(fan_in).
struct Linear {
    Parameter weight; // out x in
    Parameter bias;   // 1 x out

    Linear() = default;
    Linear(const std::string &name, int in, int out, Rng &rng);

    int in_features() const { return static_cast<int>(weight.value.cols()); }
    int out_features() const { return static_cast<int>(weight.value.rows()); }

    struct Bound {
        Var weight, bias;
    };
    Bound bind(Tape &tape) { return {tape.parameter(weight), tape.parameter(bias)}; }
    Bound bind_frozen(Tape &tape) const { return {tape.constant(weight.value), tape.constant(bias.value)}; }
};

/// LSTM cell whose four internal networks are variational circuits. The
/// circuits read v = [h_prev, x] and return all n_qubits expectations; the
/// new hidden state is the first `hidden_size` readouts of the fifth circuit.
class QlstmCell {
  public:
    QlstmCell() = default;
    QlstmCell(int input_size, int hidden_size, int n_qubits, int n_layers, Rng &rng,
              GradientMethod method = GradientMethod::kAdjoint);

    int input_size() const { return input_size_; }
    int hidden_size() const { return hidden_size_; }
    int cell_size() const { return spec_.n_qubits; }
    const CircuitSpec &circuit() const { return spec_; }
    GradientMethod gradient_method() const { return method_; }
    void set_gradient_method(GradientMethod m) { method_ = m; }

    std::array<Parameter, 5> &circuits() { return vqc_; }
    const std::array<Parameter, 5> &circuits() const { return vqc_; }

    struct Bound {
        std::array<Var, 5> angles;
    };
    Bound bind(Tape &tape);
    Bound bind_frozen(Tape &tape) const;
    CoreState step(Tape &tape, const Bound &p, Var x, const CoreState &prev) const;

  private:
    int input_size_ = 4;
    int hidden_size_ = 4;
    CircuitSpec spec_{8, 1};
    GradientMethod method_ = GradientMethod::kAdjoint;
    std::array<Parameter, 5> vqc_;
};

/// Four-gate LSTM (gate order i, f, g, o) with separate input and recurrent
/// biases.
class LstmCell {
  public:
    LstmCell() = default;
    LstmCell(int input_size, int hidden_size, Rng &rng);

    int input_size() const { return static_cast<int>(w_ih.value.cols()); }
    int hidden_size() const { return static_cast<int>(w_hh.value.cols()); }
    int cell_size() const { return hidden_size(); }

    Parameter w_ih; // 4H x I
    Parameter w_hh; // 4H x H
    Parameter b_ih; // 1 x 4H
    Parameter b_hh; // 1 x 4H

    struct Bound {
        Var w_ih, w_hh, b_ih, b_hh;
    };
    Bound bind(Tape &tape);
    Bound bind_frozen(Tape &tape) const;
    CoreState step(Tape &tape, const Bound &p, Var x, const CoreState &prev) const;
};

enum class CoreKind { kQlstm, kLstm };

struct ModelConfig {
    CoreKind core = CoreKind::kQlstm;
    int obs_dim = 4;
    int hidden_size = 4;
    /// QLSTM only.
    int n_qubits = 8;
    int vqc_layers = 1;
    GradientMethod gradient_method = GradientMethod::kAdjoint;

    /// Eight-qubit QLSTM with input and hidden size 4.
    static ModelConfig qlstm(int vqc_layers, int obs_dim);
    /// LSTM whose input size equals its hidden size.
    static ModelConfig lstm(int hidden_size, int obs_dim);
};

/// Classical pre-layer, recurrent core, classical post-layer emitting two
/// Q-values per step.
class DressedModel {
  public:
    static constexpr int kNumActions = 2;

    DressedModel() = default;
    DressedModel(const ModelConfig &config, Rng &rng);

    const ModelConfig &config() const { return config_; }
    int obs_dim() const { return pre_.in_features(); }
    int hidden_size() const;
    int cell_size() const;

    struct Bound {
        Linear::Bound pre, post;
        std::variant<QlstmCell::Bound, LstmCell::Bound> core;
    };
    /// Parameters as differentiable leaves.
    Bound bind(Tape &tape);
    /// Parameters as constants: no gradient bookkeeping.
    Bound bind_frozen(Tape &tape) const;

    CoreState zero_state(Tape &tape, Eigen::Index batch) const;
    /// One step for a [batch x obs_dim] observation; advances `state` and
    /// returns [batch x 2] Q-values.
    Var step(Tape &tape, const Bound &p, Var obs, CoreState &state) const;
    /// Runs from a zero state over the sequence, one Q node per step.
    std::vector<Var> forward_sequence(Tape &tape, const Bound &p, std::span<const Var> observations) const;

    std::vector<Parameter *> parameters();
    std::vector<const Parameter *> parameters() const;

    Linear &pre() { return pre_; }
    Linear &post() { return post_; }
    std::variant<QlstmCell, LstmCell> &core() { return core_; }
    const std::variant<QlstmCell, LstmCell> &core() const { return core_; }

  private:
    ModelConfig config_;
    Linear pre_;
    std::variant<QlstmCell, LstmCell> core_;
    Linear post_;
};

std::size_t count_parameters(const DressedModel &model);

/// Tape-free evaluations of single cell steps, returning (h_t, c_t).
std::pair<Vector, Vector> qlstm_step(const QlstmCell &cell, const Vector &x, const Vector &h_prev,
                                     const Vector &c_prev);
std::pair<Vector, Vector> lstm_step(const LstmCell &cell, const Vector &x, const Vector &h_prev,
                                    const Vector &c_prev);

/// Q-values for each observation of a single sequence, starting from zeros.
std::vector<Vector> forward_sequence(const DressedModel &model, std::span<const Vector> observations);

} // namespace qdrqn
