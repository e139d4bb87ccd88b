#include "qdrqn/recurrent.hpp"

#include <cmath>
#include <stdexcept>

namespace qdrqn {

namespace {

Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, double bound, Rng &rng) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix m(rows, cols);
    for (Eigen::Index k = 0; k < m.size(); ++k) {
        m.data()[k] = dist(rng);
    }
    return m;
}

Matrix as_row(const Vector &v) { return v.transpose(); }

void check_dim(const char *what, Eigen::Index got, Eigen::Index want) {
    if (got != want) {
        throw std::invalid_argument(std::string(what) + ": expected dimension " + std::to_string(want) + ", got " +
                                    std::to_string(got));
    }
}

} // namespace

Linear::Linear(const std::string &name, int in, int out, Rng &rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    weight = Parameter(name + ".weight", uniform_matrix(out, in, bound, rng));
    bias = Parameter(name + ".bias", uniform_matrix(1, out, bound, rng));
}

// ---------------------------------------------------------------------------
// QLSTM

QlstmCell::QlstmCell(int input_size, int hidden_size, int n_qubits, int n_layers, Rng &rng,
                     GradientMethod method)
    : input_size_(input_size), hidden_size_(hidden_size), spec_{n_qubits, n_layers}, method_(method) {
    spec_.validate();
    if (input_size < 1 || hidden_size < 1 || input_size + hidden_size != n_qubits) {
        throw std::invalid_argument("QlstmCell: input_size + hidden_size must equal n_qubits");
    }
    for (int k = 0; k < 5; ++k) {
        auto p = VqcParams<double>::random(spec_, rng);
        vqc_[k] = Parameter("qlstm.vqc" + std::to_string(k + 1), as_row(p.angles));
    }
}

QlstmCell::Bound QlstmCell::bind(Tape &tape) {
    Bound b;
    for (int k = 0; k < 5; ++k) {
        b.angles[k] = tape.parameter(vqc_[k]);
    }
    return b;
}

QlstmCell::Bound QlstmCell::bind_frozen(Tape &tape) const {
    Bound b;
    for (int k = 0; k < 5; ++k) {
        b.angles[k] = tape.constant(vqc_[k].value);
    }
    return b;
}

CoreState QlstmCell::step(Tape &tape, const Bound &p, Var x, const CoreState &prev) const {
    check_dim("qlstm_step x", tape.shape(x)[1], input_size_);
    check_dim("qlstm_step h", tape.shape(prev.h)[1], hidden_size_);
    check_dim("qlstm_step c", tape.shape(prev.c)[1], cell_size());

    const Var v = tape.concat_cols(prev.h, x);
    const Var f = tape.sigmoid(tape.vqc(v, p.angles[0], spec_, method_));
    const Var i = tape.sigmoid(tape.vqc(v, p.angles[1], spec_, method_));
    const Var c_tilde = tape.tanh(tape.vqc(v, p.angles[2], spec_, method_));
    const Var c = tape.add(tape.mul(f, prev.c), tape.mul(i, c_tilde));
    const Var o = tape.sigmoid(tape.vqc(v, p.angles[3], spec_, method_));
    const Var h_full = tape.vqc(tape.mul(o, tape.tanh(c)), p.angles[4], spec_, method_);
    return {tape.slice_cols(h_full, 0, hidden_size_), c};
}

// ---------------------------------------------------------------------------
// LSTM

LstmCell::LstmCell(int input_size, int hidden_size, Rng &rng) {
    if (input_size < 1 || hidden_size < 1) {
        throw std::invalid_argument("LstmCell: sizes must be positive");
    }
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_size));
    w_ih = Parameter("lstm.w_ih", uniform_matrix(4 * hidden_size, input_size, bound, rng));
    w_hh = Parameter("lstm.w_hh", uniform_matrix(4 * hidden_size, hidden_size, bound, rng));
    b_ih = Parameter("lstm.b_ih", uniform_matrix(1, 4 * hidden_size, bound, rng));
    b_hh = Parameter("lstm.b_hh", uniform_matrix(1, 4 * hidden_size, bound, rng));
}

LstmCell::Bound LstmCell::bind(Tape &tape) {
    return {tape.parameter(w_ih), tape.parameter(w_hh), tape.parameter(b_ih), tape.parameter(b_hh)};
}

LstmCell::Bound LstmCell::bind_frozen(Tape &tape) const {
    return {tape.constant(w_ih.value), tape.constant(w_hh.value), tape.constant(b_ih.value),
            tape.constant(b_hh.value)};
}

CoreState LstmCell::step(Tape &tape, const Bound &p, Var x, const CoreState &prev) const {
    const int hs = hidden_size();
    check_dim("lstm_step x", tape.shape(x)[1], input_size());
    check_dim("lstm_step h", tape.shape(prev.h)[1], hs);
    check_dim("lstm_step c", tape.shape(prev.c)[1], hs);

    const Var gates = tape.add(tape.linear(x, p.w_ih, p.b_ih), tape.linear(prev.h, p.w_hh, p.b_hh));
    const Var i = tape.sigmoid(tape.slice_cols(gates, 0, hs));
    const Var f = tape.sigmoid(tape.slice_cols(gates, hs, hs));
    const Var g = tape.tanh(tape.slice_cols(gates, 2 * hs, hs));
    const Var o = tape.sigmoid(tape.slice_cols(gates, 3 * hs, hs));
    const Var c = tape.add(tape.mul(f, prev.c), tape.mul(i, g));
    return {tape.mul(o, tape.tanh(c)), c};
}

// ---------------------------------------------------------------------------
// Dressed model

ModelConfig ModelConfig::qlstm(int vqc_layers, int obs_dim) {
    ModelConfig c;
    c.core = CoreKind::kQlstm;
    c.obs_dim = obs_dim;
    c.hidden_size = 4;
    c.n_qubits = 8;
    c.vqc_layers = vqc_layers;
    return c;
}

ModelConfig ModelConfig::lstm(int hidden_size, int obs_dim) {
    ModelConfig c;
    c.core = CoreKind::kLstm;
    c.obs_dim = obs_dim;
    c.hidden_size = hidden_size;
    return c;
}

DressedModel::DressedModel(const ModelConfig &config, Rng &rng) : config_(config) {
    if (config.core == CoreKind::kQlstm) {
        const int core_input = config.n_qubits - config.hidden_size;
        pre_ = Linear("pre", config.obs_dim, core_input, rng);
        core_ = QlstmCell(core_input, config.hidden_size, config.n_qubits, config.vqc_layers, rng,
                          config.gradient_method);
    } else {
        pre_ = Linear("pre", config.obs_dim, config.hidden_size, rng);
        core_ = LstmCell(config.hidden_size, config.hidden_size, rng);
    }
    post_ = Linear("post", config.hidden_size, kNumActions, rng);
}

int DressedModel::hidden_size() const {
    return std::visit([](const auto &c) { return c.hidden_size(); }, core_);
}

int DressedModel::cell_size() const {
    return std::visit([](const auto &c) { return c.cell_size(); }, core_);
}

DressedModel::Bound DressedModel::bind(Tape &tape) {
    Bound b;
    b.pre = pre_.bind(tape);
    std::visit([&](auto &c) { b.core = c.bind(tape); }, core_);
    b.post = post_.bind(tape);
    return b;
}

DressedModel::Bound DressedModel::bind_frozen(Tape &tape) const {
    Bound b;
    b.pre = pre_.bind_frozen(tape);
    std::visit([&](const auto &c) { b.core = c.bind_frozen(tape); }, core_);
    b.post = post_.bind_frozen(tape);
    return b;
}

CoreState DressedModel::zero_state(Tape &tape, Eigen::Index batch) const {
    return {tape.constant(Matrix::Zero(batch, hidden_size())), tape.constant(Matrix::Zero(batch, cell_size()))};
}

Var DressedModel::step(Tape &tape, const Bound &p, Var obs, CoreState &state) const {
    check_dim("DressedModel::step observation", tape.shape(obs)[1], obs_dim());
    const Var x = tape.linear(obs, p.pre.weight, p.pre.bias);
    if (const auto *q = std::get_if<QlstmCell>(&core_)) {
        state = q->step(tape, std::get<QlstmCell::Bound>(p.core), x, state);
    } else {
        state = std::get<LstmCell>(core_).step(tape, std::get<LstmCell::Bound>(p.core), x, state);
    }
    return tape.linear(state.h, p.post.weight, p.post.bias);
}

std::vector<Var> DressedModel::forward_sequence(Tape &tape, const Bound &p,
                                                std::span<const Var> observations) const {
    std::vector<Var> out;
    if (observations.empty()) {
        return out;
    }
    out.reserve(observations.size());
    CoreState state = zero_state(tape, tape.shape(observations.front())[0]);
    for (const Var &obs : observations) {
        out.push_back(step(tape, p, obs, state));
    }
    return out;
}

std::vector<Parameter *> DressedModel::parameters() {
    std::vector<Parameter *> out{&pre_.weight, &pre_.bias};
    if (auto *q = std::get_if<QlstmCell>(&core_)) {
        for (auto &p : q->circuits()) {
            out.push_back(&p);
        }
    } else {
        auto &l = std::get<LstmCell>(core_);
        out.insert(out.end(), {&l.w_ih, &l.w_hh, &l.b_ih, &l.b_hh});
    }
    out.insert(out.end(), {&post_.weight, &post_.bias});
    return out;
}

std::vector<const Parameter *> DressedModel::parameters() const {
    auto mutable_params = const_cast<DressedModel *>(this)->parameters();
    return {mutable_params.begin(), mutable_params.end()};
}

std::size_t count_parameters(const DressedModel &model) {
    std::size_t total = 0;
    for (const Parameter *p : model.parameters()) {
        total += static_cast<std::size_t>(p->size());
    }
    return total;
}

// ---------------------------------------------------------------------------
// Tape-free helpers

std::pair<Vector, Vector> qlstm_step(const QlstmCell &cell, const Vector &x, const Vector &h_prev,
                                     const Vector &c_prev) {
    Tape tape;
    const auto p = cell.bind_frozen(tape);
    const CoreState prev{tape.constant(as_row(h_prev)), tape.constant(as_row(c_prev))};
    const CoreState next = cell.step(tape, p, tape.constant(as_row(x)), prev);
    return {tape.value(next.h).row(0).transpose(), tape.value(next.c).row(0).transpose()};
}

std::pair<Vector, Vector> lstm_step(const LstmCell &cell, const Vector &x, const Vector &h_prev,
                                    const Vector &c_prev) {
    Tape tape;
    const auto p = cell.bind_frozen(tape);
    const CoreState prev{tape.constant(as_row(h_prev)), tape.constant(as_row(c_prev))};
    const CoreState next = cell.step(tape, p, tape.constant(as_row(x)), prev);
    return {tape.value(next.h).row(0).transpose(), tape.value(next.c).row(0).transpose()};
}

std::vector<Vector> forward_sequence(const DressedModel &model, std::span<const Vector> observations) {
    Tape tape;
    const auto p = model.bind_frozen(tape);
    std::vector<Var> obs;
    obs.reserve(observations.size());
    for (const Vector &o : observations) {
        obs.push_back(tape.constant(as_row(o)));
    }
    std::vector<Vector> out;
    for (const Var &q : model.forward_sequence(tape, p, obs)) {
        out.push_back(tape.value(q).row(0).transpose());
    }
    return out;
}

} // namespace qdrqn
