#pragma once

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace qdrqn {

/// Largest register the simulator will allocate (2^20 amplitudes).
inline constexpr int kMaxQubits = 20;

enum class GateKind { H, RY, RZ, CNOT, ROT };

/// A gate of the circuit family used by the recurrent cores.
///
/// Single-qubit gates act on `wires[0]`. CNOT uses `wires[0]` as control and
/// `wires[1]` as target. Rotation conventions: RY(t) = exp(-i t Y / 2),
/// RZ(t) = exp(-i t Z / 2), ROT(a, b, c) = RZ(c) RY(b) RZ(a) with `a` applied
/// first.
struct Gate {
    GateKind kind = GateKind::H;
    std::array<int, 2> wires{0, -1};
    std::array<double, 3> angles{0.0, 0.0, 0.0};

    static Gate h(int q) { return {GateKind::H, {q, -1}, {}}; }
    static Gate ry(int q, double theta) { return {GateKind::RY, {q, -1}, {theta, 0.0, 0.0}}; }
    static Gate rz(int q, double theta) { return {GateKind::RZ, {q, -1}, {theta, 0.0, 0.0}}; }
    static Gate cnot(int control, int target) { return {GateKind::CNOT, {control, target}, {}}; }
    static Gate rot(int q, double alpha, double beta, double gamma) {
        return {GateKind::ROT, {q, -1}, {alpha, beta, gamma}};
    }

    int num_angles() const {
        switch (kind) {
        case GateKind::RY:
        case GateKind::RZ:
            return 1;
        case GateKind::ROT:
            return 3;
        default:
            return 0;
        }
    }

    int num_wires() const { return kind == GateKind::CNOT ? 2 : 1; }
};

/// Inverse gate: negated angles, and for ROT the factor order reversed.
inline Gate inverse(const Gate &g) {
    switch (g.kind) {
    case GateKind::RY:
    case GateKind::RZ:
        return {g.kind, g.wires, {-g.angles[0], 0.0, 0.0}};
    case GateKind::ROT:
        // (RZ(c) RY(b) RZ(a))^-1 = RZ(-a) RY(-b) RZ(-c) = ROT(-c, -b, -a)
        return Gate::rot(g.wires[0], -g.angles[2], -g.angles[1], -g.angles[0]);
    default:
        return g;
    }
}

inline std::string gate_name(GateKind kind) {
    switch (kind) {
    case GateKind::H:
        return "H";
    case GateKind::RY:
        return "RY";
    case GateKind::RZ:
        return "RZ";
    case GateKind::CNOT:
        return "CNOT";
    case GateKind::ROT:
        return "ROT";
    }
    return "?";
}

/// Dense n-qubit register. Qubit 0 is the most significant bit of the
/// amplitude index.
template <typename Scalar> class StateVector {
  public:
    using Complex = std::complex<Scalar>;
    using Amplitudes = Eigen::Matrix<Complex, Eigen::Dynamic, 1>;

    static StateVector zero(int n_qubits) {
        if (n_qubits < 1 || n_qubits > kMaxQubits) {
            throw std::invalid_argument("zero_state: n_qubits must be in [1, " +
                                        std::to_string(kMaxQubits) + "], got " +
                                        std::to_string(n_qubits));
        }
        StateVector s;
        s.n_qubits_ = n_qubits;
        s.amps_ = Amplitudes::Zero(Eigen::Index{1} << n_qubits);
        s.amps_(0) = Complex(1);
        return s;
    }

    int num_qubits() const { return n_qubits_; }
    Eigen::Index dim() const { return amps_.size(); }
    const Amplitudes &amplitudes() const { return amps_; }

    /// Bit mask of qubit `q` within an amplitude index.
    Eigen::Index mask(int q) const { return Eigen::Index{1} << (n_qubits_ - 1 - q); }

    void apply(const Gate &g) {
        check_wires(g);
        switch (g.kind) {
        case GateKind::H:
            apply_h(g.wires[0]);
            break;
        case GateKind::RY:
            apply_ry(g.wires[0], static_cast<Scalar>(g.angles[0]));
            break;
        case GateKind::RZ:
            apply_rz(g.wires[0], static_cast<Scalar>(g.angles[0]));
            break;
        case GateKind::CNOT:
            apply_cnot(g.wires[0], g.wires[1]);
            break;
        case GateKind::ROT:
            apply_rz(g.wires[0], static_cast<Scalar>(g.angles[0]));
            apply_ry(g.wires[0], static_cast<Scalar>(g.angles[1]));
            apply_rz(g.wires[0], static_cast<Scalar>(g.angles[2]));
            break;
        }
    }

    void apply_h(int q) {
        const Scalar r = Scalar(1) / std::sqrt(Scalar(2));
        for_each_pair(q, [r](Complex &a0, Complex &a1) {
            const Complex t0 = a0;
            a0 = r * (t0 + a1);
            a1 = r * (t0 - a1);
        });
    }

    void apply_ry(int q, Scalar theta) {
        const Scalar c = std::cos(theta / 2);
        const Scalar s = std::sin(theta / 2);
        for_each_pair(q, [c, s](Complex &a0, Complex &a1) {
            const Complex t0 = a0;
            a0 = c * t0 - s * a1;
            a1 = s * t0 + c * a1;
        });
    }

    void apply_rz(int q, Scalar theta) {
        const Complex p0 = std::polar(Scalar(1), -theta / 2);
        const Complex p1 = std::conj(p0);
        for_each_pair(q, [p0, p1](Complex &a0, Complex &a1) {
            a0 *= p0;
            a1 *= p1;
        });
    }

    void apply_cnot(int control, int target) {
        check_qubit(control);
        check_qubit(target);
        const Eigen::Index cm = mask(control);
        const Eigen::Index tm = mask(target);
        for (Eigen::Index k = 0; k < amps_.size(); ++k) {
            if ((k & cm) && !(k & tm)) {
                std::swap(amps_(k), amps_(k | tm));
            }
        }
    }

    /// Apply the Pauli generator of a rotation (Y or Z) without the rotation.
    void apply_pauli_y(int q) {
        const Complex i(0, 1);
        for_each_pair(q, [i](Complex &a0, Complex &a1) {
            const Complex t0 = a0;
            a0 = -i * a1;
            a1 = i * t0;
        });
    }

    void apply_pauli_z(int q) {
        for_each_pair(q, [](Complex &, Complex &a1) { a1 = -a1; });
    }

    /// Multiply amplitude k by `diag(k)`. Only norm-preserving when |diag| = 1;
    /// used to apply observables in adjoint sweeps.
    template <typename F> void multiply_diagonal(F &&diag) {
        for (Eigen::Index k = 0; k < amps_.size(); ++k) {
            amps_(k) *= diag(k);
        }
    }

    /// Pauli-Z expectation of qubit `q`.
    Scalar expectation_z(int q) const {
        check_qubit(q);
        const Eigen::Index m = mask(q);
        Scalar acc = 0;
        for (Eigen::Index k = 0; k < amps_.size(); ++k) {
            const Scalar p = std::norm(amps_(k));
            acc += (k & m) ? -p : p;
        }
        return acc;
    }

    /// All per-qubit Pauli-Z expectations in one pass over the amplitudes.
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> expectation_z_all() const {
        Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out =
            Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(n_qubits_);
        for (Eigen::Index k = 0; k < amps_.size(); ++k) {
            const Scalar p = std::norm(amps_(k));
            for (int q = 0; q < n_qubits_; ++q) {
                out(q) += (k & mask(q)) ? -p : p;
            }
        }
        return out;
    }

    Scalar norm() const { return amps_.norm(); }

    void check_qubit(int q) const {
        if (q < 0 || q >= n_qubits_) {
            throw std::out_of_range("qubit index " + std::to_string(q) +
                                    " out of range for " + std::to_string(n_qubits_) +
                                    "-qubit register");
        }
    }

    void check_wires(const Gate &g) const {
        check_qubit(g.wires[0]);
        if (g.kind == GateKind::CNOT) {
            check_qubit(g.wires[1]);
            if (g.wires[0] == g.wires[1]) {
                throw std::invalid_argument("CNOT control equals target (qubit " +
                                            std::to_string(g.wires[0]) + ")");
            }
        }
    }

  private:
    // Visits every amplitude pair (|..0..>, |..1..>) of qubit q.
    template <typename F> void for_each_pair(int q, F &&f) {
        check_qubit(q);
        const Eigen::Index m = mask(q);
        const Eigen::Index n = amps_.size();
        for (Eigen::Index block = 0; block < n; block += 2 * m) {
            for (Eigen::Index k = block; k < block + m; ++k) {
                f(amps_(k), amps_(k + m));
            }
        }
    }

    int n_qubits_ = 0;
    Amplitudes amps_;
};

using StateVectorD = StateVector<double>;

template <typename Scalar> StateVector<Scalar> zero_state(int n_qubits) {
    return StateVector<Scalar>::zero(n_qubits);
}

/// Value-semantics gate application.
template <typename Scalar> StateVector<Scalar> apply_gate(StateVector<Scalar> state, const Gate &g) {
    state.apply(g);
    return state;
}

template <typename Scalar> Scalar expectation_z(const StateVector<Scalar> &state, int qubit) {
    return state.expectation_z(qubit);
}

} // namespace qdrqn
