#pragma once

#include "qdrqn/statevec.hpp"

#include <Eigen/Core>

#include <array>
#include <numbers>
#include <span>
#include <vector>

namespace qdrqn {

template <typename Scalar> using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Derivatives of a circuit's weighted Z readout, one slot per gate angle.
/// Unused slots (H, CNOT, the tail of RY/RZ) are zero.
template <typename Scalar> using AngleGradients = std::vector<std::array<Scalar, 3>>;

template <typename Scalar> StateVector<Scalar> run_circuit(int n_qubits, std::span<const Gate> gates) {
    auto state = StateVector<Scalar>::zero(n_qubits);
    for (const Gate &g : gates) {
        state.apply(g);
    }
    return state;
}

/// sum_k w_k <Z_k>
template <typename Scalar, typename Derived>
Scalar weighted_z(const StateVector<Scalar> &state, const Eigen::MatrixBase<Derived> &weights) {
    return state.expectation_z_all().dot(weights.derived().template cast<Scalar>());
}

namespace detail {

// <bra| P_q |ket> for P in {Y, Z}.
template <typename Scalar>
std::complex<Scalar> generator_overlap(const StateVector<Scalar> &bra, const StateVector<Scalar> &ket,
                                       GateKind axis, int q) {
    using C = std::complex<Scalar>;
    const auto &b = bra.amplitudes();
    const auto &k = ket.amplitudes();
    const Eigen::Index m = ket.mask(q);
    const C i(0, 1);
    C acc(0);
    for (Eigen::Index block = 0; block < k.size(); block += 2 * m) {
        for (Eigen::Index j = block; j < block + m; ++j) {
            if (axis == GateKind::RY) {
                acc += std::conj(b(j)) * (-i * k(j + m)) + std::conj(b(j + m)) * (i * k(j));
            } else {
                acc += std::conj(b(j)) * k(j) - std::conj(b(j + m)) * k(j + m);
            }
        }
    }
    return acc;
}

template <typename Scalar>
void unapply_rotation(StateVector<Scalar> &s, GateKind axis, int q, Scalar theta) {
    if (axis == GateKind::RY) {
        s.apply_ry(q, -theta);
    } else {
        s.apply_rz(q, -theta);
    }
}

} // namespace detail

/// Adjoint (reverse sweep) differentiation of sum_k w_k <Z_k> with respect to
/// every gate angle. `final_state` must be the circuit output; it is consumed.
template <typename Scalar, typename Derived>
AngleGradients<Scalar> adjoint_gradients(StateVector<Scalar> final_state, std::span<const Gate> gates,
                                         const Eigen::MatrixBase<Derived> &weights) {
    const int n = final_state.num_qubits();
    if (weights.size() != n) {
        throw std::invalid_argument("adjoint_gradients: weight count must equal qubit count");
    }
    StateVector<Scalar> &psi = final_state;
    StateVector<Scalar> lambda = psi;
    // lambda = O psi with O = sum_k w_k Z_k (diagonal).
    lambda.multiply_diagonal([&](Eigen::Index j) {
        Scalar d = 0;
        for (int q = 0; q < n; ++q) {
            d += (j & lambda.mask(q)) ? -Scalar(weights(q)) : Scalar(weights(q));
        }
        return d;
    });

    AngleGradients<Scalar> grads(gates.size(), {Scalar(0), Scalar(0), Scalar(0)});
    // d/dt <psi|U^dag O U|psi> for U = exp(-i t P / 2) is Im <lambda|P|psi>.
    auto rotation_grad = [&](GateKind axis, int q) {
        return detail::generator_overlap(lambda, psi, axis, q).imag();
    };

    for (std::size_t idx = gates.size(); idx-- > 0;) {
        const Gate &g = gates[idx];
        const int q = g.wires[0];
        switch (g.kind) {
        case GateKind::H:
            psi.apply_h(q);
            lambda.apply_h(q);
            break;
        case GateKind::CNOT:
            psi.apply_cnot(g.wires[0], g.wires[1]);
            lambda.apply_cnot(g.wires[0], g.wires[1]);
            break;
        case GateKind::RY:
        case GateKind::RZ: {
            const Scalar t = static_cast<Scalar>(g.angles[0]);
            grads[idx][0] = rotation_grad(g.kind, q);
            detail::unapply_rotation(psi, g.kind, q, t);
            detail::unapply_rotation(lambda, g.kind, q, t);
            break;
        }
        case GateKind::ROT: {
            // Factors in reverse application order: RZ(gamma), RY(beta), RZ(alpha).
            constexpr std::array<GateKind, 3> axes{GateKind::RZ, GateKind::RY, GateKind::RZ};
            for (int f = 2; f >= 0; --f) {
                const Scalar t = static_cast<Scalar>(g.angles[f]);
                grads[idx][f] = rotation_grad(axes[f], q);
                detail::unapply_rotation(psi, axes[f], q, t);
                detail::unapply_rotation(lambda, axes[f], q, t);
            }
            break;
        }
        }
    }
    return grads;
}

/// Parameter-shift rule: df/dt = [f(t + pi/2) - f(t - pi/2)] / 2 for every
/// rotation angle, including each factor of ROT.
template <typename Scalar, typename Derived>
AngleGradients<Scalar> parameter_shift_gradients(int n_qubits, std::span<const Gate> gates,
                                                 const Eigen::MatrixBase<Derived> &weights) {
    constexpr double shift = std::numbers::pi / 2;
    std::vector<Gate> shifted(gates.begin(), gates.end());
    AngleGradients<Scalar> grads(gates.size(), {Scalar(0), Scalar(0), Scalar(0)});
    for (std::size_t idx = 0; idx < gates.size(); ++idx) {
        for (int a = 0; a < gates[idx].num_angles(); ++a) {
            const double t = gates[idx].angles[a];
            shifted[idx].angles[a] = t + shift;
            const Scalar plus = weighted_z(run_circuit<Scalar>(n_qubits, shifted), weights);
            shifted[idx].angles[a] = t - shift;
            const Scalar minus = weighted_z(run_circuit<Scalar>(n_qubits, shifted), weights);
            shifted[idx].angles[a] = t;
            grads[idx][a] = (plus - minus) / 2;
        }
    }
    return grads;
}

} // namespace qdrqn
