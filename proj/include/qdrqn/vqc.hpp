#pragma once

#include "qdrqn/circuit_gradients.hpp"
#include "qdrqn/statevec.hpp"

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace qdrqn {

/// Shape of the variational circuit: encoding once, then `n_layers` repeats
/// of (stride-1 CNOT ring, stride-2 CNOT ring, ROT on every qubit).
struct CircuitSpec {
    int n_qubits = 4;
    int n_layers = 1;

    int num_parameters() const { return 3 * n_qubits * n_layers; }

    void validate() const {
        if (n_qubits < 1 || n_qubits > kMaxQubits) {
            throw std::invalid_argument("CircuitSpec: n_qubits out of range: " + std::to_string(n_qubits));
        }
        if (n_layers < 1) {
            throw std::invalid_argument("CircuitSpec: n_layers must be >= 1");
        }
    }

    friend bool operator==(const CircuitSpec &, const CircuitSpec &) = default;
};

/// Trainable angles laid out as [layer][qubit][alpha, beta, gamma].
template <typename Scalar> struct VqcParams {
    VectorX<Scalar> angles;

    static VqcParams zeros(const CircuitSpec &spec) {
        return {VectorX<Scalar>::Zero(spec.num_parameters())};
    }

    /// Uniform in [-pi/2, pi/2].
    template <typename Rng> static VqcParams random(const CircuitSpec &spec, Rng &rng) {
        std::uniform_real_distribution<double> dist(-std::numbers::pi / 2, std::numbers::pi / 2);
        VqcParams p{VectorX<Scalar>(spec.num_parameters())};
        for (Eigen::Index k = 0; k < p.angles.size(); ++k) {
            p.angles(k) = static_cast<Scalar>(dist(rng));
        }
        return p;
    }

    Scalar &angle(int layer, int qubit, int which, const CircuitSpec &spec) {
        return angles(3 * (layer * spec.n_qubits + qubit) + which);
    }
};

/// Number of CNOTs in one entangling layer. A ring whose stride is a multiple
/// of n would be self-loops and is skipped.
inline int cnots_per_layer(int n_qubits) {
    int count = 0;
    for (int stride : {1, 2}) {
        if (stride % n_qubits != 0) {
            count += n_qubits;
        }
    }
    return count;
}

inline int circuit_gate_count(const CircuitSpec &spec) {
    return 3 * spec.n_qubits + spec.n_layers * (cnots_per_layer(spec.n_qubits) + spec.n_qubits);
}

template <typename DerivedX, typename DerivedP>
std::vector<Gate> build_circuit(const CircuitSpec &spec, const Eigen::MatrixBase<DerivedX> &input,
                                const Eigen::MatrixBase<DerivedP> &angles) {
    spec.validate();
    const int n = spec.n_qubits;
    if (input.size() != n) {
        throw std::invalid_argument("build_circuit: input length " + std::to_string(input.size()) +
                                    " does not match " + std::to_string(n) + " qubits");
    }
    if (angles.size() != spec.num_parameters()) {
        throw std::invalid_argument("build_circuit: expected " + std::to_string(spec.num_parameters()) +
                                    " angles, got " + std::to_string(angles.size()));
    }

    std::vector<Gate> gates;
    gates.reserve(circuit_gate_count(spec));
    for (int q = 0; q < n; ++q) {
        gates.push_back(Gate::h(q));
    }
    for (int q = 0; q < n; ++q) {
        const double x = static_cast<double>(input(q));
        gates.push_back(Gate::ry(q, std::atan(x)));
        gates.push_back(Gate::rz(q, std::atan(x * x)));
    }
    for (int layer = 0; layer < spec.n_layers; ++layer) {
        for (int stride : {1, 2}) {
            if (stride % n == 0) {
                continue;
            }
            for (int q = 0; q < n; ++q) {
                gates.push_back(Gate::cnot(q, (q + stride) % n));
            }
        }
        for (int q = 0; q < n; ++q) {
            const Eigen::Index k = 3 * (layer * n + q);
            gates.push_back(Gate::rot(q, static_cast<double>(angles(k)), static_cast<double>(angles(k + 1)),
                                      static_cast<double>(angles(k + 2))));
        }
    }
    return gates;
}

/// Per-qubit <Z> of the circuit applied to |0...0>.
template <typename Scalar = double, typename DerivedX, typename DerivedP>
VectorX<Scalar> run_vqc(const CircuitSpec &spec, const Eigen::MatrixBase<DerivedX> &input,
                        const Eigen::MatrixBase<DerivedP> &angles) {
    const auto gates = build_circuit(spec, input, angles);
    return run_circuit<Scalar>(spec.n_qubits, gates).expectation_z_all();
}

enum class GradientMethod { kAdjoint, kParameterShift };

template <typename Scalar> struct VqcGradient {
    VectorX<Scalar> outputs;
    VectorX<Scalar> d_input;
    VectorX<Scalar> d_angles;
};

/// Gradient of sum_k weights_k <Z_k> with respect to the circuit inputs and
/// trainable angles. Input gradients chain through the arctan(x) and
/// arctan(x^2) encodings.
template <typename Scalar = double, typename DerivedX, typename DerivedP, typename DerivedW>
VqcGradient<Scalar> vqc_gradient(const CircuitSpec &spec, const Eigen::MatrixBase<DerivedX> &input,
                                 const Eigen::MatrixBase<DerivedP> &angles,
                                 const Eigen::MatrixBase<DerivedW> &weights,
                                 GradientMethod method = GradientMethod::kAdjoint) {
    const int n = spec.n_qubits;
    const auto gates = build_circuit(spec, input, angles);
    auto state = run_circuit<Scalar>(n, gates);

    VqcGradient<Scalar> out;
    out.outputs = state.expectation_z_all();
    const AngleGradients<Scalar> g = method == GradientMethod::kAdjoint
                                         ? adjoint_gradients(std::move(state), gates, weights)
                                         : parameter_shift_gradients<Scalar>(n, gates, weights);

    out.d_input.resize(n);
    for (int q = 0; q < n; ++q) {
        const Scalar x = static_cast<Scalar>(input(q));
        const Scalar d_ry = g[n + 2 * q][0];
        const Scalar d_rz = g[n + 2 * q + 1][0];
        out.d_input(q) = d_ry / (1 + x * x) + d_rz * 2 * x / (1 + x * x * x * x);
    }

    out.d_angles.resize(spec.num_parameters());
    Eigen::Index k = 0;
    for (std::size_t idx = 3 * n; idx < gates.size(); ++idx) {
        if (gates[idx].kind != GateKind::ROT) {
            continue;
        }
        for (int a = 0; a < 3; ++a) {
            out.d_angles(k++) = g[idx][a];
        }
    }
    return out;
}

/// Text diagram of a gate sequence, one row per wire. Debugging aid only.
std::string draw_circuit(int n_qubits, const std::vector<Gate> &gates);

} // namespace qdrqn
