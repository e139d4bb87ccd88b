#pragma once

// Test-only reference computations. Nothing here calls the stride kernels,
// the tape, or the circuit builder; expected values come from explicit
// matrices and scalar formulas.

#include "qdrqn/statevec.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <array>
#include <functional>
#include <utility>
#include <vector>

namespace oracle {

using C = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline Eigen::Matrix2cd ry(double t) {
    Eigen::Matrix2cd m;
    m << std::cos(t / 2), -std::sin(t / 2), std::sin(t / 2), std::cos(t / 2);
    return m;
}

inline Eigen::Matrix2cd rz(double t) {
    Eigen::Matrix2cd m;
    m << std::polar(1.0, -t / 2), 0, 0, std::polar(1.0, t / 2);
    return m;
}

inline Eigen::Matrix2cd hadamard() {
    Eigen::Matrix2cd m;
    const double r = 1.0 / std::sqrt(2.0);
    m << r, r, r, -r;
    return m;
}

inline CMatrix kron(const CMatrix &a, const CMatrix &b) {
    CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

/// Single-qubit operator on wire q of n, qubit 0 leftmost in the tensor product.
inline CMatrix embed(const Eigen::Matrix2cd &u, int q, int n) {
    CMatrix out = CMatrix::Identity(1, 1);
    for (int w = 0; w < n; ++w) {
        out = kron(out, w == q ? CMatrix(u) : CMatrix(CMatrix::Identity(2, 2)));
    }
    return out;
}

/// CNOT as a permutation of basis states, built bit by bit.
inline CMatrix cnot(int control, int target, int n) {
    const int dim = 1 << n;
    CMatrix out = CMatrix::Zero(dim, dim);
    for (int col = 0; col < dim; ++col) {
        std::vector<int> bits(n);
        for (int w = 0; w < n; ++w) {
            bits[w] = (col >> (n - 1 - w)) & 1;
        }
        if (bits[control]) {
            bits[target] ^= 1;
        }
        int row = 0;
        for (int w = 0; w < n; ++w) {
            row = (row << 1) | bits[w];
        }
        out(row, col) = 1;
    }
    return out;
}

inline CMatrix gate_matrix(const qdrqn::Gate &g, int n) {
    using qdrqn::GateKind;
    switch (g.kind) {
    case GateKind::H:
        return embed(hadamard(), g.wires[0], n);
    case GateKind::RY:
        return embed(ry(g.angles[0]), g.wires[0], n);
    case GateKind::RZ:
        return embed(rz(g.angles[0]), g.wires[0], n);
    case GateKind::ROT:
        return embed(rz(g.angles[2]) * ry(g.angles[1]) * rz(g.angles[0]), g.wires[0], n);
    case GateKind::CNOT:
        return cnot(g.wires[0], g.wires[1], n);
    }
    return {};
}

inline CVector zero_state(int n) {
    CVector v = CVector::Zero(1 << n);
    v(0) = 1;
    return v;
}

inline double expectation_z(const CVector &psi, int q, int n) {
    double acc = 0;
    for (Eigen::Index k = 0; k < psi.size(); ++k) {
        const int bit = (k >> (n - 1 - q)) & 1;
        acc += (bit ? -1.0 : 1.0) * std::norm(psi(k));
    }
    return acc;
}

/// The recurrent-core circuit for n in {1, 2} assembled by hand: H column,
/// arctan encodings, one stride-1 ring (n = 2 only), then ROT per qubit.
inline Eigen::VectorXd small_vqc(const Eigen::VectorXd &x, const Eigen::VectorXd &angles) {
    const int n = static_cast<int>(x.size());
    CVector psi = zero_state(n);
    for (int q = 0; q < n; ++q) {
        psi = embed(hadamard(), q, n) * psi;
    }
    for (int q = 0; q < n; ++q) {
        psi = embed(ry(std::atan(x(q))), q, n) * psi;
        psi = embed(rz(std::atan(x(q) * x(q))), q, n) * psi;
    }
    const int layers = static_cast<int>(angles.size()) / (3 * n);
    for (int l = 0; l < layers; ++l) {
        if (n == 2) {
            psi = cnot(0, 1, 2) * psi;
            psi = cnot(1, 0, 2) * psi;
        }
        for (int q = 0; q < n; ++q) {
            const int k = 3 * (l * n + q);
            psi = embed(rz(angles(k + 2)) * ry(angles(k + 1)) * rz(angles(k)), q, n) * psi;
        }
    }
    Eigen::VectorXd out(n);
    for (int q = 0; q < n; ++q) {
        out(q) = expectation_z(psi, q, n);
    }
    return out;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// One quantum-LSTM step on two qubits (one input, one hidden unit), each
/// block evaluated with small_vqc. Returns (h, c) with c of length 2.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> small_qlstm(const std::array<Eigen::VectorXd, 5> &angles, double x,
                                                               double h_prev, const Eigen::VectorXd &c_prev) {
    Eigen::VectorXd v(2);
    v << h_prev, x;
    Eigen::VectorXd c(2), pre(2);
    for (int k = 0; k < 2; ++k) {
        const double f = sigmoid(small_vqc(v, angles[0])(k));
        const double i = sigmoid(small_vqc(v, angles[1])(k));
        const double g = std::tanh(small_vqc(v, angles[2])(k));
        const double o = sigmoid(small_vqc(v, angles[3])(k));
        c(k) = f * c_prev(k) + i * g;
        pre(k) = o * std::tanh(c(k));
    }
    Eigen::VectorXd h(1);
    h(0) = small_vqc(pre, angles[4])(0);
    return {h, c};
}

/// Central finite difference of a scalar function of a vector.
inline Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd &)> &f,
                                          Eigen::VectorXd x, double step = 1e-4) {
    Eigen::VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double keep = x(i);
        x(i) = keep + step;
        const double plus = f(x);
        x(i) = keep - step;
        const double minus = f(x);
        x(i) = keep;
        g(i) = (plus - minus) / (2 * step);
    }
    return g;
}

/// |a - b| <= rel * max(|a|, |b|), or both within the absolute floor.
inline bool close_rel(double a, double b, double rel, double abs_floor) {
    const double diff = std::abs(a - b);
    return diff <= abs_floor || diff <= rel * std::max(std::abs(a), std::abs(b));
}

} // namespace oracle
