#include "qdrqn/vqc.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace qdrqn {

std::string draw_circuit(int n_qubits, const std::vector<Gate> &gates) {
    std::vector<std::string> rows(n_qubits);
    for (int q = 0; q < n_qubits; ++q) {
        rows[q] = "q" + std::to_string(q) + ": ";
    }
    char buf[64];
    for (const Gate &g : gates) {
        std::vector<std::string> cell(n_qubits);
        switch (g.kind) {
        case GateKind::H:
            cell[g.wires[0]] = "H";
            break;
        case GateKind::RY:
        case GateKind::RZ:
            std::snprintf(buf, sizeof buf, "%s(%.3f)", gate_name(g.kind).c_str(), g.angles[0]);
            cell[g.wires[0]] = buf;
            break;
        case GateKind::ROT:
            std::snprintf(buf, sizeof buf, "R(%.3f,%.3f,%.3f)", g.angles[0], g.angles[1], g.angles[2]);
            cell[g.wires[0]] = buf;
            break;
        case GateKind::CNOT: {
            const int lo = std::min(g.wires[0], g.wires[1]);
            const int hi = std::max(g.wires[0], g.wires[1]);
            for (int q = lo + 1; q < hi; ++q) {
                cell[q] = "|";
            }
            cell[g.wires[0]] = "*";
            cell[g.wires[1]] = "X";
            break;
        }
        }
        std::size_t width = 1;
        for (const auto &c : cell) {
            width = std::max(width, c.size());
        }
        for (int q = 0; q < n_qubits; ++q) {
            std::string c = cell[q].empty() ? std::string(width, '-') : cell[q];
            c.resize(width, '-');
            rows[q] += "-" + c + "-";
        }
    }
    std::ostringstream out;
    for (const auto &r : rows) {
        out << r << "-M\n";
    }
    return out.str();
}

} // namespace qdrqn
