#pragma once

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "vqkan/qsim.hpp"

namespace vqkan {

enum class Axis : std::uint8_t { X, Y, Z };

inline char axis_letter(Axis a) { return a == Axis::X ? 'X' : (a == Axis::Y ? 'Y' : 'Z'); }

/// Tensor product of single-qubit Pauli operators on a subset of qubits,
/// stored as (qubit, axis) factors ordered by qubit index.
class PauliString {
public:
    PauliString(std::initializer_list<std::pair<int, Axis>> factors)
        : PauliString(std::vector<std::pair<int, Axis>>(factors)) {}

    explicit PauliString(std::vector<std::pair<int, Axis>> factors)
        : factors_(std::move(factors)) {
        if (factors_.empty()) throw std::invalid_argument("PauliString: empty factor list");
        std::sort(factors_.begin(), factors_.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        for (std::size_t i = 0; i < factors_.size(); ++i) {
            if (factors_[i].first < 0)
                throw std::invalid_argument("PauliString: negative qubit index");
            if (i > 0 && factors_[i].first == factors_[i - 1].first)
                throw std::invalid_argument("PauliString: repeated qubit");
        }
    }

    const std::vector<std::pair<int, Axis>>& factors() const { return factors_; }
    std::size_t weight() const { return factors_.size(); }
    int max_qubit() const { return factors_.back().first; }

    /// Canonical text form, e.g. "X0*Y3*Z4".
    std::string to_string() const {
        std::string s;
        for (const auto& [q, a] : factors_) {
            if (!s.empty()) s += '*';
            s += axis_letter(a);
            s += std::to_string(q);
        }
        return s;
    }

    /// Parses the canonical text form; throws on malformed input.
    static PauliString parse(const std::string& text) {
        std::vector<std::pair<int, Axis>> factors;
        std::size_t pos = 0;
        while (pos < text.size()) {
            const char c = static_cast<char>(std::toupper(text[pos]));
            Axis axis;
            if (c == 'X') axis = Axis::X;
            else if (c == 'Y') axis = Axis::Y;
            else if (c == 'Z') axis = Axis::Z;
            else throw std::invalid_argument("PauliString::parse: expected axis letter in '" + text + "'");
            ++pos;
            std::size_t digits = 0;
            int q = 0;
            while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
                q = q * 10 + (text[pos] - '0');
                ++pos;
                ++digits;
            }
            if (digits == 0)
                throw std::invalid_argument("PauliString::parse: missing qubit index in '" + text + "'");
            factors.emplace_back(q, axis);
            if (pos < text.size()) {
                if (text[pos] != '*')
                    throw std::invalid_argument("PauliString::parse: expected '*' in '" + text + "'");
                ++pos;
            }
        }
        return PauliString(std::move(factors));
    }

    bool operator==(const PauliString& other) const { return factors_ == other.factors_; }

private:
    std::vector<std::pair<int, Axis>> factors_;
};

using HamiltonianTerm = std::pair<double, PauliString>;
using Hamiltonian = std::vector<HamiltonianTerm>;

enum class PoolFlavor { Restricted, Extended };

struct OperatorPool {
    PoolFlavor flavor = PoolFlavor::Restricted;
    std::vector<PauliString> members;
};

/// Candidate operators for ansatz growth: all one-body strings (by qubit,
/// then X,Y,Z) followed by two-body strings on unordered pairs j<k. The
/// restricted flavor uses the six axis pairs XX,XY,XZ,YY,YZ,ZZ applied as
/// (first axis on j, second on k); the extended flavor uses all nine.
inline OperatorPool generate_pool(int num_qubits, PoolFlavor flavor) {
    if (num_qubits < 2) throw std::invalid_argument("generate_pool: need at least 2 qubits");
    static constexpr Axis kAxes[] = {Axis::X, Axis::Y, Axis::Z};
    OperatorPool pool;
    pool.flavor = flavor;
    for (int q = 0; q < num_qubits; ++q)
        for (Axis a : kAxes) pool.members.push_back(PauliString{{q, a}});
    for (int j = 0; j < num_qubits; ++j) {
        for (int k = j + 1; k < num_qubits; ++k) {
            for (Axis a : kAxes) {
                for (Axis b : kAxes) {
                    if (flavor == PoolFlavor::Restricted &&
                        static_cast<int>(b) < static_cast<int>(a))
                        continue;
                    pool.members.push_back(PauliString{{j, a}, {k, b}});
                }
            }
        }
    }
    return pool;
}

namespace detail {

inline void check_pauli(const StateVector& state, const PauliString& p, const char* what) {
    if (p.max_qubit() >= state.num_qubits())
        throw std::out_of_range(std::string(what) + ": Pauli string acts outside the register");
}

}  // namespace detail

/// P|psi> into a fresh vector. Basis action: X flips a bit, Z contributes
/// (-1)^bit, Y flips with phase (+i on |0>, -i on |1>).
inline std::vector<Complex> apply_pauli(const StateVector& state, const PauliString& p) {
    detail::check_pauli(state, p, "apply_pauli");
    std::size_t flip_mask = 0;
    std::size_t y_mask = 0;
    std::size_t z_mask = 0;
    for (const auto& [q, a] : p.factors()) {
        const std::size_t bit = std::size_t{1} << q;
        if (a != Axis::Z) flip_mask |= bit;
        if (a == Axis::Y) y_mask |= bit;
        if (a == Axis::Z) z_mask |= bit;
    }
    static constexpr Complex kPhase[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};  // i^k
    const int y_count = std::popcount(y_mask);
    std::vector<Complex> out(state.dim());
    for (std::size_t i = 0; i < state.dim(); ++i) {
        // phase of P acting on |i>: i^{#Y} * (-1)^{#(Y set bits in i)} * (-1)^{#(Z set bits in i)}
        const int minus = std::popcount(i & y_mask) + std::popcount(i & z_mask);
        const int k = (y_count + 2 * minus) & 3;
        out[i ^ flip_mask] = kPhase[k] * state[i];
    }
    return out;
}

/// <psi|P|psi>; real for Hermitian P (the imaginary part is dropped after
/// the tests bound it below 1e-12).
inline double expectation_pauli(const StateVector& state, const PauliString& p) {
    const std::vector<Complex> pv = apply_pauli(state, p);
    Complex acc{0.0, 0.0};
    for (std::size_t i = 0; i < state.dim(); ++i) acc += std::conj(state[i]) * pv[i];
    return acc.real();
}

inline Complex expectation_pauli_complex(const StateVector& state, const PauliString& p) {
    const std::vector<Complex> pv = apply_pauli(state, p);
    Complex acc{0.0, 0.0};
    for (std::size_t i = 0; i < state.dim(); ++i) acc += std::conj(state[i]) * pv[i];
    return acc;
}

/// Sum_j coeff_j <P_j>.
inline double expectation_hamiltonian(const StateVector& state, const Hamiltonian& h) {
    if (h.empty()) throw std::invalid_argument("expectation_hamiltonian: empty Hamiltonian");
    double acc = 0.0;
    for (const auto& [coeff, p] : h) acc += coeff * expectation_pauli(state, p);
    return acc;
}

/// Circuit realization of exp(-i theta P): basis changes (H for X,
/// Rx(pi/2) for Y, none for Z), a CNOT ladder onto the highest involved
/// qubit, Rz(2 theta) there, then the inverse ladder and basis changes.
inline std::vector<Gate> pauli_exponential_circuit(const PauliString& p, double theta) {
    std::vector<Gate> basis, unbasis;
    for (const auto& [q, a] : p.factors()) {
        if (a == Axis::X) {
            basis.push_back(Gate::hadamard(q));
            unbasis.push_back(Gate::hadamard(q));
        } else if (a == Axis::Y) {
            basis.push_back(Gate::rot_x(q, M_PI / 2.0));
            unbasis.push_back(Gate::rot_x(q, -M_PI / 2.0));
        }
    }
    std::vector<Gate> ladder;
    const auto& factors = p.factors();
    for (std::size_t i = 0; i + 1 < factors.size(); ++i)
        ladder.push_back(Gate::cnot(factors[i].first, factors[i + 1].first));

    std::vector<Gate> circuit = basis;
    circuit.insert(circuit.end(), ladder.begin(), ladder.end());
    circuit.push_back(Gate::rot_z(p.max_qubit(), 2.0 * theta));
    circuit.insert(circuit.end(), ladder.rbegin(), ladder.rend());
    circuit.insert(circuit.end(), unbasis.rbegin(), unbasis.rend());
    return circuit;
}

/// Matrix-free exp(-i theta P)|psi> = cos(theta)|psi> - i sin(theta) P|psi>.
inline void apply_pauli_exponential(StateVector& state, const PauliString& p, double theta) {
    detail::check_pauli(state, p, "apply_pauli_exponential");
    if (theta == 0.0) return;
    const std::vector<Complex> pv = apply_pauli(state, p);
    const double c = std::cos(theta);
    const Complex mis{0.0, -std::sin(theta)};
    auto& amps = state.amplitudes();
    for (std::size_t i = 0; i < state.dim(); ++i) amps[i] = c * amps[i] + mis * pv[i];
}

}  // namespace vqkan
