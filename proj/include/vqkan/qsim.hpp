#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace vqkan {

using Complex = std::complex<double>;

constexpr int kMaxQubits = 8;

/// Dense statevector of a small register. Amplitude ordering is
/// little-endian: bit j of the basis index is the state of qubit j.
class StateVector {
public:
    explicit StateVector(int num_qubits) : num_qubits_(num_qubits) {
        if (num_qubits < 1 || num_qubits > kMaxQubits)
            throw std::invalid_argument("StateVector: qubit count must be in [1, 8]");
        amps_.assign(std::size_t{1} << num_qubits, Complex{0.0, 0.0});
    }

    int num_qubits() const { return num_qubits_; }
    std::size_t dim() const { return amps_.size(); }

    Complex& operator[](std::size_t i) { return amps_[i]; }
    const Complex& operator[](std::size_t i) const { return amps_[i]; }

    std::vector<Complex>& amplitudes() { return amps_; }
    const std::vector<Complex>& amplitudes() const { return amps_; }

    double norm() const {
        double s = 0.0;
        for (const Complex& a : amps_) s += std::norm(a);
        return std::sqrt(s);
    }

private:
    int num_qubits_;
    std::vector<Complex> amps_;
};

enum class GateKind { RotX, RotY, RotZ, Hadamard, Identity, ControlledNot };

/// One gate application. Rotation convention: Rk(theta) = exp(-i theta K / 2).
struct Gate {
    GateKind kind = GateKind::Identity;
    int qubit0 = 0;
    int qubit1 = -1;     // CNOT target; unused otherwise
    double angle = 0.0;  // rotation kinds only

    static Gate rot_x(int q, double theta) { return {GateKind::RotX, q, -1, theta}; }
    static Gate rot_y(int q, double theta) { return {GateKind::RotY, q, -1, theta}; }
    static Gate rot_z(int q, double theta) { return {GateKind::RotZ, q, -1, theta}; }
    static Gate hadamard(int q) { return {GateKind::Hadamard, q, -1, 0.0}; }
    static Gate identity(int q) { return {GateKind::Identity, q, -1, 0.0}; }
    static Gate cnot(int control, int target) {
        return {GateKind::ControlledNot, control, target, 0.0};
    }

    /// Gate whose unitary is the inverse of this one.
    Gate inverse() const {
        Gate g = *this;
        switch (kind) {
            case GateKind::RotX:
            case GateKind::RotY:
            case GateKind::RotZ:
                g.angle = -angle;
                break;
            default:
                break;  // H, I, CNOT are self-inverse
        }
        return g;
    }
};

namespace detail {

inline void check_qubit(const StateVector& state, int q, const char* what) {
    if (q < 0 || q >= state.num_qubits())
        throw std::out_of_range(std::string(what) + ": qubit index out of range");
}

// In-place 2x2 unitary on qubit q; u = {u00, u01, u10, u11}.
inline void apply_single_qubit(StateVector& state, int q, const std::array<Complex, 4>& u) {
    const std::size_t mask = std::size_t{1} << q;
    const std::size_t n = state.dim();
    auto& amps = state.amplitudes();
    for (std::size_t i = 0; i < n; ++i) {
        if ((i & mask) == 0) {
            const Complex a = amps[i];
            const Complex b = amps[i | mask];
            amps[i] = u[0] * a + u[1] * b;
            amps[i | mask] = u[2] * a + u[3] * b;
        }
    }
}

}  // namespace detail

inline StateVector zero_state(int num_qubits) {
    StateVector state(num_qubits);
    state[0] = Complex{1.0, 0.0};
    return state;
}

inline void apply_gate(StateVector& state, const Gate& gate) {
    detail::check_qubit(state, gate.qubit0, "apply_gate");
    const double half = 0.5 * gate.angle;
    switch (gate.kind) {
        case GateKind::RotX: {
            const double c = std::cos(half), s = std::sin(half);
            detail::apply_single_qubit(state, gate.qubit0,
                                       {Complex{c, 0}, Complex{0, -s}, Complex{0, -s}, Complex{c, 0}});
            break;
        }
        case GateKind::RotY: {
            const double c = std::cos(half), s = std::sin(half);
            detail::apply_single_qubit(state, gate.qubit0,
                                       {Complex{c, 0}, Complex{-s, 0}, Complex{s, 0}, Complex{c, 0}});
            break;
        }
        case GateKind::RotZ: {
            const Complex e0 = std::exp(Complex{0, -half});
            const Complex e1 = std::exp(Complex{0, half});
            detail::apply_single_qubit(state, gate.qubit0, {e0, Complex{0, 0}, Complex{0, 0}, e1});
            break;
        }
        case GateKind::Hadamard: {
            const double r = 1.0 / std::sqrt(2.0);
            detail::apply_single_qubit(state, gate.qubit0,
                                       {Complex{r, 0}, Complex{r, 0}, Complex{r, 0}, Complex{-r, 0}});
            break;
        }
        case GateKind::Identity:
            break;
        case GateKind::ControlledNot: {
            detail::check_qubit(state, gate.qubit1, "apply_gate");
            if (gate.qubit0 == gate.qubit1)
                throw std::invalid_argument("apply_gate: CNOT control equals target");
            const std::size_t cmask = std::size_t{1} << gate.qubit0;
            const std::size_t tmask = std::size_t{1} << gate.qubit1;
            auto& amps = state.amplitudes();
            for (std::size_t i = 0; i < state.dim(); ++i)
                if ((i & cmask) && !(i & tmask)) std::swap(amps[i], amps[i | tmask]);
            break;
        }
    }
}

inline void apply_gates(StateVector& state, const std::vector<Gate>& gates) {
    for (const Gate& g : gates) apply_gate(state, g);
}

/// Controlled-Z; phase -1 on |11>. Symmetric in its arguments.
inline void apply_cz(StateVector& state, int a, int b) {
    detail::check_qubit(state, a, "apply_cz");
    detail::check_qubit(state, b, "apply_cz");
    if (a == b) throw std::invalid_argument("apply_cz: identical qubits");
    const std::size_t mask = (std::size_t{1} << a) | (std::size_t{1} << b);
    auto& amps = state.amplitudes();
    for (std::size_t i = 0; i < state.dim(); ++i)
        if ((i & mask) == mask) amps[i] = -amps[i];
}

enum class InputEncoding { SqrtAcos, Acos };

/// Product-state data encoding: qubit j is rotated by Ry(2 acos(sqrt(x)))
/// (SqrtAcos) or Ry(2 acos(x)) (Acos) where x is input component j mod dim.
/// Under SqrtAcos the prepared state satisfies <Z_j> = 2 x_{j mod dim} - 1.
inline StateVector prepare_input_state(const std::vector<double>& x, int num_qubits,
                                       InputEncoding encoding) {
    if (x.empty()) throw std::invalid_argument("prepare_input_state: empty input");
    for (double v : x)
        if (!(v >= 0.0 && v <= 1.0))
            throw std::domain_error("prepare_input_state: component outside [0, 1]");
    StateVector state = zero_state(num_qubits);
    for (int j = 0; j < num_qubits; ++j) {
        const double v = x[static_cast<std::size_t>(j) % x.size()];
        const double arg = encoding == InputEncoding::SqrtAcos ? std::sqrt(v) : v;
        apply_gate(state, Gate::rot_y(j, 2.0 * std::acos(arg)));
    }
    return state;
}

}  // namespace vqkan
