#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "vqkan/optimizer.hpp"
#include "vqkan/pauli.hpp"
#include "vqkan/qsim.hpp"
#include "vqkan/rng.hpp"

namespace vqkan {

/// Data re-uploading QNN baseline: per layer, a column of trainable Ry
/// rotations, a CZ chain, Rx data injections, a second Ry column and a
/// second CZ chain. Eight parameters per layer on four qubits.
struct QnnModel {
    int num_qubits = 4;
    int num_layers = 3;
    std::vector<double> thetas;  // 2 * num_qubits * num_layers
    Hamiltonian hamiltonian;
    // Per-problem map from the unit-interval input vector to one Rx angle
    // per qubit.
    std::function<std::vector<double>(const std::vector<double>&)> input_to_angles;
};

inline QnnModel make_qnn(
    int num_qubits, int num_layers, Hamiltonian hamiltonian,
    std::function<std::vector<double>(const std::vector<double>&)> input_to_angles) {
    QnnModel model;
    model.num_qubits = num_qubits;
    model.num_layers = num_layers;
    model.thetas.assign(static_cast<std::size_t>(2) * num_qubits * num_layers, 0.0);
    model.hamiltonian = std::move(hamiltonian);
    model.input_to_angles = std::move(input_to_angles);
    return model;
}

/// Forward pass of Fig-style ansatz; returns the Hamiltonian expectation.
inline double qnn_forward(const QnnModel& model, const std::vector<double>& unit_input) {
    const int nq = model.num_qubits;
    if (static_cast<int>(model.thetas.size()) != 2 * nq * model.num_layers)
        throw std::invalid_argument("qnn_forward: wrong theta count");
    const std::vector<double> angles = model.input_to_angles(unit_input);
    if (static_cast<int>(angles.size()) != nq)
        throw std::invalid_argument("qnn_forward: input map must yield one angle per qubit");

    StateVector state = zero_state(nq);
    for (int layer = 0; layer < model.num_layers; ++layer) {
        const std::size_t base = static_cast<std::size_t>(2) * nq * layer;
        for (int q = 0; q < nq; ++q)
            apply_gate(state, Gate::rot_y(q, model.thetas[base + static_cast<std::size_t>(q)]));
        for (int q = 0; q + 1 < nq; ++q) apply_cz(state, q, q + 1);
        for (int q = 0; q < nq; ++q)
            apply_gate(state, Gate::rot_x(q, angles[static_cast<std::size_t>(q)]));
        for (int q = 0; q < nq; ++q)
            apply_gate(state,
                       Gate::rot_y(q, model.thetas[base + static_cast<std::size_t>(nq + q)]));
        for (int q = 0; q + 1 < nq; ++q) apply_cz(state, q, q + 1);
    }
    return expectation_hamiltonian(state, model.hamiltonian);
}

using QnnLossFn = std::function<double(const QnnModel&)>;

struct QnnTrainResult {
    QnnModel model;
    std::vector<double> loss_history;  // objective value per optimizer evaluation
    double final_loss = 0.0;
    int evals_used = 0;
};

/// Initializes the rotation angles uniformly in [0, 2 pi) from the seed and
/// minimizes the supplied loss with COBYLA within the budget.
inline QnnTrainResult qnn_train(QnnModel model, const QnnLossFn& loss_fn,
                                const ObjectiveBudget& budget, std::uint64_t seed) {
    Rng rng(seed);
    for (double& theta : model.thetas) theta = rng.uniform(0.0, 2.0 * M_PI);

    QnnModel scratch = model;
    const Objective objective = [&](const std::vector<double>& p) {
        scratch.thetas = p;
        return loss_fn(scratch);
    };
    const CobylaResult opt = cobyla_minimize(objective, model.thetas, budget);
    QnnTrainResult result;
    model.thetas = opt.x_best;
    result.model = std::move(model);
    result.loss_history = opt.history;
    result.final_loss = opt.f_best;
    result.evals_used = opt.evals_used;
    return result;
}

}  // namespace vqkan
