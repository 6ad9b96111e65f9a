#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "vqkan/optimizer.hpp"
#include "vqkan/pauli.hpp"
#include "vqkan/qsim.hpp"
#include "vqkan/spline.hpp"

namespace vqkan {

/// One ansatz factor exp(i P phi) whose angle phi is set by a trainable
/// spline activation of the layer inputs. Fresh terms start at zero
/// coefficients, which still contributes the silu base angle.
struct AnsatzTerm {
    PauliString op;
    ActivationCoefficients coeffs;
};

/// Angle of one ansatz factor: Sum_i 2 acos(clamp(g(x_i), -1, 1)) over the
/// layer input components, where g is the term's spline activation. The
/// clamp keeps the angle real when the activation leaves [-1, 1].
inline double angle_phi(const SplineGrid& grid, const AnsatzTerm& term,
                        const std::vector<double>& layer_input) {
    double phi = 0.0;
    for (double x : layer_input) {
        const double g = std::clamp(activation_eval(grid, term.coeffs, x), -1.0, 1.0);
        phi += 2.0 * std::acos(g);
    }
    return phi;
}

/// The trainable artifact: per-layer ordered ansatz terms, the readout
/// Hamiltonian, the input wiring, and the shared spline grid.
class VqkanModel {
public:
    VqkanModel(int num_qubits, int num_layers, Hamiltonian hamiltonian, int input_dim,
               SplineGrid grid, InputEncoding encoding, std::vector<int> readout_qubits = {})
        : num_qubits_(num_qubits),
          hamiltonian_(std::move(hamiltonian)),
          input_dim_(input_dim),
          grid_(std::move(grid)),
          encoding_(encoding),
          readout_qubits_(std::move(readout_qubits)) {
        if (num_layers < 1) throw std::invalid_argument("VqkanModel: need at least one layer");
        if (input_dim < 1) throw std::invalid_argument("VqkanModel: input_dim must be positive");
        if (hamiltonian_.empty()) throw std::invalid_argument("VqkanModel: empty Hamiltonian");
        if (readout_qubits_.empty())
            for (int i = 0; i < input_dim; ++i) readout_qubits_.push_back(i);
        if (static_cast<int>(readout_qubits_.size()) != input_dim)
            throw std::invalid_argument("VqkanModel: need one readout qubit per input component");
        for (int q : readout_qubits_)
            if (q < 0 || q >= num_qubits)
                throw std::out_of_range("VqkanModel: readout qubit out of range");
        layers_.resize(static_cast<std::size_t>(num_layers));
    }

    int num_qubits() const { return num_qubits_; }
    int num_layers() const { return static_cast<int>(layers_.size()); }
    int input_dim() const { return input_dim_; }
    InputEncoding encoding() const { return encoding_; }
    const SplineGrid& grid() const { return grid_; }
    const Hamiltonian& hamiltonian() const { return hamiltonian_; }
    const std::vector<int>& readout_qubits() const { return readout_qubits_; }
    const std::vector<std::vector<AnsatzTerm>>& layers() const { return layers_; }

    int num_terms() const {
        int n = 0;
        for (const auto& layer : layers_) n += static_cast<int>(layer.size());
        return n;
    }

    /// Appends an operator with zero coefficients to the last layer.
    void append_term(const PauliString& op) {
        check_operator(op);
        layers_.back().push_back(
            AnsatzTerm{op, ActivationCoefficients(grid_.num_grid(), grid_.num_splines())});
    }

    /// Seeds every layer with the initial operator (zero coefficients).
    void append_term_all_layers(const PauliString& op) {
        check_operator(op);
        for (auto& layer : layers_)
            layer.push_back(
                AnsatzTerm{op, ActivationCoefficients(grid_.num_grid(), grid_.num_splines())});
    }

    /// Removes the most recently appended term of the last layer.
    void pop_term() {
        if (layers_.back().empty()) throw std::logic_error("VqkanModel: no term to remove");
        layers_.back().pop_back();
    }

    /// Grows the spline basis to new_num_splines and transfers every term's
    /// coefficients by the least-squares refit.
    void refine_to(int new_num_splines) {
        SplineGrid new_grid(grid_.num_grid(), new_num_splines);
        for (auto& layer : layers_) {
            for (auto& term : layer) {
                auto [g, c] = refine(grid_, term.coeffs, new_num_splines);
                term.coeffs = std::move(c);
            }
        }
        grid_ = std::move(new_grid);
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& layer : layers_)
            for (const auto& term : layer) n += term.coeffs.size();
        return n;
    }

    /// All trainable coefficients flattened layer by layer, term by term.
    std::vector<double> parameters() const {
        std::vector<double> p;
        p.reserve(parameter_count());
        for (const auto& layer : layers_)
            for (const auto& term : layer)
                p.insert(p.end(), term.coeffs.values().begin(), term.coeffs.values().end());
        return p;
    }

    void set_parameters(const std::vector<double>& p) {
        if (p.size() != parameter_count())
            throw std::invalid_argument("VqkanModel: parameter vector size mismatch");
        std::size_t offset = 0;
        for (auto& layer : layers_) {
            for (auto& term : layer) {
                std::copy(p.begin() + static_cast<std::ptrdiff_t>(offset),
                          p.begin() + static_cast<std::ptrdiff_t>(offset + term.coeffs.size()),
                          term.coeffs.values().begin());
                offset += term.coeffs.size();
            }
        }
    }

private:
    void check_operator(const PauliString& op) const {
        if (op.max_qubit() >= num_qubits_)
            throw std::out_of_range("VqkanModel: operator acts outside the register");
    }

    int num_qubits_;
    Hamiltonian hamiltonian_;
    int input_dim_;
    SplineGrid grid_;
    InputEncoding encoding_;
    std::vector<int> readout_qubits_;
    std::vector<std::vector<AnsatzTerm>> layers_;
};

struct ForwardResult {
    double value = 0.0;
    // Inputs seen by each layer plus the readout after the last layer.
    std::vector<std::vector<double>> layer_inputs;
};

/// Full forward pass: encode the input, apply every layer's terms as
/// exp(i P phi), refresh the layer inputs from <Z> readouts of the evolved
/// state (no collapse), and read out the Hamiltonian expectation.
inline ForwardResult forward(const VqkanModel& model, const std::vector<double>& input) {
    if (static_cast<int>(input.size()) != model.input_dim())
        throw std::invalid_argument("forward: input dimension mismatch");
    StateVector state = prepare_input_state(input, model.num_qubits(), model.encoding());
    ForwardResult result;
    std::vector<double> x = input;
    result.layer_inputs.push_back(x);
    for (const auto& layer : model.layers()) {
        for (const AnsatzTerm& term : layer) {
            const double phi = angle_phi(model.grid(), term, x);
            apply_pauli_exponential(state, term.op, -phi);  // exp(+i P phi)
        }
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double z = expectation_pauli(state, PauliString{{model.readout_qubits()[i], Axis::Z}});
            x[i] = std::clamp(0.5 * (z + 1.0), 0.0, 1.0);
        }
        result.layer_inputs.push_back(x);
    }
    result.value = expectation_hamiltonian(state, model.hamiltonian());
    return result;
}

/// Per-sample weights a_m = (N - m) / N.
inline std::vector<double> make_loss_weights(std::size_t num_samples) {
    std::vector<double> w(num_samples);
    for (std::size_t m = 0; m < num_samples; ++m)
        w[m] = static_cast<double>(num_samples - m) / static_cast<double>(num_samples);
    return w;
}

/// Weighted absolute-distance loss Sum_m a_m |f(x_m) - y_m|.
inline double loss(const VqkanModel& model, const std::vector<std::vector<double>>& inputs,
                   const std::vector<double>& targets, const std::vector<double>& weights) {
    if (inputs.empty()) throw std::invalid_argument("loss: empty sample set");
    if (inputs.size() != targets.size() || inputs.size() != weights.size())
        throw std::invalid_argument("loss: sample/target/weight size mismatch");
    double acc = 0.0;
    for (std::size_t m = 0; m < inputs.size(); ++m)
        acc += weights[m] * std::fabs(forward(model, inputs[m]).value - targets[m]);
    return acc;
}

using ModelLossFn = std::function<double(const VqkanModel&)>;
using ModelTestFn = std::function<double(const VqkanModel&)>;

/// Largest |dL/dc| over the candidate's own coefficients when it is
/// appended (at zero) to the end of the ansatz; central differences.
inline double candidate_gradient(const VqkanModel& model, const PauliString& candidate,
                                 const ModelLossFn& loss_fn, double fd_step = 1e-6) {
    VqkanModel trial = model;
    trial.append_term(candidate);
    const std::size_t offset = trial.parameter_count() - trial.layers().back().back().coeffs.size();
    std::vector<double> p = trial.parameters();
    double best = 0.0;
    for (std::size_t k = offset; k < p.size(); ++k) {
        p[k] = fd_step;
        trial.set_parameters(p);
        const double lp = loss_fn(trial);
        p[k] = -fd_step;
        trial.set_parameters(p);
        const double lm = loss_fn(trial);
        p[k] = 0.0;
        best = std::max(best, std::fabs(lp - lm) / (2.0 * fd_step));
    }
    return best;
}

inline double candidate_gradient(const VqkanModel& model, const PauliString& candidate,
                                 const std::vector<std::vector<double>>& inputs,
                                 const std::vector<double>& targets,
                                 const std::vector<double>& weights, double fd_step = 1e-6) {
    return candidate_gradient(
        model, candidate,
        [&](const VqkanModel& m) { return loss(m, inputs, targets, weights); }, fd_step);
}

/// Way 1: append the pool member with the largest candidate gradient.
/// Ties break to the first member in pool order.
inline PauliString grow_way1(VqkanModel& model, const OperatorPool& pool,
                             const ModelLossFn& loss_fn, double fd_step = 1e-6) {
    if (pool.members.empty()) throw std::invalid_argument("grow_way1: empty pool");
    std::size_t best_idx = 0;
    double best_score = -1.0;
    for (std::size_t i = 0; i < pool.members.size(); ++i) {
        const double score = candidate_gradient(model, pool.members[i], loss_fn, fd_step);
        if (score > best_score) {
            best_score = score;
            best_idx = i;
        }
    }
    model.append_term(pool.members[best_idx]);
    return pool.members[best_idx];
}

/// Way 2: append the pool member whose zero-coefficient inclusion gives the
/// smallest loss, unless no candidate improves on the current loss, in which
/// case the ansatz is left unchanged.
inline std::optional<PauliString> grow_way2(VqkanModel& model, const OperatorPool& pool,
                                            const ModelLossFn& loss_fn) {
    if (pool.members.empty()) throw std::invalid_argument("grow_way2: empty pool");
    double best_loss = loss_fn(model);
    std::optional<std::size_t> best_idx;
    VqkanModel trial = model;
    for (std::size_t i = 0; i < pool.members.size(); ++i) {
        trial.append_term(pool.members[i]);
        const double l = loss_fn(trial);
        trial.pop_term();
        if (l < best_loss) {
            best_loss = l;
            best_idx = i;
        }
    }
    if (!best_idx) return std::nullopt;
    model.append_term(pool.members[*best_idx]);
    return pool.members[*best_idx];
}

inline std::optional<PauliString> grow_way2(VqkanModel& model, const OperatorPool& pool,
                                            const std::vector<std::vector<double>>& inputs,
                                            const std::vector<double>& targets,
                                            const std::vector<double>& weights) {
    return grow_way2(model, pool,
                     [&](const VqkanModel& m) { return loss(m, inputs, targets, weights); });
}

enum class SelectionWay { MaxGradient = 1, MinLoss = 2 };

struct AdaptiveConfig {
    SelectionWay way = SelectionWay::MinLoss;
    int epochs = 25;
    int trials_per_epoch = 1000;
    std::string initial_ansatz = "X0";
    double convergence_threshold = 1e-16;
    double rhobeg = 0.5;
    double rhoend = 1e-8;
    double fd_step = 1e-6;
};

struct EpochRecord {
    int epoch = 0;
    std::string chosen_operator;  // empty when way 2 declined to grow
    double loss_before = 0.0;
    double loss_after = 0.0;
    int num_terms = 0;
    double test_distance_sum = 0.0;
    int num_objective_evals = 0;
};

struct AdaptiveRunResult {
    std::vector<EpochRecord> records;
    bool converged = false;
};

/// The adaptive growth loop. Per epoch tr: grow the spline basis to
/// N_s = 4(tr+2) carrying coefficients over, select an operator (epoch 0
/// seeds the configured initial ansatz into every layer instead), optimize
/// all coefficients with COBYLA warm-started from the current values, and
/// record losses plus the test metric. Stops early once the loss reaches
/// the convergence threshold.
inline AdaptiveRunResult run_adaptive(VqkanModel& model, const OperatorPool& pool,
                                      const ModelLossFn& loss_fn, const ModelTestFn& test_fn,
                                      const AdaptiveConfig& config) {
    if (config.epochs < 1 || config.trials_per_epoch < 1)
        throw std::invalid_argument("run_adaptive: epochs and trials must be positive");
    AdaptiveRunResult result;
    for (int tr = 0; tr < config.epochs; ++tr) {
        const int target_splines = 4 * (tr + 2);
        if (target_splines > model.grid().num_splines()) model.refine_to(target_splines);

        const double loss_before = loss_fn(model);
        std::string chosen;
        if (tr == 0) {
            const PauliString init = PauliString::parse(config.initial_ansatz);
            model.append_term_all_layers(init);
            chosen = init.to_string();
        } else if (config.way == SelectionWay::MaxGradient) {
            chosen = grow_way1(model, pool, loss_fn, config.fd_step).to_string();
        } else {
            if (auto op = grow_way2(model, pool, loss_fn)) chosen = op->to_string();
        }

        VqkanModel scratch = model;
        const Objective objective = [&](const std::vector<double>& p) {
            scratch.set_parameters(p);
            return loss_fn(scratch);
        };
        const ObjectiveBudget budget{config.trials_per_epoch, config.rhobeg, config.rhoend, 0};
        const CobylaResult opt = cobyla_minimize(objective, model.parameters(), budget);
        model.set_parameters(opt.x_best);

        EpochRecord record;
        record.epoch = tr;
        record.chosen_operator = chosen;
        record.loss_before = loss_before;
        record.loss_after = opt.f_best;
        record.num_terms = model.num_terms();
        record.test_distance_sum = test_fn(model);
        record.num_objective_evals = opt.evals_used;
        result.records.push_back(std::move(record));

        if (opt.f_best <= config.convergence_threshold) {
            result.converged = true;
            break;
        }
    }
    return result;
}

}  // namespace vqkan
