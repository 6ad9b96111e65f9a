#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vqkan/model.hpp"
#include "vqkan/pauli.hpp"
#include "vqkan/qsim.hpp"
#include "vqkan/rng.hpp"

namespace vqkan {

enum class ProblemKind { Fitting, Classification, Heat };

enum class FittingTarget {
    ExpSinSum,         // exp(sin(x0^2+x1^2) + sin(x2^2+x3^2))
    ExponentialRatio,  // exp((x1-x2)^2 / (2 x0))
    LogRatio,          // log(x0 / x1)
    Fractional,        // 1 / (1 + x0 x1)
    SphereRadius       // sqrt(x0^2 + x1^2 + x2^2 + x3^2)
};

struct ProblemSpec {
    ProblemKind kind = ProblemKind::Fitting;
    FittingTarget target = FittingTarget::ExpSinSum;
    int train_count = 10;
    int test_count = 50;
    std::uint64_t rng_seed = 0;
};

struct Sample {
    std::vector<double> raw;   // problem-domain coordinates
    std::vector<double> unit;  // mapped model inputs in [0,1]^dim
    double target = 0.0;
};

struct Dataset {
    std::vector<Sample> train;
    std::vector<Sample> test;
    std::vector<double> boundary_coeffs;  // classification d_0..d_7; empty otherwise
};

inline int problem_input_dim(ProblemKind kind) { return kind == ProblemKind::Fitting ? 4 : 2; }

inline InputEncoding problem_encoding(ProblemKind kind) {
    return kind == ProblemKind::Heat ? InputEncoding::Acos : InputEncoding::SqrtAcos;
}

/// Z0 Z1 + Z2 Z3 readout used by every benchmark.
inline Hamiltonian paired_zz_hamiltonian() {
    return {{1.0, PauliString{{0, Axis::Z}, {1, Axis::Z}}},
            {1.0, PauliString{{2, Axis::Z}, {3, Axis::Z}}}};
}

/// Signed coordinates fed to the fitting targets: x_i = 2 u_i - 1, except
/// the exponential-ratio target which flips x_0 = 1 - 2 u_0.
inline std::vector<double> fitting_coords(FittingTarget target, const std::vector<double>& unit) {
    std::vector<double> x(unit.size());
    for (std::size_t i = 0; i < unit.size(); ++i) x[i] = 2.0 * unit[i] - 1.0;
    if (target == FittingTarget::ExponentialRatio) x[0] = 1.0 - 2.0 * unit[0];
    return x;
}

inline double fitting_target(FittingTarget target, const std::vector<double>& x) {
    switch (target) {
        case FittingTarget::ExpSinSum:
            return std::exp(std::sin(x[0] * x[0] + x[1] * x[1]) +
                            std::sin(x[2] * x[2] + x[3] * x[3]));
        case FittingTarget::ExponentialRatio:
            if (x[0] == 0.0) throw std::domain_error("fitting_target: x0 = 0");
            return std::exp((x[1] - x[2]) * (x[1] - x[2]) / (2.0 * x[0]));
        case FittingTarget::LogRatio:
            if (!(x[0] / x[1] > 0.0)) throw std::domain_error("fitting_target: nonpositive ratio");
            return std::log(x[0] / x[1]);
        case FittingTarget::Fractional:
            return 1.0 / (1.0 + x[0] * x[1]);
        case FittingTarget::SphereRadius:
            return std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3]);
    }
    throw std::logic_error("fitting_target: unknown target");
}

/// Boundary function of the 2-D classification problem; the square-root
/// argument is clamped at zero.
inline double classification_boundary(const std::vector<double>& d, double x0) {
    if (d.size() != 8) throw std::invalid_argument("classification_boundary: need 8 coefficients");
    const double root = std::sqrt(std::max(0.0, 1.0 - d[3] * x0 * x0));
    return std::exp(d[0] * x0 + d[1]) + d[2] * root + std::cos(d[4] * x0 + d[5]) +
           std::sin(d[6] * x0 + d[7]);
}

/// -1 when the boundary value lies at or above x1, +1 below.
inline int classification_label(const std::vector<double>& d, double x0, double x1) {
    return classification_boundary(d, x0) >= x1 ? -1 : 1;
}

constexpr int kHeatSeriesTerms = 10;

/// Ten-term series solution of u_t = u_xx on [0, pi] with zero boundaries
/// and the triangular initial profile. The boundary values are pinned to
/// exactly zero (every term carries sin(k*0) = sin(k*pi) = 0).
inline double heat_exact(double x, double t) {
    if (!(x >= 0.0 && x <= M_PI) || !(t >= 0.0))
        throw std::domain_error("heat_exact: outside x in [0, pi], t >= 0");
    if (x == 0.0 || x == M_PI) return 0.0;
    double acc = 0.0;
    double sign = 1.0;
    for (int k = 0; k < kHeatSeriesTerms; ++k) {
        const double odd = 2.0 * k + 1.0;
        acc += sign / (odd * odd) * std::exp(-odd * odd * t) * std::sin(odd * x);
        sign = -sign;
    }
    return 4.0 / M_PI * acc;
}

using ForwardFn = std::function<double(const std::vector<double>&)>;

/// Weighted absolute-distance loss over unit-mapped samples.
inline double standard_loss(const ForwardFn& fwd, const std::vector<Sample>& samples,
                            const std::vector<double>& weights) {
    if (samples.empty()) throw std::invalid_argument("standard_loss: empty sample set");
    if (samples.size() != weights.size())
        throw std::invalid_argument("standard_loss: weight count mismatch");
    double acc = 0.0;
    for (std::size_t m = 0; m < samples.size(); ++m)
        acc += weights[m] * std::fabs(fwd(samples[m].unit) - samples[m].target);
    return acc;
}

inline std::vector<double> heat_unit_input(double x, double t) {
    return {std::clamp(x / M_PI, 0.0, 1.0), std::clamp(t, 0.0, 1.0)};
}

/// Conditional fitting loss for the heat problem: per sample, the absolute
/// distance to the exact solution plus the PDE residual |u_t - u_xx| from
/// central differences in the raw coordinates. Exactly five model
/// evaluations per sample: center, x +/- delta, t +/- delta (the second
/// x-derivative reuses the center). Stencil points that would leave the
/// domain are clamped by the unit map.
inline double heat_loss(const ForwardFn& fwd, const std::vector<Sample>& samples,
                        const std::vector<double>& weights, double delta = 1e-4) {
    if (samples.empty()) throw std::invalid_argument("heat_loss: empty sample set");
    if (samples.size() != weights.size())
        throw std::invalid_argument("heat_loss: weight count mismatch");
    if (!(delta > 0.0)) throw std::invalid_argument("heat_loss: delta must be positive");
    double acc = 0.0;
    for (std::size_t m = 0; m < samples.size(); ++m) {
        const double x = samples[m].raw[0];
        const double t = samples[m].raw[1];
        const double center = fwd(heat_unit_input(x, t));
        const double xp = fwd(heat_unit_input(x + delta, t));
        const double xm = fwd(heat_unit_input(x - delta, t));
        const double tp = fwd(heat_unit_input(x, t + delta));
        const double tm = fwd(heat_unit_input(x, t - delta));
        const double du_dt = (tp - tm) / (2.0 * delta);
        const double d2u_dx2 = (xp - 2.0 * center + xm) / (delta * delta);
        acc += weights[m] *
               (std::fabs(center - samples[m].target) + std::fabs(du_dt - d2u_dx2));
    }
    return acc;
}

namespace detail {

inline Sample draw_fitting_sample(FittingTarget target, Rng& rng) {
    while (true) {
        std::vector<double> unit(4);
        for (double& u : unit) u = rng.uniform();
        const std::vector<double> x = fitting_coords(target, unit);
        if (target == FittingTarget::ExponentialRatio && x[0] == 0.0) continue;
        if (target == FittingTarget::LogRatio && !(x[0] / x[1] > 0.0)) continue;
        const double y = fitting_target(target, x);
        // Near-singular draws of the ratio-style targets produce values that
        // dwarf the reachable readout range; redraw to keep the loss finite.
        if (!std::isfinite(y) || std::fabs(y) > 1e6) continue;
        return Sample{unit, unit, y};
    }
}

inline Sample draw_classification_sample(const std::vector<double>& d, Rng& rng) {
    std::vector<double> unit(2);
    for (double& u : unit) u = rng.uniform();
    const double x0 = 2.0 * std::sqrt(unit[0]) - 1.0;
    const double x1 = 2.0 * std::sqrt(unit[1]) - 1.0;
    return Sample{{x0, x1}, unit, static_cast<double>(classification_label(d, x0, x1))};
}

inline Sample draw_heat_sample(Rng& rng) {
    const double x = rng.uniform(0.0, M_PI);
    const double t = rng.uniform(0.0, 1.0);
    return Sample{{x, t}, heat_unit_input(x, t), heat_exact(x, t)};
}

}  // namespace detail

/// Seeded hold-out datasets. Draw order is fixed (classification boundary
/// coefficients, then train samples, then test samples), so equal seeds give
/// identical datasets.
inline Dataset make_dataset(const ProblemSpec& spec) {
    Rng rng(spec.rng_seed);
    Dataset data;
    if (spec.kind == ProblemKind::Classification) {
        data.boundary_coeffs.resize(8);
        for (double& c : data.boundary_coeffs) c = rng.uniform();
    }
    auto draw = [&]() {
        switch (spec.kind) {
            case ProblemKind::Fitting:
                return detail::draw_fitting_sample(spec.target, rng);
            case ProblemKind::Classification:
                return detail::draw_classification_sample(data.boundary_coeffs, rng);
            case ProblemKind::Heat:
                return detail::draw_heat_sample(rng);
        }
        throw std::logic_error("make_dataset: unknown problem kind");
    };
    for (int i = 0; i < spec.train_count; ++i) data.train.push_back(draw());
    for (int i = 0; i < spec.test_count; ++i) data.test.push_back(draw());
    return data;
}

struct TestMetrics {
    std::vector<double> per_point;
    double sum = 0.0;
    double mean = 0.0;
    double median = 0.0;
};

/// Absolute prediction distances on the hold-out set plus their sum, mean
/// and median.
inline TestMetrics evaluate_test(const ForwardFn& fwd, const std::vector<Sample>& test) {
    if (test.empty()) throw std::invalid_argument("evaluate_test: empty test set");
    TestMetrics metrics;
    metrics.per_point.reserve(test.size());
    for (const Sample& s : test) {
        const double d = std::fabs(fwd(s.unit) - s.target);
        metrics.per_point.push_back(d);
        metrics.sum += d;
    }
    metrics.mean = metrics.sum / static_cast<double>(test.size());
    std::vector<double> sorted = metrics.per_point;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    metrics.median = (n % 2 == 1) ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    return metrics;
}

/// Everything an experiment needs for one benchmark: dataset, wiring,
/// Hamiltonian, training loss and the QNN input-angle map.
struct Problem {
    ProblemSpec spec;
    Dataset data;
    int input_dim = 4;
    InputEncoding encoding = InputEncoding::SqrtAcos;
    Hamiltonian hamiltonian;
    std::vector<double> weights;
    double heat_delta = 1e-4;

    double loss_for(const ForwardFn& fwd) const {
        if (spec.kind == ProblemKind::Heat) return heat_loss(fwd, data.train, weights, heat_delta);
        return standard_loss(fwd, data.train, weights);
    }

    TestMetrics evaluate(const ForwardFn& fwd) const { return evaluate_test(fwd, data.test); }

    /// Fraction of test points whose prediction sign matches the label;
    /// meaningful for the classification problem only.
    double accuracy(const ForwardFn& fwd) const {
        int correct = 0;
        for (const Sample& s : data.test) {
            const int predicted = fwd(s.unit) >= 0.0 ? 1 : -1;
            if (predicted == static_cast<int>(s.target)) ++correct;
        }
        return static_cast<double>(correct) / static_cast<double>(data.test.size());
    }

    /// Rx data-injection angles for the QNN baseline: twice the signed
    /// coordinates for the fitting and classification problems, the raw
    /// coordinates for the heat problem.
    std::vector<double> qnn_angles(const std::vector<double>& unit, int num_qubits) const {
        std::vector<double> angles(static_cast<std::size_t>(num_qubits));
        if (spec.kind == ProblemKind::Heat) {
            for (int q = 0; q < num_qubits; ++q) {
                const double u = unit[static_cast<std::size_t>(q) % unit.size()];
                angles[static_cast<std::size_t>(q)] = (q % 2 == 0) ? u * M_PI : u;
            }
            return angles;
        }
        std::vector<double> x;
        if (spec.kind == ProblemKind::Fitting) {
            x = fitting_coords(spec.target, unit);
        } else {
            x = {2.0 * std::sqrt(unit[0]) - 1.0, 2.0 * std::sqrt(unit[1]) - 1.0};
        }
        for (int q = 0; q < num_qubits; ++q)
            angles[static_cast<std::size_t>(q)] = 2.0 * x[static_cast<std::size_t>(q) % x.size()];
        return angles;
    }
};

inline Problem make_problem(const ProblemSpec& spec) {
    Problem problem;
    problem.spec = spec;
    problem.data = make_dataset(spec);
    problem.input_dim = problem_input_dim(spec.kind);
    problem.encoding = problem_encoding(spec.kind);
    problem.hamiltonian = paired_zz_hamiltonian();
    problem.weights = make_loss_weights(problem.data.train.size());
    return problem;
}

/// CSV export of a sample list: raw coordinates, mapped inputs, target.
inline void write_dataset_csv(const std::vector<Sample>& samples, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_dataset_csv: cannot open " + path);
    if (samples.empty()) return;
    const std::size_t raw_dim = samples[0].raw.size();
    const std::size_t unit_dim = samples[0].unit.size();
    for (std::size_t i = 0; i < raw_dim; ++i) out << "raw" << i << ",";
    for (std::size_t i = 0; i < unit_dim; ++i) out << "u" << i << ",";
    out << "target\n";
    char buf[32];
    auto emit = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << buf;
    };
    for (const Sample& s : samples) {
        for (double v : s.raw) {
            emit(v);
            out << ",";
        }
        for (double v : s.unit) {
            emit(v);
            out << ",";
        }
        emit(s.target);
        out << "\n";
    }
}

}  // namespace vqkan
