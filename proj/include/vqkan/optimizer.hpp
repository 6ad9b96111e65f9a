#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

namespace vqkan {

using Objective = std::function<double(const std::vector<double>&)>;

/// Evaluation budget and trust-region radii for the derivative-free
/// optimizer. "Trials" in experiment configs map to max_evals.
struct ObjectiveBudget {
    int max_evals = 1000;
    double initial_step = 0.5;  // rhobeg
    double final_step = 1e-8;   // rhoend
    int eval_count = 0;         // updated as the optimizer runs
};

struct CobylaResult {
    std::vector<double> x_best;
    double f_best = 0.0;
    int evals_used = 0;
    std::vector<double> history;  // objective value of every evaluation, in order
};

namespace detail {

// Powell's COBYLA (linear-interpolation trust region over a simplex of n+1
// points) specialized to the unconstrained case: the merit function is the
// objective itself and the trust-region subproblem reduces to a steepest
// descent step on the interpolated linear model. Control flow follows the
// published algorithm; the simplex-inverse consistency check is probed with
// a few vectors instead of the full O(n^3) product once n exceeds 256.
class CobylaSolver {
public:
    CobylaSolver(const Objective& objective, std::vector<double> x0, ObjectiveBudget budget)
        : objective_(objective),
          budget_(budget),
          n_(static_cast<int>(x0.size())),
          x_(std::move(x0)) {
        if (n_ < 1) throw std::invalid_argument("cobyla_minimize: empty start point");
        if (budget_.max_evals < 1) throw std::invalid_argument("cobyla_minimize: max_evals < 1");
        if (!(budget_.initial_step > 0.0) || !(budget_.final_step > 0.0) ||
            budget_.final_step >= budget_.initial_step)
            throw std::invalid_argument("cobyla_minimize: need 0 < final_step < initial_step");
    }

    CobylaResult run() {
        // Coordinates beyond the evaluation budget can never leave the
        // start point (building the initial simplex already exhausts the
        // budget), so the working dimension is capped to keep the simplex
        // storage proportional to what the run can actually explore.
        const int n = std::min(n_, budget_.max_evals);
        const double rhobeg = budget_.initial_step;
        const double rhoend = budget_.final_step;

        sim_.assign(static_cast<std::size_t>(n) * (n + 1), 0.0);
        simi_.assign(static_cast<std::size_t>(n) * n, 0.0);
        fvals_.assign(static_cast<std::size_t>(n) + 1, 0.0);
        vsig_.assign(n, 0.0);
        veta_.assign(n, 0.0);
        sigbar_.assign(n, 0.0);
        dx_.assign(n, 0.0);
        grad_.assign(n, 0.0);

        double rho = rhobeg;
        for (int j = 0; j < n; ++j) {
            sim(j, j) = rho;
            simi_[static_cast<std::size_t>(j) * n + j] = 1.0 / rho;
        }
        for (int i = 0; i < n; ++i) sim(i, n) = x_[i];

        int jdrop = n;  // apex slot
        bool ibrnch = false;
        bool iflag = false;
        bool ifull = false;
        double parsig = 0.0;
        double prerem = 0.0;
        double f = 0.0;

        enum class Step { Evaluate, FindBest, Finish };
        Step step = Step::Evaluate;

        while (true) {
            switch (step) {
                case Step::Evaluate: {
                    if (evals_ >= budget_.max_evals) {
                        step = Step::Finish;
                        break;
                    }
                    f = evaluate();
                    if (ibrnch) {
                        // Trial point of a trust-region step: measure the actual
                        // reduction against the linear-model prediction.
                        const double trured = (f == fvals_[static_cast<std::size_t>(n)])
                                                  ? 0.0
                                                  : fvals_[static_cast<std::size_t>(n)] - f;
                        if (f == fvals_[static_cast<std::size_t>(n)]) prerem = 0.0;

                        double ratio = trured <= 0.0 ? 1.0 : 0.0;
                        int drop = -1;
                        for (int j = 0; j < n; ++j) {
                            double t = 0.0;
                            for (int i = 0; i < n; ++i) t += simi_row(j)[i] * dx_[i];
                            t = std::fabs(t);
                            if (t > ratio) {
                                drop = j;
                                ratio = t;
                            }
                            sigbar_[static_cast<std::size_t>(j)] = t * vsig_[static_cast<std::size_t>(j)];
                        }
                        // Prefer dropping a vertex that leaves a well-shaped simplex
                        // with edges no longer than delta*rho.
                        double edgmax = 1.1 * rho;
                        int ell = -1;
                        for (int j = 0; j < n; ++j) {
                            if (sigbar_[static_cast<std::size_t>(j)] >= parsig ||
                                sigbar_[static_cast<std::size_t>(j)] >= vsig_[static_cast<std::size_t>(j)]) {
                                double t;
                                if (trured > 0.0) {
                                    double s = 0.0;
                                    for (int i = 0; i < n; ++i) {
                                        const double d = dx_[static_cast<std::size_t>(i)] - sim(i, j);
                                        s += d * d;
                                    }
                                    t = std::sqrt(s);
                                } else {
                                    t = veta_[static_cast<std::size_t>(j)];
                                }
                                if (t > edgmax) {
                                    ell = j;
                                    edgmax = t;
                                }
                            }
                        }
                        if (ell >= 0) drop = ell;
                        if (drop >= 0) {
                            replace_vertex(n, drop);
                            fvals_[static_cast<std::size_t>(drop)] = f;
                            if (trured > 0.0 && trured >= 0.1 * prerem) {
                                step = Step::FindBest;
                                break;
                            }
                        }
                        // Unsuccessful or unusable step: fix geometry or shrink rho.
                        if (!iflag) {
                            ibrnch = false;
                            step = Step::FindBest;
                            break;
                        }
                        if (rho > rhoend) {
                            rho *= 0.5;
                            if (rho <= 1.5 * rhoend) rho = rhoend;
                            step = Step::FindBest;
                            break;
                        }
                        step = Step::Finish;
                        break;
                    }

                    fvals_[static_cast<std::size_t>(jdrop)] = f;
                    if (evals_ <= n + 1) {
                        // Building the initial simplex: swap an improving vertex
                        // into the apex slot so later vertices grow around it.
                        if (jdrop < n) {
                            if (fvals_[static_cast<std::size_t>(n)] <= f) {
                                x_[static_cast<std::size_t>(jdrop)] = sim(jdrop, n);
                            } else {
                                sim(jdrop, n) = x_[static_cast<std::size_t>(jdrop)];
                                std::swap(fvals_[static_cast<std::size_t>(jdrop)],
                                          fvals_[static_cast<std::size_t>(n)]);
                                for (int k = 0; k <= jdrop; ++k) {
                                    sim(jdrop, k) = -rho;
                                    double t = 0.0;
                                    for (int i = k; i <= jdrop; ++i) t -= simi_row(i)[k];
                                    simi_row(jdrop)[k] = t;
                                }
                            }
                        }
                        if (evals_ <= n) {
                            jdrop = evals_ - 1;
                            x_[static_cast<std::size_t>(jdrop)] += rho;
                            step = Step::Evaluate;
                            break;
                        }
                    }
                    ibrnch = true;
                    step = Step::FindBest;
                    break;
                }

                case Step::FindBest: {
                    // Move the lowest vertex into the apex slot.
                    int nbest = n;
                    double fmin = fvals_[static_cast<std::size_t>(n)];
                    for (int j = 0; j < n; ++j) {
                        if (fvals_[static_cast<std::size_t>(j)] < fmin) {
                            nbest = j;
                            fmin = fvals_[static_cast<std::size_t>(j)];
                        }
                    }
                    if (nbest < n) {
                        std::swap(fvals_[static_cast<std::size_t>(nbest)],
                                  fvals_[static_cast<std::size_t>(n)]);
                        for (int i = 0; i < n; ++i) {
                            const double t = sim(i, nbest);
                            sim(i, nbest) = 0.0;
                            sim(i, n) += t;
                            for (int k = 0; k < n; ++k) sim(i, k) -= t;
                        }
                        for (int i = 0; i < n; ++i) {
                            double colsum = 0.0;
                            for (int k = 0; k < n; ++k) colsum += simi_row(k)[i];
                            simi_row(nbest)[i] = -colsum;
                        }
                    }

                    if (inverse_error(n) > 0.1) {
                        step = Step::Finish;  // rounding has corrupted the simplex
                        break;
                    }

                    // Gradient of the linear interpolant through the simplex.
                    for (int i = 0; i < n; ++i) grad_[static_cast<std::size_t>(i)] = 0.0;
                    for (int j = 0; j < n; ++j) {
                        const double df = fvals_[static_cast<std::size_t>(j)] -
                                          fvals_[static_cast<std::size_t>(n)];
                        const double* row = simi_row(j);
                        for (int i = 0; i < n; ++i) grad_[static_cast<std::size_t>(i)] += df * row[i];
                    }

                    parsig = 0.25 * rho;
                    const double pareta = 2.1 * rho;
                    iflag = true;
                    for (int j = 0; j < n; ++j) {
                        double wsig = 0.0, weta = 0.0;
                        for (int i = 0; i < n; ++i) {
                            wsig += simi_row(j)[i] * simi_row(j)[i];
                            weta += sim(i, j) * sim(i, j);
                        }
                        vsig_[static_cast<std::size_t>(j)] = 1.0 / std::sqrt(wsig);
                        veta_[static_cast<std::size_t>(j)] = std::sqrt(weta);
                        if (vsig_[static_cast<std::size_t>(j)] < parsig ||
                            veta_[static_cast<std::size_t>(j)] > pareta)
                            iflag = false;
                    }

                    if (!ibrnch && !iflag) {
                        // Replace the vertex that most degrades the simplex shape
                        // by a fresh point a fraction of rho away from the apex.
                        int drop = -1;
                        double t = pareta;
                        for (int j = 0; j < n; ++j) {
                            if (veta_[static_cast<std::size_t>(j)] > t) {
                                drop = j;
                                t = veta_[static_cast<std::size_t>(j)];
                            }
                        }
                        if (drop < 0) {
                            for (int j = 0; j < n; ++j) {
                                if (vsig_[static_cast<std::size_t>(j)] < t) {
                                    drop = j;
                                    t = vsig_[static_cast<std::size_t>(j)];
                                }
                            }
                        }
                        const double scale = 0.5 * rho * vsig_[static_cast<std::size_t>(drop)];
                        for (int i = 0; i < n; ++i)
                            dx_[static_cast<std::size_t>(i)] = scale * simi_row(drop)[i];
                        double descent = 0.0;
                        for (int i = 0; i < n; ++i)
                            descent -= grad_[static_cast<std::size_t>(i)] * dx_[static_cast<std::size_t>(i)];
                        if (descent < 0.0)
                            for (int i = 0; i < n; ++i) dx_[static_cast<std::size_t>(i)] = -dx_[static_cast<std::size_t>(i)];
                        replace_vertex(n, drop);
                        jdrop = drop;
                        for (int i = 0; i < n; ++i)
                            x_[static_cast<std::size_t>(i)] = sim(i, n) + dx_[static_cast<std::size_t>(i)];
                        ibrnch = false;
                        step = Step::Evaluate;
                        break;
                    }

                    // Trust-region step: steepest descent on the linear model.
                    double gnorm = 0.0;
                    for (int i = 0; i < n; ++i)
                        gnorm += grad_[static_cast<std::size_t>(i)] * grad_[static_cast<std::size_t>(i)];
                    gnorm = std::sqrt(gnorm);
                    if (gnorm > 0.0) {
                        ifull = true;
                        const double scale = -rho / gnorm;
                        for (int i = 0; i < n; ++i)
                            dx_[static_cast<std::size_t>(i)] = scale * grad_[static_cast<std::size_t>(i)];
                    } else {
                        ifull = false;
                        std::fill(dx_.begin(), dx_.end(), 0.0);
                    }
                    if (!ifull) {
                        double dd = 0.0;
                        for (double v : dx_) dd += v * v;
                        if (dd < 0.25 * rho * rho) {
                            ibrnch = true;
                            if (!iflag) {
                                ibrnch = false;
                                step = Step::FindBest;
                                break;
                            }
                            if (rho > rhoend) {
                                rho *= 0.5;
                                if (rho <= 1.5 * rhoend) rho = rhoend;
                                step = Step::FindBest;
                                break;
                            }
                            step = Step::Finish;
                            break;
                        }
                    }
                    prerem = rho * gnorm;  // predicted reduction of the model
                    for (int i = 0; i < n; ++i)
                        x_[static_cast<std::size_t>(i)] = sim(i, n) + dx_[static_cast<std::size_t>(i)];
                    ibrnch = true;
                    step = Step::Evaluate;
                    break;
                }

                case Step::Finish: {
                    CobylaResult result;
                    result.x_best = best_x_;
                    result.f_best = best_f_;
                    result.evals_used = evals_;
                    result.history = std::move(history_);
                    return result;
                }
            }
        }
    }

private:
    double& sim(int i, int j) { return sim_[static_cast<std::size_t>(j) * n_eff() + i]; }
    double* simi_row(int j) { return simi_.data() + static_cast<std::size_t>(j) * n_eff(); }
    int n_eff() const { return std::min(n_, budget_.max_evals); }

    double evaluate() {
        const double f = objective_(x_);
        ++evals_;
        if (evals_ == 1 && !std::isfinite(f))
            throw std::domain_error("cobyla_minimize: objective not finite at start point");
        history_.push_back(f);
        if (evals_ == 1 || f < best_f_) {
            best_f_ = f;
            best_x_ = x_;
        }
        return f;
    }

    // Rank-one update of the inverse after vertex `drop` moves to dx.
    void replace_vertex(int n, int drop) {
        double denom = 0.0;
        for (int i = 0; i < n; ++i) {
            sim(i, drop) = dx_[static_cast<std::size_t>(i)];
            denom += simi_row(drop)[i] * dx_[static_cast<std::size_t>(i)];
        }
        for (int i = 0; i < n; ++i) simi_row(drop)[i] /= denom;
        for (int j = 0; j < n; ++j) {
            if (j == drop) continue;
            double t = 0.0;
            for (int i = 0; i < n; ++i) t += simi_row(j)[i] * dx_[static_cast<std::size_t>(i)];
            for (int i = 0; i < n; ++i) simi_row(j)[i] -= t * simi_row(drop)[i];
        }
    }

    // Consistency of SIMI as the inverse of the simplex edge matrix. Exact
    // product for small n; probe vectors above that to stay O(n^2).
    double inverse_error(int n) {
        double error = 0.0;
        if (n <= 256) {
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    double t = (i == j) ? -1.0 : 0.0;
                    for (int k = 0; k < n; ++k) t += simi_row(i)[k] * sim(k, j);
                    error = std::max(error, std::fabs(t));
                }
            }
            return error;
        }
        std::vector<double> v(static_cast<std::size_t>(n)), sv(static_cast<std::size_t>(n));
        for (int probe = 0; probe < 3; ++probe) {
            for (int i = 0; i < n; ++i) {
                v[static_cast<std::size_t>(i)] =
                    probe == 0 ? 1.0 : (probe == 1 ? ((i & 1) ? -1.0 : 1.0) : (i == 0 ? 1.0 : 0.0));
            }
            for (int i = 0; i < n; ++i) {
                double t = 0.0;
                for (int j = 0; j < n; ++j) t += sim(i, j) * v[static_cast<std::size_t>(j)];
                sv[static_cast<std::size_t>(i)] = t;
            }
            for (int i = 0; i < n; ++i) {
                double t = -v[static_cast<std::size_t>(i)];
                for (int k = 0; k < n; ++k) t += simi_row(i)[k] * sv[static_cast<std::size_t>(k)];
                error = std::max(error, std::fabs(t));
            }
        }
        return error;
    }

    const Objective& objective_;
    ObjectiveBudget budget_;
    int n_;
    std::vector<double> x_;
    std::vector<double> sim_, simi_, fvals_, vsig_, veta_, sigbar_, dx_, grad_;
    std::vector<double> history_;
    std::vector<double> best_x_;
    double best_f_ = std::numeric_limits<double>::infinity();
    int evals_ = 0;
};

}  // namespace detail

/// Minimizes `objective` from `x0` within the evaluation budget. Returns the
/// best point visited; deterministic given x0 and the objective.
inline CobylaResult cobyla_minimize(const Objective& objective, const std::vector<double>& x0,
                                    const ObjectiveBudget& budget) {
    detail::CobylaSolver solver(objective, x0, budget);
    CobylaResult result = solver.run();
    // Coordinates past the budget cap never moved; splice them back in full.
    if (result.x_best.size() < x0.size()) {
        std::vector<double> full = x0;
        std::copy(result.x_best.begin(), result.x_best.end(), full.begin());
        result.x_best = std::move(full);
    }
    return result;
}

/// (f(x+h) - f(x-h)) / 2h.
inline double central_difference(const std::function<double(double)>& f, double x, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("central_difference: h must be positive");
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

/// (f(x+h) - 2 f(x) + f(x-h)) / h^2. Steps below 1e-6 are rejected: the
/// numerator cancellation would drown the estimate in rounding noise.
inline double second_central_difference(const std::function<double(double)>& f, double x,
                                        double h) {
    if (!(h >= 1e-6)) throw std::invalid_argument("second_central_difference: require h >= 1e-6");
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

}  // namespace vqkan
