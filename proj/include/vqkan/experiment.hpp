#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "vqkan/model.hpp"
#include "vqkan/problems.hpp"
#include "vqkan/qnn.hpp"
#include "vqkan/rng.hpp"

namespace vqkan {

enum class Method { AdaptiveVqkan, Qnn };

struct RunConfig {
    std::string problem = "fitting";
    Method method = Method::AdaptiveVqkan;
    int way = 2;
    PoolFlavor pool_flavor = PoolFlavor::Restricted;
    std::string initial_ansatz;  // empty = per-problem default (X0; Z0 for heat)
    int num_layers = 1;
    int epochs = 25;
    int trials = 1000;
    int attempts = 10;
    std::uint64_t base_seed = 1;
    std::string output_dir = "out";
    int jobs = 1;
};

inline ProblemSpec parse_problem_name(const std::string& name) {
    ProblemSpec spec;
    if (name == "fitting") {
        spec.kind = ProblemKind::Fitting;
        spec.target = FittingTarget::ExpSinSum;
    } else if (name == "fitting-exp") {
        spec.kind = ProblemKind::Fitting;
        spec.target = FittingTarget::ExponentialRatio;
    } else if (name == "fitting-log") {
        spec.kind = ProblemKind::Fitting;
        spec.target = FittingTarget::LogRatio;
    } else if (name == "fitting-frac") {
        spec.kind = ProblemKind::Fitting;
        spec.target = FittingTarget::Fractional;
    } else if (name == "fitting-sphere") {
        spec.kind = ProblemKind::Fitting;
        spec.target = FittingTarget::SphereRadius;
    } else if (name == "classification") {
        spec.kind = ProblemKind::Classification;
    } else if (name == "heat") {
        spec.kind = ProblemKind::Heat;
    } else {
        throw std::invalid_argument("unknown problem '" + name + "'");
    }
    return spec;
}

inline std::string default_initial_ansatz(ProblemKind kind) {
    return kind == ProblemKind::Heat ? "Z0" : "X0";
}

inline std::string method_name(Method m) { return m == Method::AdaptiveVqkan ? "adaptive" : "qnn"; }

inline Method parse_method_name(const std::string& name) {
    if (name == "adaptive") return Method::AdaptiveVqkan;
    if (name == "qnn") return Method::Qnn;
    throw std::invalid_argument("unknown method '" + name + "' (expected adaptive|qnn)");
}

struct AttemptResult {
    int attempt = 0;
    std::uint64_t seed = 0;
    std::vector<EpochRecord> records;
    bool converged = false;
    std::vector<double> final_test_distances;
    double final_test_sum = 0.0;
    double final_loss = 0.0;
    int num_parametric_gates = 0;
    long long objective_evals = 0;
    double wall_seconds = 0.0;
    double accuracy = std::numeric_limits<double>::quiet_NaN();  // classification only
};

struct RunRecord {
    RunConfig config;
    std::vector<AttemptResult> attempts;
    std::vector<std::string> warnings;
};

namespace detail {

struct Stats {
    double mean = 0.0, median = 0.0, min = 0.0, max = 0.0;
};

inline Stats stats_of(std::vector<double> values) {
    Stats s;
    if (values.empty()) return s;
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    std::sort(values.begin(), values.end());
    s.min = values.front();
    s.max = values.back();
    const std::size_t n = values.size();
    s.median = (n % 2 == 1) ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
    return s;
}

inline AttemptResult run_attempt(const RunConfig& config, const ProblemSpec& base_spec,
                                 int attempt) {
    const auto start = std::chrono::steady_clock::now();
    AttemptResult result;
    result.attempt = attempt;
    result.seed = config.base_seed + static_cast<std::uint64_t>(attempt);

    ProblemSpec spec = base_spec;
    spec.rng_seed = result.seed;
    const Problem problem = make_problem(spec);

    constexpr int kNumQubits = 4;

    if (config.method == Method::Qnn) {
        QnnModel qnn = make_qnn(kNumQubits, 3, problem.hamiltonian,
                                [&problem](const std::vector<double>& unit) {
                                    return problem.qnn_angles(unit, kNumQubits);
                                });
        const QnnLossFn loss_fn = [&problem](const QnnModel& m) {
            return problem.loss_for([&m](const std::vector<double>& u) { return qnn_forward(m, u); });
        };
        const ObjectiveBudget budget{config.trials, 0.5, 1e-8, 0};
        QnnTrainResult trained =
            qnn_train(qnn, loss_fn, budget, mix_seed(result.seed, 1));
        const ForwardFn fwd = [&trained](const std::vector<double>& u) {
            return qnn_forward(trained.model, u);
        };
        const TestMetrics metrics = problem.evaluate(fwd);
        EpochRecord record;
        record.epoch = 0;
        record.loss_before = trained.loss_history.empty() ? 0.0 : trained.loss_history.front();
        record.loss_after = trained.final_loss;
        record.num_terms = static_cast<int>(trained.model.thetas.size());
        record.test_distance_sum = metrics.sum;
        record.num_objective_evals = trained.evals_used;
        result.records.push_back(record);
        result.final_test_distances = metrics.per_point;
        result.final_test_sum = metrics.sum;
        result.final_loss = trained.final_loss;
        result.num_parametric_gates = static_cast<int>(trained.model.thetas.size());
        result.objective_evals = trained.evals_used;
        if (spec.kind == ProblemKind::Classification) result.accuracy = problem.accuracy(fwd);
    } else {
        VqkanModel model(kNumQubits, config.num_layers, problem.hamiltonian, problem.input_dim,
                         SplineGrid(8, 8), problem.encoding);
        const OperatorPool pool = generate_pool(kNumQubits, config.pool_flavor);
        const ModelLossFn loss_fn = [&problem](const VqkanModel& m) {
            return problem.loss_for(
                [&m](const std::vector<double>& u) { return forward(m, u).value; });
        };
        const ModelTestFn test_fn = [&problem](const VqkanModel& m) {
            return problem
                .evaluate([&m](const std::vector<double>& u) { return forward(m, u).value; })
                .sum;
        };
        AdaptiveConfig adaptive;
        adaptive.way = config.way == 1 ? SelectionWay::MaxGradient : SelectionWay::MinLoss;
        adaptive.epochs = config.epochs;
        adaptive.trials_per_epoch = config.trials;
        adaptive.initial_ansatz = config.initial_ansatz.empty()
                                      ? default_initial_ansatz(spec.kind)
                                      : config.initial_ansatz;
        const AdaptiveRunResult adaptive_result =
            run_adaptive(model, pool, loss_fn, test_fn, adaptive);
        result.records = adaptive_result.records;
        result.converged = adaptive_result.converged;
        const ForwardFn fwd = [&model](const std::vector<double>& u) {
            return forward(model, u).value;
        };
        const TestMetrics metrics = problem.evaluate(fwd);
        result.final_test_distances = metrics.per_point;
        result.final_test_sum = metrics.sum;
        result.final_loss = result.records.empty() ? 0.0 : result.records.back().loss_after;
        result.num_parametric_gates = model.num_terms();
        for (const EpochRecord& r : result.records) result.objective_evals += r.num_objective_evals;
        if (spec.kind == ProblemKind::Classification) result.accuracy = problem.accuracy(fwd);
    }

    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

inline void append_csv_value(std::string& line, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    line += buf;
}

}  // namespace detail

inline void validate(const RunConfig& config) {
    if (config.epochs < 1 || config.trials < 1 || config.attempts < 1)
        throw std::invalid_argument("run: epochs, trials and attempts must all be >= 1");
    if (config.way != 1 && config.way != 2)
        throw std::invalid_argument("run: way must be 1 or 2");
    if (config.num_layers < 1) throw std::invalid_argument("run: num_layers must be >= 1");
    if (config.jobs < 1) throw std::invalid_argument("run: jobs must be >= 1");
    parse_problem_name(config.problem);
    if (!config.initial_ansatz.empty()) PauliString::parse(config.initial_ansatz);
}

/// Executes all attempts of a configuration. Attempt a is seeded with
/// base_seed + a and is fully self-contained, so results do not depend on
/// the number of worker threads.
inline RunRecord run(const RunConfig& config) {
    validate(config);
    const ProblemSpec base_spec = parse_problem_name(config.problem);

    RunRecord record;
    record.config = config;
    if (config.method == Method::Qnn)
        record.warnings.push_back(
            "method qnn ignores --way, --pool and --initial-ansatz settings");

    record.attempts.resize(static_cast<std::size_t>(config.attempts));
    if (config.jobs == 1 || config.attempts == 1) {
        for (int a = 0; a < config.attempts; ++a)
            record.attempts[static_cast<std::size_t>(a)] = detail::run_attempt(config, base_spec, a);
    } else {
        std::atomic<int> next{0};
        auto worker = [&]() {
            while (true) {
                const int a = next.fetch_add(1);
                if (a >= config.attempts) break;
                record.attempts[static_cast<std::size_t>(a)] =
                    detail::run_attempt(config, base_spec, a);
            }
        };
        std::vector<std::thread> threads;
        const int n_threads = std::min(config.jobs, config.attempts);
        threads.reserve(static_cast<std::size_t>(n_threads));
        for (int i = 0; i < n_threads; ++i) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    return record;
}

inline nlohmann::json config_to_json(const RunConfig& c) {
    return nlohmann::json{{"problem", c.problem},
                          {"method", method_name(c.method)},
                          {"way", c.way},
                          {"pool", c.pool_flavor == PoolFlavor::Restricted ? "restricted" : "extended"},
                          {"initial_ansatz", c.initial_ansatz},
                          {"num_layers", c.num_layers},
                          {"epochs", c.epochs},
                          {"trials", c.trials},
                          {"attempts", c.attempts},
                          {"base_seed", c.base_seed},
                          {"output_dir", c.output_dir},
                          {"jobs", c.jobs}};
}

inline RunConfig config_from_json(const nlohmann::json& j) {
    RunConfig c;
    if (j.contains("problem")) c.problem = j.at("problem").get<std::string>();
    if (j.contains("method")) c.method = parse_method_name(j.at("method").get<std::string>());
    if (j.contains("way")) c.way = j.at("way").get<int>();
    if (j.contains("pool")) {
        const std::string p = j.at("pool").get<std::string>();
        if (p == "restricted") c.pool_flavor = PoolFlavor::Restricted;
        else if (p == "extended") c.pool_flavor = PoolFlavor::Extended;
        else throw std::invalid_argument("unknown pool '" + p + "'");
    }
    if (j.contains("initial_ansatz")) c.initial_ansatz = j.at("initial_ansatz").get<std::string>();
    if (j.contains("num_layers")) c.num_layers = j.at("num_layers").get<int>();
    if (j.contains("epochs")) c.epochs = j.at("epochs").get<int>();
    if (j.contains("trials")) c.trials = j.at("trials").get<int>();
    if (j.contains("attempts")) c.attempts = j.at("attempts").get<int>();
    if (j.contains("base_seed")) c.base_seed = j.at("base_seed").get<std::uint64_t>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("jobs")) c.jobs = j.at("jobs").get<int>();
    return c;
}

/// Writes epochs.csv, test_points.csv, summary.json, per-figure plot data
/// and the per-attempt dataset CSVs into `dir`.
inline void write_outputs(const RunRecord& record, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    {
        std::ofstream out(dir + "/epochs.csv");
        if (!out) throw std::runtime_error("write_outputs: cannot write to " + dir);
        out << "attempt,epoch,loss_before,loss_after,chosen_operator,num_terms,test_sum\n";
        for (const AttemptResult& a : record.attempts) {
            for (const EpochRecord& r : a.records) {
                std::string line = std::to_string(a.attempt) + "," + std::to_string(r.epoch) + ",";
                detail::append_csv_value(line, r.loss_before);
                line += ",";
                detail::append_csv_value(line, r.loss_after);
                line += "," + r.chosen_operator + "," + std::to_string(r.num_terms) + ",";
                detail::append_csv_value(line, r.test_distance_sum);
                out << line << "\n";
            }
        }
    }
    {
        std::ofstream out(dir + "/test_points.csv");
        out << "attempt,point,distance\n";
        for (const AttemptResult& a : record.attempts) {
            for (std::size_t i = 0; i < a.final_test_distances.size(); ++i) {
                std::string line =
                    std::to_string(a.attempt) + "," + std::to_string(i) + ",";
                detail::append_csv_value(line, a.final_test_distances[i]);
                out << line << "\n";
            }
        }
    }

    // Per-epoch aggregate curves (attempts may stop early on convergence).
    int max_epochs = 0;
    for (const AttemptResult& a : record.attempts)
        max_epochs = std::max(max_epochs, static_cast<int>(a.records.size()));
    std::vector<detail::Stats> loss_curve, test_curve;
    for (int e = 0; e < max_epochs; ++e) {
        std::vector<double> losses, sums;
        for (const AttemptResult& a : record.attempts) {
            if (e < static_cast<int>(a.records.size())) {
                losses.push_back(a.records[static_cast<std::size_t>(e)].loss_after);
                sums.push_back(a.records[static_cast<std::size_t>(e)].test_distance_sum);
            }
        }
        loss_curve.push_back(detail::stats_of(losses));
        test_curve.push_back(detail::stats_of(sums));
    }

    auto write_curve = [&](const std::string& path, const std::vector<detail::Stats>& curve) {
        std::ofstream out(path);
        out << "epoch,mean,median,min,max\n";
        for (std::size_t e = 0; e < curve.size(); ++e) {
            std::string line = std::to_string(e) + ",";
            detail::append_csv_value(line, curve[e].mean);
            line += ",";
            detail::append_csv_value(line, curve[e].median);
            line += ",";
            detail::append_csv_value(line, curve[e].min);
            line += ",";
            detail::append_csv_value(line, curve[e].max);
            out << line << "\n";
        }
    };
    write_curve(dir + "/plot_loss_vs_epoch.csv", loss_curve);
    write_curve(dir + "/plot_test_sum_vs_epoch.csv", test_curve);

    {
        std::ofstream out(dir + "/plot_test_distances.csv");
        out << "point,mean,median\n";
        std::size_t max_points = 0;
        for (const AttemptResult& a : record.attempts)
            max_points = std::max(max_points, a.final_test_distances.size());
        for (std::size_t p = 0; p < max_points; ++p) {
            std::vector<double> values;
            for (const AttemptResult& a : record.attempts)
                if (p < a.final_test_distances.size()) values.push_back(a.final_test_distances[p]);
            const detail::Stats s = detail::stats_of(values);
            std::string line = std::to_string(p) + ",";
            detail::append_csv_value(line, s.mean);
            line += ",";
            detail::append_csv_value(line, s.median);
            out << line << "\n";
        }
    }

    {
        fs::create_directories(dir + "/datasets");
        const ProblemSpec base_spec = parse_problem_name(record.config.problem);
        for (const AttemptResult& a : record.attempts) {
            ProblemSpec spec = base_spec;
            spec.rng_seed = a.seed;
            const Dataset data = make_dataset(spec);
            write_dataset_csv(data.train,
                              dir + "/datasets/attempt_" + std::to_string(a.attempt) + "_train.csv");
            write_dataset_csv(data.test,
                              dir + "/datasets/attempt_" + std::to_string(a.attempt) + "_test.csv");
        }
    }

    std::vector<double> sums, losses, gates, evals;
    for (const AttemptResult& a : record.attempts) {
        sums.push_back(a.final_test_sum);
        losses.push_back(a.final_loss);
        gates.push_back(static_cast<double>(a.num_parametric_gates));
        evals.push_back(static_cast<double>(a.objective_evals));
    }
    const detail::Stats sum_stats = detail::stats_of(sums);
    const detail::Stats loss_stats = detail::stats_of(losses);
    const detail::Stats gate_stats = detail::stats_of(gates);
    const detail::Stats eval_stats = detail::stats_of(evals);

    nlohmann::json summary;
    summary["schema_version"] = 1;
    summary["config"] = config_to_json(record.config);
    summary["warnings"] = record.warnings;
    nlohmann::json attempts = nlohmann::json::array();
    for (const AttemptResult& a : record.attempts) {
        nlohmann::json ja{{"attempt", a.attempt},
                          {"seed", a.seed},
                          {"converged", a.converged},
                          {"final_loss", a.final_loss},
                          {"final_test_sum", a.final_test_sum},
                          {"num_parametric_gates", a.num_parametric_gates},
                          {"objective_evals", a.objective_evals},
                          {"wall_seconds", a.wall_seconds},
                          {"epochs_run", a.records.size()}};
        if (!std::isnan(a.accuracy)) ja["accuracy"] = a.accuracy;
        attempts.push_back(ja);
    }
    summary["attempts"] = attempts;
    summary["aggregate"] = {
        {"test_sum",
         {{"mean", sum_stats.mean}, {"median", sum_stats.median}, {"min", sum_stats.min}, {"max", sum_stats.max}}},
        {"final_loss",
         {{"mean", loss_stats.mean}, {"median", loss_stats.median}, {"min", loss_stats.min}, {"max", loss_stats.max}}},
        {"parametric_gates", {{"mean", gate_stats.mean}, {"min", gate_stats.min}, {"max", gate_stats.max}}},
        {"objective_evals", {{"mean", eval_stats.mean}, {"min", eval_stats.min}, {"max", eval_stats.max}}}};

    nlohmann::json curves;
    curves["epoch"] = nlohmann::json::array();
    curves["loss_mean"] = nlohmann::json::array();
    curves["loss_min"] = nlohmann::json::array();
    curves["loss_max"] = nlohmann::json::array();
    curves["test_sum_mean"] = nlohmann::json::array();
    curves["test_sum_median"] = nlohmann::json::array();
    for (int e = 0; e < max_epochs; ++e) {
        curves["epoch"].push_back(e);
        curves["loss_mean"].push_back(loss_curve[static_cast<std::size_t>(e)].mean);
        curves["loss_min"].push_back(loss_curve[static_cast<std::size_t>(e)].min);
        curves["loss_max"].push_back(loss_curve[static_cast<std::size_t>(e)].max);
        curves["test_sum_mean"].push_back(test_curve[static_cast<std::size_t>(e)].mean);
        curves["test_sum_median"].push_back(test_curve[static_cast<std::size_t>(e)].median);
    }
    summary["curves"] = curves;

    std::ofstream out(dir + "/summary.json");
    out << summary.dump(2) << "\n";
}

/// Rebuilds the parts of a run record that comparisons need from a written
/// summary.json.
inline RunRecord load_summary(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_summary: cannot open " + path);
    nlohmann::json j;
    in >> j;
    RunRecord record;
    record.config = config_from_json(j.at("config"));
    for (const auto& ja : j.at("attempts")) {
        AttemptResult a;
        a.attempt = ja.at("attempt").get<int>();
        a.seed = ja.at("seed").get<std::uint64_t>();
        a.converged = ja.at("converged").get<bool>();
        a.final_loss = ja.at("final_loss").get<double>();
        a.final_test_sum = ja.at("final_test_sum").get<double>();
        a.num_parametric_gates = ja.at("num_parametric_gates").get<int>();
        a.objective_evals = ja.at("objective_evals").get<long long>();
        if (ja.contains("accuracy")) a.accuracy = ja.at("accuracy").get<double>();
        record.attempts.push_back(std::move(a));
    }
    return record;
}

struct CompareReport {
    std::string problem;
    std::string name_a, name_b;
    struct Metric {
        std::string name;
        double a = 0.0, b = 0.0;
        std::string winner;  // "a", "b" or "tie"
    };
    std::vector<Metric> metrics;

    std::string to_text() const {
        std::string text = "comparison on problem '" + problem + "' (" + name_a + " vs " +
                           name_b + ")\n";
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%-28s %14s %14s %8s\n", "metric", name_a.c_str(),
                      name_b.c_str(), "winner");
        text += buf;
        for (const Metric& m : metrics) {
            std::snprintf(buf, sizeof(buf), "%-28s %14.6g %14.6g %8s\n", m.name.c_str(), m.a, m.b,
                          m.winner.c_str());
            text += buf;
        }
        return text;
    }

    nlohmann::json to_json() const {
        nlohmann::json out{{"problem", problem}, {"a", name_a}, {"b", name_b}};
        nlohmann::json ms = nlohmann::json::array();
        for (const Metric& m : metrics)
            ms.push_back({{"metric", m.name}, {"a", m.a}, {"b", m.b}, {"winner", m.winner}});
        out["metrics"] = ms;
        return out;
    }
};

/// Side-by-side table of test-distance, evaluation-count and gate-count
/// aggregates; lower wins each metric. Records must share the problem.
inline CompareReport compare(const RunRecord& a, const RunRecord& b) {
    if (a.config.problem != b.config.problem)
        throw std::invalid_argument("compare: records solve different problems");
    CompareReport report;
    report.problem = a.config.problem;
    report.name_a = method_name(a.config.method);
    report.name_b = method_name(b.config.method);
    if (report.name_a == report.name_b) {
        report.name_a += "(a)";
        report.name_b += "(b)";
    }

    auto gather = [](const RunRecord& r, auto proj) {
        std::vector<double> v;
        for (const AttemptResult& att : r.attempts) v.push_back(proj(att));
        return v;
    };
    const detail::Stats sum_a = detail::stats_of(gather(a, [](const AttemptResult& x) { return x.final_test_sum; }));
    const detail::Stats sum_b = detail::stats_of(gather(b, [](const AttemptResult& x) { return x.final_test_sum; }));
    const detail::Stats ev_a = detail::stats_of(gather(a, [](const AttemptResult& x) { return double(x.objective_evals); }));
    const detail::Stats ev_b = detail::stats_of(gather(b, [](const AttemptResult& x) { return double(x.objective_evals); }));
    const detail::Stats g_a = detail::stats_of(gather(a, [](const AttemptResult& x) { return double(x.num_parametric_gates); }));
    const detail::Stats g_b = detail::stats_of(gather(b, [](const AttemptResult& x) { return double(x.num_parametric_gates); }));

    auto add = [&report](const std::string& name, double va, double vb) {
        CompareReport::Metric m;
        m.name = name;
        m.a = va;
        m.b = vb;
        m.winner = va < vb ? "a" : (vb < va ? "b" : "tie");
        report.metrics.push_back(m);
    };
    add("test_sum_mean", sum_a.mean, sum_b.mean);
    add("test_sum_median", sum_a.median, sum_b.median);
    add("test_sum_min", sum_a.min, sum_b.min);
    add("test_sum_max", sum_a.max, sum_b.max);
    add("objective_evals_mean", ev_a.mean, ev_b.mean);
    add("parametric_gates_mean", g_a.mean, g_b.mean);
    return report;
}

}  // namespace vqkan
