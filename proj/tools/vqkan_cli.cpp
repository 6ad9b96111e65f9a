// Command-line experiment runner: `vqkan run` executes a configured set of
// training attempts and writes analysis-ready CSV/JSON, `vqkan compare`
// tabulates two finished runs against each other.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "vqkan/experiment.hpp"

namespace {

vqkan::RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    nlohmann::json j;
    in >> j;
    return vqkan::config_from_json(j);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive VQKAN experiment runner"};
    app.require_subcommand(1);

    // --- run ---
    auto* run_cmd = app.add_subcommand("run", "execute a run and write outputs");
    std::string config_path;
    run_cmd->add_option("-c,--config", config_path, "JSON config file (flags override it)");
    std::string problem, method, pool, initial_ansatz, out_dir;
    int way = 0, epochs = 0, trials = 0, attempts = 0, layers = 0, jobs = 0;
    std::uint64_t seed = 0;
    auto* problem_opt = run_cmd->add_option("-p,--problem", problem,
                                            "fitting|fitting-exp|fitting-log|fitting-frac|"
                                            "fitting-sphere|classification|heat");
    auto* method_opt = run_cmd->add_option("-m,--method", method, "adaptive|qnn");
    auto* way_opt = run_cmd->add_option("-w,--way", way, "operator selection way (1 or 2)");
    auto* pool_opt = run_cmd->add_option("--pool", pool, "restricted|extended");
    auto* ansatz_opt =
        run_cmd->add_option("--initial-ansatz", initial_ansatz, "initial operator, e.g. X0");
    auto* layers_opt = run_cmd->add_option("--layers", layers, "number of ansatz layers");
    auto* epochs_opt = run_cmd->add_option("-e,--epochs", epochs, "adaptive epochs");
    auto* trials_opt = run_cmd->add_option("-t,--trials", trials, "objective evaluations per epoch");
    auto* attempts_opt = run_cmd->add_option("-a,--attempts", attempts, "independent attempts");
    auto* seed_opt = run_cmd->add_option("-s,--seed", seed, "base seed (attempt i uses seed+i)");
    auto* out_opt = run_cmd->add_option("-o,--out", out_dir, "output directory");
    auto* jobs_opt = run_cmd->add_option("-j,--jobs", jobs, "parallel attempt workers");

    // --- compare ---
    auto* compare_cmd = app.add_subcommand("compare", "compare two summary.json files");
    std::string summary_a, summary_b, report_path;
    compare_cmd->add_option("a", summary_a, "first summary.json")->required();
    compare_cmd->add_option("b", summary_b, "second summary.json")->required();
    compare_cmd->add_option("-o,--out", report_path, "also write the report as JSON");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            vqkan::RunConfig config;
            if (!config_path.empty()) config = load_config_file(config_path);
            if (*problem_opt) config.problem = problem;
            if (*method_opt) config.method = vqkan::parse_method_name(method);
            if (*way_opt) config.way = way;
            if (*pool_opt) {
                if (pool == "restricted") config.pool_flavor = vqkan::PoolFlavor::Restricted;
                else if (pool == "extended") config.pool_flavor = vqkan::PoolFlavor::Extended;
                else throw std::invalid_argument("unknown pool '" + pool + "'");
            }
            if (*ansatz_opt) config.initial_ansatz = initial_ansatz;
            if (*layers_opt) config.num_layers = layers;
            if (*epochs_opt) config.epochs = epochs;
            if (*trials_opt) config.trials = trials;
            if (*attempts_opt) config.attempts = attempts;
            if (*seed_opt) config.base_seed = seed;
            if (*out_opt) config.output_dir = out_dir;
            if (*jobs_opt) config.jobs = jobs;

            const vqkan::RunRecord record = vqkan::run(config);
            for (const std::string& w : record.warnings) std::cerr << "warning: " << w << "\n";
            vqkan::write_outputs(record, config.output_dir);

            double best = 0.0, mean = 0.0;
            for (const vqkan::AttemptResult& a : record.attempts) {
                mean += a.final_test_sum / static_cast<double>(record.attempts.size());
                if (a.attempt == 0 || a.final_test_sum < best) best = a.final_test_sum;
            }
            std::printf("%s/%s: %d attempt(s), test-distance sum mean %.4f best %.4f -> %s\n",
                        config.problem.c_str(), vqkan::method_name(config.method).c_str(),
                        config.attempts, mean, best, config.output_dir.c_str());
        } else if (*compare_cmd) {
            const vqkan::RunRecord a = vqkan::load_summary(summary_a);
            const vqkan::RunRecord b = vqkan::load_summary(summary_b);
            const vqkan::CompareReport report = vqkan::compare(a, b);
            std::cout << report.to_text();
            if (!report_path.empty()) {
                std::ofstream out(report_path);
                if (!out) throw std::runtime_error("cannot write " + report_path);
                out << report.to_json().dump(2) << "\n";
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
