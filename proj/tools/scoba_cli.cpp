#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "scoba/allocator.hpp"
#include "scoba/harness.hpp"
#include "scoba/instance_io.hpp"

namespace {

// Writes to the path when given, otherwise to stdout.
template <class Fn>
void with_output(const std::string& path, Fn&& fn) {
    if (path.empty()) {
        fn(std::cout);
        return;
    }
    std::ofstream out(path);
    if (!out) throw scoba::InputError("cannot open output file: " + path);
    fn(out);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"scoba: stochastic conflict-based task allocation benchmarks"};
    app.require_subcommand(1);

    std::string config_path, out_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> trials, threads;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--out", out_path, "output CSV path (default: stdout)");
        cmd->add_option("--seed", seed, "override the base RNG seed");
        cmd->add_option("--trials", trials, "override the trial count");
        cmd->add_option("--threads", threads, "trial worker threads");
    };

    auto* run = app.add_subcommand("run", "run one trial configuration");
    run->add_option("config", config_path, "trial config file")->required();
    add_common(run);

    auto* sweep = app.add_subcommand("sweep", "run a parameter sweep");
    sweep->add_option("config", config_path, "sweep config file")->required();
    add_common(sweep);

    auto* timing = app.add_subcommand("timing", "planner timing reports");
    std::string timing_domain = "both";
    timing->add_option("--domain", timing_domain, "conveyor, drone, or both");
    add_common(timing);

    auto* oracle = app.add_subcommand("oracle-check",
                                      "competitive performance vs the perfect-grasp oracle");
    add_common(oracle);

    auto* solve = app.add_subcommand("solve", "allocate one instance file");
    std::string instance_path, trace_path;
    std::optional<int> budget;
    bool truncate = false;
    solve->add_option("instance", instance_path, "problem instance file")->required();
    solve->add_option("--budget", budget, "conflict budget (default: unlimited)");
    solve->add_flag("--truncate", truncate, "truncate the planning horizon");
    solve->add_option("--trace", trace_path, "write the search trace to this file");
    solve->add_option("--out", out_path, "output path (default: stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            auto config = scoba::harness::parse_config_file(config_path);
            if (seed) config.seed = *seed;
            if (trials) config.trials = *trials;
            if (threads) config.threads = *threads;
            const auto metrics = scoba::harness::run_trials(config);
            with_output(out_path, [&](std::ostream& out) {
                scoba::harness::write_metrics_csv(out, config, metrics);
            });
        } else if (sweep->parsed()) {
            auto spec = scoba::harness::parse_sweep_file(config_path);
            if (seed) spec.base.seed = *seed;
            if (trials) spec.base.trials = *trials;
            if (threads) spec.base.threads = *threads;
            const auto rows = scoba::harness::run_sweep(spec);
            with_output(out_path, [&](std::ostream& out) {
                scoba::harness::write_sweep_csv(out, rows);
            });
        } else if (timing->parsed()) {
            const std::uint64_t s = seed.value_or(0);
            with_output(out_path, [&](std::ostream& out) {
                if (timing_domain == "conveyor" || timing_domain == "both") {
                    const auto rows = scoba::harness::conveyor_tree_timing(
                        {40, 80, 120, 160, 200}, trials.value_or(10), s);
                    scoba::harness::write_tree_timing_csv(out, rows);
                }
                if (timing_domain == "drone" || timing_domain == "both") {
                    const auto rows = scoba::harness::drone_alloc_timing(
                        {{3, 18}, {5, 15}, {5, 30}}, {20, 50, 100}, trials.value_or(50), s,
                        500);
                    scoba::harness::write_alloc_timing_csv(out, rows);
                }
                if (timing_domain != "conveyor" && timing_domain != "drone" &&
                    timing_domain != "both") {
                    throw scoba::InputError("unknown timing domain: " + timing_domain);
                }
            });
        } else if (oracle->parsed()) {
            const auto report = scoba::harness::oracle_check(trials.value_or(100),
                                                             seed.value_or(0), &std::cerr);
            with_output(out_path, [&](std::ostream& out) {
                scoba::harness::write_oracle_csv(out, report);
            });
            std::cerr << "all cells <= 1e-3: " << (report.all_small ? "yes" : "no") << "\n";
            std::cerr << "zero at speed 0.04: " << (report.zero_at_slowest ? "yes" : "no")
                      << "\n";
        } else if (solve->parsed()) {
            const auto instance = scoba::read_instance_file(instance_path);
            scoba::AllocateOptions options;
            options.conflict_budget = budget;
            options.truncate = truncate;
            std::ofstream trace;
            if (!trace_path.empty()) {
                trace.open(trace_path);
                options.trace = &trace;
            }
            const auto result = scoba::allocate(instance, options);
            with_output(out_path, [&](std::ostream& out) {
                out << "agent,task,attempt_time\n";
                for (const auto& [agent, list] : result.allocation.assignments) {
                    for (const auto& [task, t] : list) {
                        out << agent << "," << task << "," << t << "\n";
                    }
                }
                out << "# cost " << result.cost << "\n";
                out << "# expansions " << result.stats.expansions << "\n";
            });
        }
    } catch (const scoba::ResourceError& e) {
        std::cerr << "resource error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
