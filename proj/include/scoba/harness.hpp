#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "scoba/baselines/mcts.hpp"
#include "scoba/baselines/qlearning.hpp"
#include "scoba/core.hpp"

namespace scoba::harness {

enum class Domain { Conveyor, Drone };
enum class Planner { Scoba, Edd, Hungarian, Mcts, Qlearning };

std::string to_string(Domain d);
std::string to_string(Planner p);
Domain parse_domain(const std::string& s);
Planner parse_planner(const std::string& s);

struct TrialConfig {
    Domain domain = Domain::Conveyor;
    Planner planner = Planner::Scoba;
    TimeStep horizon = 500;  // conveyor default; drone default is 100
    int trials = 100;
    std::uint64_t seed = 0;
    int threads = 1;

    // conveyor scenario
    double grasp_prob = 0.75;
    double speed = 0.07;
    double new_object_prob = 0.75;

    // drone scenario
    int depots = 3;
    int drones = 18;
    double new_request_prob = 0.5;
    std::string city_file;  // optional layout override

    // planner parameters
    std::optional<int> conflict_budget = 500;
    baselines::MctsConfig mcts;
    baselines::QLearnConfig qlearn;

    // per-trial event log CSV; written as <prefix><trial>.csv when set
    std::string event_log_prefix;
};

struct TrialMetrics {
    long total_tasks = 0;
    long unsuccessful = 0;
    double fraction = 0.0;
    double planner_time_mean = 0.0;  // seconds per planner invocation
    double planner_time_max = 0.0;
    long planner_invocations = 0;
    std::uint64_t seed = 0;
};

/// Key-value config files: one `key value` pair per line, '#' comments.
/// Unknown keys raise InputError.
TrialConfig parse_config(std::istream& in);
TrialConfig parse_config_file(const std::string& path);

/// Simulates one trial: planning interleaved with execution, replanning on
/// every event. Identical (config, trial_index) reproduce identical metrics.
TrialMetrics run_trial(const TrialConfig& config, int trial_index);

/// All trials of the config, optionally across a thread pool. Result order
/// is by trial index regardless of scheduling.
std::vector<TrialMetrics> run_trials(const TrialConfig& config);

void write_metrics_csv(std::ostream& out, const TrialConfig& config,
                       const std::vector<TrialMetrics>& metrics);

struct SweepSpec {
    TrialConfig base;
    std::string param;           // swept scenario parameter
    std::vector<double> values;  // in report order
    std::vector<Planner> planners;
};

SweepSpec parse_sweep(std::istream& in);
SweepSpec parse_sweep_file(const std::string& path);

struct SweepRow {
    Domain domain;
    Planner planner;
    std::string param;
    double value;
    double mean_fraction;
    double stderr_fraction;
    double mean_planner_time;
    int trials;
};

/// One row per (planner, value): paired seeds across planners so that task
/// streams match and differences isolate the planner.
std::vector<SweepRow> run_sweep(const SweepSpec& spec);
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

/// Applies a sweep parameter by name (speed, grasp_prob, new_object_prob,
/// new_request_prob, drones, depots, horizon, trials, conflict_budget).
void set_parameter(TrialConfig& config, const std::string& name, double value);

struct TreeTimingRow {
    int objects;
    double mean_nodes;
    double mean_seconds;
    double hungarian_seconds;
};

/// Single-arm policy-tree scaling on scattered objects, with the one-shot
/// Hungarian time on the same instances for scale.
std::vector<TreeTimingRow> conveyor_tree_timing(const std::vector<int>& object_counts,
                                                int repeats, std::uint64_t seed);

struct AllocTimingRow {
    int depots;
    int drones;
    int requests;
    double mean_seconds;
    double stderr_seconds;
    double hungarian_seconds;
    double mcts_seconds;
};

/// Full-allocation timing on drone snapshots: mean and standard error over
/// `trials` sampled request sets per setting, baselines alongside.
std::vector<AllocTimingRow> drone_alloc_timing(
    const std::vector<std::pair<int, int>>& fleet_settings,
    const std::vector<int>& request_counts, int trials, std::uint64_t seed,
    std::optional<int> conflict_budget);

void write_tree_timing_csv(std::ostream& out, const std::vector<TreeTimingRow>& rows);
void write_alloc_timing_csv(std::ostream& out, const std::vector<AllocTimingRow>& rows);

struct OracleCheckCell {
    double speed;
    double new_object_prob;
    double mean_fraction;
};

struct OracleCheckReport {
    std::vector<OracleCheckCell> cells;  // 3x3 grid, perfect grasping
    bool all_small = false;              // every cell <= 1e-3
    bool zero_at_slowest = false;        // exactly 0 at speed 0.04
};

/// Competitive-performance protocol: perfect grasping over the grid of belt
/// speeds {0.04, 0.07, 0.1} x arrival probabilities {0.5, 0.75, 1.0}.
OracleCheckReport oracle_check(int trials, std::uint64_t seed, std::ostream* progress);
void write_oracle_csv(std::ostream& out, const OracleCheckReport& report);

}  // namespace scoba::harness
