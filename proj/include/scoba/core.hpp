#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "scoba/common.hpp"

namespace scoba {

/// Half-open service window [lower, upper): an attempt may start at any step
/// t with lower <= t < upper, and its outcome is observed at `upper`.
struct TimeWindow {
    TimeStep lower = 0;
    TimeStep upper = 0;

    TimeWindow() = default;
    TimeWindow(TimeStep lo, TimeStep up);

    TimeStep length() const { return upper - lower; }
    bool contains(TimeStep t) const { return lower <= t && t < upper; }
    bool overlaps(const TimeWindow& other) const {
        return lower < other.upper && other.lower < upper;
    }
    bool operator==(const TimeWindow&) const = default;
};

// Closed-form CDFs shared by the completion models and the domain layers.
// geometric: probability of at least one success in t Bernoulli(p) trials.
// epanechnikov: CDF of the quadratic kernel centered at mu with half-width r.
double cdf_geometric(double p, TimeStep t);
double cdf_epanechnikov(double mu, double r, double t);

/// Completion-time distribution for one agent-task pair: cdf(t) is the
/// probability the task finishes within t steps of the attempt start.
/// Value type so instances can be serialized by name + parameters.
class CompletionModel {
  public:
    enum class Kind { Geometric, Epanechnikov, Table };

    static CompletionModel geometric(double p);
    static CompletionModel epanechnikov(double mu, double r);
    /// values[i] is the CDF at t = i + 1; cdf(0) = 0, saturates at the back.
    static CompletionModel table(std::vector<double> values);

    double cdf(TimeStep t) const;

    Kind kind() const { return kind_; }
    const std::vector<double>& params() const { return params_; }
    std::string name() const;

    bool operator==(const CompletionModel&) const = default;

  private:
    Kind kind_ = Kind::Table;
    std::vector<double> params_;  // geometric: {p}; epan: {mu, r}; table: values
};

struct TaskSpec {
    TaskId id = 0;
    double penalty = 1.0;
    TimeStep downtime = 0;
    bool operator==(const TaskSpec&) const = default;
};

/// The tuple fed to the allocator: agents, tasks, horizon, per-pair service
/// windows and completion distributions. A missing (agent, task) window
/// means the pair is infeasible. Immutable after construction.
class ProblemInstance {
  public:
    struct FeasibleTask {
        TaskId task;
        TimeWindow window;
        TimeStep downtime;
        double penalty;
        const CompletionModel* model;
    };

    ProblemInstance(std::vector<AgentId> agents, std::vector<TaskSpec> tasks,
                    TimeStep horizon,
                    std::map<std::pair<AgentId, TaskId>, TimeWindow> windows,
                    std::map<std::pair<AgentId, TaskId>, CompletionModel> completion);

    const std::vector<AgentId>& agents() const { return agents_; }
    const std::vector<TaskSpec>& tasks() const { return tasks_; }
    TimeStep horizon() const { return horizon_; }

    bool has_agent(AgentId a) const;
    bool has_task(TaskId k) const;
    const TaskSpec& task(TaskId k) const;

    const TimeWindow* window(AgentId a, TaskId k) const;
    const CompletionModel* completion(AgentId a, TaskId k) const;

    /// Tasks attemptable by `agent`, sorted by (window.lower, task id).
    const std::vector<FeasibleTask>& feasible(AgentId agent) const;

    const std::map<std::pair<AgentId, TaskId>, TimeWindow>& windows() const {
        return windows_;
    }
    const std::map<std::pair<AgentId, TaskId>, CompletionModel>& completion_models() const {
        return completion_;
    }

    double total_penalty() const;  // sum of J(k) over all tasks

  private:
    std::vector<AgentId> agents_;
    std::vector<TaskSpec> tasks_;
    TimeStep horizon_;
    std::map<std::pair<AgentId, TaskId>, TimeWindow> windows_;
    std::map<std::pair<AgentId, TaskId>, CompletionModel> completion_;
    std::map<AgentId, std::vector<FeasibleTask>> feasible_;
    std::map<TaskId, std::size_t> task_index_;
};

/// Flat allocation: per agent the ordered (task, attempt time) pairs of its
/// plan. Attempt intervals are read sequentially along the agent's list.
struct Allocation {
    std::map<AgentId, std::vector<std::pair<TaskId, TimeStep>>> assignments;

    bool empty() const;
    bool operator==(const Allocation&) const = default;
};

struct Conflict {
    AgentId first_agent = 0;
    AgentId second_agent = 0;
    TaskId task = 0;
    TimeStep first_time = 0;
    TimeStep second_time = 0;
    bool operator==(const Conflict&) const = default;
};

/// True iff `agent` may start `task` at step t: the pair has a window and
/// lower <= t < upper. Unknown ids raise InputError.
bool attempt_feasible(const ProblemInstance& instance, AgentId agent, TaskId task,
                      TimeStep t);

/// cdf(upper - lower) for the pair: the best completion probability any
/// attempt inside the window can reach. Missing window raises InputError.
double completion_upper_bound(const ProblemInstance& instance, AgentId agent,
                              TaskId task);

/// One conflict per unordered agent pair and shared task where some attempt
/// time of one agent falls inside the other's window for that task.
/// Empty result means the allocation is valid.
std::vector<Conflict> detect_conflicts(const ProblemInstance& instance,
                                       const Allocation& alloc);

/// One node of a per-agent contingent plan. Tasks are visited in the order
/// the nodes are chained; an attempt starts at max(window.lower, busy) and
/// resolves at the window end (success frees the agent after the downtime).
struct PlanNode {
    TaskId task = 0;
    bool attempt = false;
    std::unique_ptr<PlanNode> on_success;  // attempt == true
    std::unique_ptr<PlanNode> on_fail;     // attempt == true
    std::unique_ptr<PlanNode> next;        // attempt == false

    static std::unique_ptr<PlanNode> pass(TaskId k, std::unique_ptr<PlanNode> next = nullptr);
    static std::unique_ptr<PlanNode> attempting(TaskId k,
                                                std::unique_ptr<PlanNode> on_success = nullptr,
                                                std::unique_ptr<PlanNode> on_fail = nullptr);
    std::unique_ptr<PlanNode> clone() const;
};

/// Full contingency plan for every agent. Agents without an entry idle.
struct ContingentPolicy {
    std::map<AgentId, std::unique_ptr<PlanNode>> plans;

    ContingentPolicy() = default;
    ContingentPolicy(ContingentPolicy&&) = default;
    ContingentPolicy& operator=(ContingentPolicy&&) = default;
    ContingentPolicy clone() const;
};

/// Exact expected total penalty of the joint contingent policy, by exhaustive
/// enumeration of outcome branches. Every task of the instance counts: a task
/// no agent completes contributes its full penalty. Policies that attempt a
/// task outside its window raise InputError.
double evaluate_expected_penalty(const ProblemInstance& instance,
                                 const ContingentPolicy& policy);

/// Flat (task, earliest attempt time) pairs reachable anywhere in the plan,
/// one entry per task per agent, ordered by attempt time.
Allocation flatten_policy(const ProblemInstance& instance, const ContingentPolicy& policy);

struct BruteForceResult {
    ContingentPolicy policy;
    double value = 0.0;
    /// chosen task -> agent assignment (tasks left out are unattempted)
    std::map<TaskId, AgentId> assignment;
};

struct BruteForceOptions {
    /// Enumeration cap; exceeding it raises ResourceError rather than
    /// silently truncating the search.
    std::uint64_t branch_budget = 10'000'000;
};

/// Exhaustive oracle: minimizes evaluate_expected_penalty over every
/// conflict-free contingent policy (each task attempted by at most one
/// agent, attempts at the earliest feasible step, outcomes observed at the
/// window end). Intended for small instances only.
BruteForceResult brute_force_optimal(const ProblemInstance& instance,
                                     const BruteForceOptions& options = {});

}  // namespace scoba
