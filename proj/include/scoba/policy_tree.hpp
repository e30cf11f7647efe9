#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "scoba/core.hpp"

namespace scoba {

enum class EventKind : std::uint8_t {
    // Tie order at equal times: ends close before new starts, downtime last.
    WindowEnd = 0,
    WindowStart = 1,
    DowntimeEnd = 2,
};

struct EventPoint {
    TimeStep time = 0;
    EventKind kind = EventKind::WindowStart;
    TaskId task = 0;
    bool operator==(const EventPoint&) const = default;
};

/// Sorted sweep events for one agent: per task a WindowStart, WindowEnd and
/// DowntimeEnd (at upper + downtime). Tasks without a window for the agent
/// raise InputError.
std::vector<EventPoint> event_sweep(AgentId agent, const std::vector<TaskId>& tasks,
                                    const ProblemInstance& instance);

enum class NodeKind : std::uint8_t { Root, Attempt, Leave, Fail, Success };

/// Node of the single-agent planning tree. Children are either a decision
/// pair {Attempt, Leave}, an outcome pair {Fail, Success} (under an attempt),
/// a lone Leave (task unattemptable on that branch), or absent.
///
/// `penalty` is the cost charged on entering the node (J(k) on Fail and
/// Leave); `value` is the expected penalty of everything at and below it.
/// Identical continuations are shared, so equal subtrees are stored once.
struct PolicyTreeNode {
    NodeKind kind = NodeKind::Root;
    TaskId task = -1;
    TimeStep attempt_time = -1;  // Attempt: branch-dependent earliest start
    double outcome_prob = 0.0;   // Fail: p = 1 - cdf(upper - start); Success: 1 - p
    double penalty = 0.0;
    double value = 0.0;
    std::int32_t child_a = -1;
    std::int32_t child_b = -1;
};

class PolicyTree {
  public:
    PolicyTree() = default;

    AgentId agent() const { return agent_; }
    const std::vector<TaskId>& considered_tasks() const { return considered_; }
    const std::vector<PolicyTreeNode>& nodes() const { return nodes_; }
    std::size_t size() const { return nodes_.size(); }
    std::int32_t root() const { return root_; }

    bool values_propagated() const { return propagated_; }
    /// Root value: the minimal expected penalty over the considered tasks.
    double value() const;

    /// Indented plain-text dump (kind, task, value, probability per node)
    /// for golden-file tests and debugging.
    void dump(std::ostream& out) const;

  private:
    friend PolicyTree plan_tree(AgentId, const std::vector<TaskId>&, TimeStep,
                                const ProblemInstance&, bool);
    friend double propagate_values(PolicyTree&);

    AgentId agent_ = 0;
    std::vector<TaskId> considered_;
    std::vector<PolicyTreeNode> nodes_;
    std::int32_t root_ = -1;
    bool propagated_ = false;
};

/// Builds the policy tree for one agent over the given tasks: at every
/// reachable window start the branch forks into attempt/leave, attempts
/// resolve at the window end into fail/success with the branch-dependent
/// probability. With `truncate`, planning stops at the truncation point.
/// Values are propagated before returning.
PolicyTree plan_tree(AgentId agent, const std::vector<TaskId>& tasks, TimeStep horizon,
                     const ProblemInstance& instance, bool truncate = false);

/// Bottom-up value propagation: expectation over outcome pairs, minimum over
/// decision pairs. Returns the root value.
double propagate_values(PolicyTree& tree);

/// First attempt of the optimal policy: follow minimum-value children from
/// the root (ties prefer attempting) until an attempt node. Returns nothing
/// when the optimal branch attempts no task.
std::optional<std::pair<TaskId, TimeStep>> extract_assignment(const PolicyTree& tree);

/// Full contingent plan encoded by the tree under optimal decisions.
/// Exponential in the worst case; meant for small instances (evaluation,
/// oracle comparisons), not the online loop.
std::unique_ptr<PlanNode> extract_policy(const PolicyTree& tree);

/// All (task, earliest attempt time) pairs reachable under optimal
/// decisions, one per task, ordered by time. This is what conflict
/// detection between agents runs on.
std::vector<std::pair<TaskId, TimeStep>> planned_attempts(const PolicyTree& tree);

/// Number of leading tasks (sorted by window start) to plan in one coupled
/// block: stops at the first task whose window opens only after every
/// earlier task has resolved, downtime included.
std::size_t truncation_point(AgentId agent, const std::vector<TaskId>& tasks,
                             const ProblemInstance& instance);

}  // namespace scoba
