#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <vector>

#include "scoba/core.hpp"
#include "scoba/policy_tree.hpp"

namespace scoba {

/// High-level search node: per-agent task exclusions, the per-agent policy
/// trees respecting them, and the summed cost. The cost charges each
/// excluded task its full penalty (the agent is certain not to complete it),
/// which keeps costs comparable across nodes with different constraint sets.
struct ConstraintTreeNode {
    std::map<AgentId, std::set<TaskId>> constraints;
    std::map<AgentId, std::shared_ptr<const PolicyTree>> trees;
    double cost = 0.0;

    /// Flat multi-agent allocation: every (task, earliest attempt) pair
    /// reachable in each agent's optimal policy.
    Allocation flat_allocation() const;
};

struct AllocateOptions {
    /// Conflict expansions allowed per invocation; nullopt = unlimited.
    std::optional<int> conflict_budget = 500;
    /// Horizon truncation for the online loop; leave off for full-horizon
    /// planning.
    bool truncate = false;
    /// Planning horizon override; defaults to the instance horizon.
    std::optional<TimeStep> horizon;
    /// Resolve conflicts on the agents' next assignments only, instead of
    /// on every attempt reachable in their contingent plans. The online
    /// loop replans at each event anyway, so only the next task per agent
    /// is ever executed; full-plan resolution is for static instances.
    bool first_assignment_conflicts = false;
    /// Search trace: one line per expanded node (cost, constraint count,
    /// conflict found).
    std::ostream* trace = nullptr;
};

struct AllocateStats {
    int expansions = 0;
    int children_generated = 0;
    bool budget_exhausted = false;
    std::vector<double> popped_costs;
};

struct AllocateResult {
    Allocation allocation;
    std::map<AgentId, std::shared_ptr<const PolicyTree>> trees;
    double cost = 0.0;
    std::set<AgentId> unassigned;  // tie-break losers on the budget path
    AllocateStats stats;

    /// Full contingent policy under the returned trees' optimal decisions.
    ContingentPolicy policy() const;
    /// Next (task, attempt time) per agent, for the execution loop.
    std::map<AgentId, std::pair<TaskId, TimeStep>> first_assignments() const;
};

ConstraintTreeNode make_root(const ProblemInstance& instance, const AllocateOptions& options);

/// Child node: parent's constraints plus one new (agent, task) exclusion,
/// with only that agent replanned and the cost recomputed.
ConstraintTreeNode generate_child(const ConstraintTreeNode& parent, AgentId agent,
                                  TaskId task, const ProblemInstance& instance,
                                  const AllocateOptions& options);

/// Children for the selected conflict of `node`: the earliest conflict is
/// chosen (smallest window-overlap start, then task id) and one child is
/// generated per involved agent. Raises InputError on conflict-free nodes.
std::vector<ConstraintTreeNode> expand_conflicts(const ConstraintTreeNode& node,
                                                 const ProblemInstance& instance,
                                                 const AllocateOptions& options);

/// Budget-path resolution: for each conflicted task the lowest-id agent
/// keeps it; the other agents' entries for it are dropped and those agents
/// are reported unassigned.
std::pair<Allocation, std::set<AgentId>> tie_break(const Allocation& alloc,
                                                   const ProblemInstance& instance);

/// Best-first search over the constraint tree. Returns a conflict-free
/// allocation of minimal summed cost; when the conflict budget runs out the
/// best node so far is tie-broken and returned instead.
AllocateResult allocate(const ProblemInstance& instance, const AllocateOptions& options = {});

}  // namespace scoba
