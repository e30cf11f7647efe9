#include "scoba/allocator.hpp"

#include <algorithm>
#include <ostream>
#include <queue>
#include <sstream>
#include <string>
#include <tuple>

namespace scoba {

namespace {

double node_cost(const ConstraintTreeNode& node, const ProblemInstance& instance) {
    double cost = 0.0;
    for (const auto& [agent, tree] : node.trees) {
        (void)agent;
        cost += tree->value();
    }
    for (const auto& [agent, excluded] : node.constraints) {
        (void)agent;
        for (TaskId k : excluded) cost += instance.task(k).penalty;
    }
    return cost;
}

std::vector<TaskId> allowed_tasks(const ProblemInstance& instance, AgentId agent,
                                  const std::set<TaskId>& excluded) {
    std::vector<TaskId> tasks;
    for (const auto& ft : instance.feasible(agent)) {
        if (!excluded.count(ft.task)) tasks.push_back(ft.task);
    }
    return tasks;
}

std::shared_ptr<const PolicyTree> replan(const ProblemInstance& instance, AgentId agent,
                                         const std::set<TaskId>& excluded,
                                         const AllocateOptions& options) {
    const TimeStep horizon = options.horizon.value_or(instance.horizon());
    return std::make_shared<const PolicyTree>(
        plan_tree(agent, allowed_tasks(instance, agent, excluded), horizon, instance,
                  options.truncate));
}

}  // namespace

Allocation ConstraintTreeNode::flat_allocation() const {
    Allocation alloc;
    for (const auto& [agent, tree] : trees) {
        auto attempts = planned_attempts(*tree);
        if (!attempts.empty()) alloc.assignments[agent] = std::move(attempts);
    }
    return alloc;
}

namespace {

// Allocation restricted to each agent's next task, for online conflict
// resolution.
Allocation first_assignments_of(const ConstraintTreeNode& node) {
    Allocation alloc;
    for (const auto& [agent, tree] : node.trees) {
        const auto first = extract_assignment(*tree);
        if (first) alloc.assignments[agent] = {{first->first, first->second}};
    }
    return alloc;
}

Allocation conflict_view(const ConstraintTreeNode& node, const AllocateOptions& options) {
    return options.first_assignment_conflicts ? first_assignments_of(node)
                                              : node.flat_allocation();
}

}  // namespace

ContingentPolicy AllocateResult::policy() const {
    ContingentPolicy out;
    for (const auto& [agent, tree] : trees) {
        auto plan = extract_policy(*tree);
        if (plan) out.plans[agent] = std::move(plan);
    }
    return out;
}

std::map<AgentId, std::pair<TaskId, TimeStep>> AllocateResult::first_assignments() const {
    std::map<AgentId, std::pair<TaskId, TimeStep>> out;
    for (const auto& [agent, list] : allocation.assignments) {
        if (!list.empty()) out[agent] = list.front();
    }
    return out;
}

ConstraintTreeNode make_root(const ProblemInstance& instance,
                             const AllocateOptions& options) {
    ConstraintTreeNode root;
    for (AgentId agent : instance.agents()) {
        root.trees[agent] = replan(instance, agent, {}, options);
    }
    root.cost = node_cost(root, instance);
    return root;
}

ConstraintTreeNode generate_child(const ConstraintTreeNode& parent, AgentId agent,
                                  TaskId task, const ProblemInstance& instance,
                                  const AllocateOptions& options) {
    ConstraintTreeNode child;
    child.constraints = parent.constraints;
    child.trees = parent.trees;
    child.constraints[agent].insert(task);
    child.trees[agent] = replan(instance, agent, child.constraints[agent], options);
    child.cost = node_cost(child, instance);
    return child;
}

namespace {

// Signature that makes two agents interchangeable at a node: same feasible
// pairs (windows and completion models) and same exclusions so far.
// Excluding the contested task from either one leads to mirror subtrees of
// equal cost, so only the lowest-id representative is expanded.
std::string agent_signature(const ProblemInstance& instance, AgentId agent,
                            const std::map<AgentId, std::set<TaskId>>& constraints) {
    std::ostringstream sig;
    for (const auto& ft : instance.feasible(agent)) {
        sig << ft.task << ':' << ft.window.lower << '-' << ft.window.upper << ':'
            << ft.model->name();
        for (double p : ft.model->params()) sig << ',' << p;
        sig << ';';
    }
    sig << '|';
    if (auto it = constraints.find(agent); it != constraints.end()) {
        for (TaskId k : it->second) sig << k << ',';
    }
    return sig.str();
}

}  // namespace

std::vector<ConstraintTreeNode> expand_conflicts(const ConstraintTreeNode& node,
                                                 const ProblemInstance& instance,
                                                 const AllocateOptions& options) {
    const auto conflicts = detect_conflicts(instance, conflict_view(node, options));
    if (conflicts.empty()) {
        throw InputError("expand_conflicts requires a node with at least one conflict");
    }
    // Earliest conflict: smallest window-overlap start, then task id, then agents.
    auto overlap_start = [&](const Conflict& c) {
        return std::max(instance.window(c.first_agent, c.task)->lower,
                        instance.window(c.second_agent, c.task)->lower);
    };
    const Conflict* selected = &conflicts.front();
    for (const Conflict& c : conflicts) {
        const auto key = std::make_tuple(overlap_start(c), c.task, c.first_agent,
                                         c.second_agent);
        const auto best = std::make_tuple(overlap_start(*selected), selected->task,
                                          selected->first_agent, selected->second_agent);
        if (key < best) selected = &c;
    }
    std::set<AgentId> involved;
    for (const Conflict& c : conflicts) {
        if (c.task == selected->task) {
            involved.insert(c.first_agent);
            involved.insert(c.second_agent);
        }
    }
    std::map<std::string, AgentId> representatives;
    for (AgentId agent : involved) {
        auto sig = agent_signature(instance, agent, node.constraints);
        auto it = representatives.find(sig);
        if (it == representatives.end() || agent < it->second) representatives[sig] = agent;
    }
    std::vector<ConstraintTreeNode> children;
    children.reserve(representatives.size());
    std::set<AgentId> kept;
    for (const auto& [sig, agent] : representatives) {
        (void)sig;
        kept.insert(agent);
    }
    for (AgentId agent : kept) {
        children.push_back(generate_child(node, agent, selected->task, instance, options));
    }
    return children;
}

std::pair<Allocation, std::set<AgentId>> tie_break(const Allocation& alloc,
                                                   const ProblemInstance& instance) {
    const auto conflicts = detect_conflicts(instance, alloc);
    std::map<TaskId, std::set<AgentId>> contested;
    for (const Conflict& c : conflicts) {
        contested[c.task].insert(c.first_agent);
        contested[c.task].insert(c.second_agent);
    }
    Allocation resolved;
    std::set<AgentId> unassigned;
    for (const auto& [agent, list] : alloc.assignments) {
        std::vector<std::pair<TaskId, TimeStep>> kept;
        for (const auto& entry : list) {
            auto it = contested.find(entry.first);
            const bool loser = it != contested.end() && it->second.count(agent) &&
                               *it->second.begin() != agent;
            if (loser) {
                unassigned.insert(agent);
            } else {
                kept.push_back(entry);
            }
        }
        if (!kept.empty()) resolved.assignments[agent] = std::move(kept);
    }
    return {std::move(resolved), std::move(unassigned)};
}

AllocateResult allocate(const ProblemInstance& instance, const AllocateOptions& options) {
    struct OpenEntry {
        double cost;
        long seq;
        std::shared_ptr<ConstraintTreeNode> node;
        bool operator>(const OpenEntry& other) const {
            if (cost != other.cost) return cost > other.cost;
            return seq > other.seq;  // FIFO among equal costs
        }
    };
    std::priority_queue<OpenEntry, std::vector<OpenEntry>, std::greater<OpenEntry>> open;
    std::set<std::map<AgentId, std::set<TaskId>>> seen;

    AllocateResult result;
    long seq = 0;

    auto root = std::make_shared<ConstraintTreeNode>(make_root(instance, options));
    seen.insert(root->constraints);
    open.push({root->cost, seq++, root});

    auto finish = [&](const ConstraintTreeNode& node, bool tie_broken) {
        result.cost = node.cost;
        result.trees = node.trees;
        Allocation solution = conflict_view(node, options);
        if (tie_broken) {
            auto [alloc, unassigned] = tie_break(solution, instance);
            result.allocation = std::move(alloc);
            result.unassigned = std::move(unassigned);
        } else {
            result.allocation = std::move(solution);
        }
        return result;
    };

    while (!open.empty()) {
        auto entry = open.top();
        open.pop();
        const ConstraintTreeNode& node = *entry.node;
        result.stats.popped_costs.push_back(node.cost);

        const auto conflicts = detect_conflicts(instance, conflict_view(node, options));
        if (options.trace != nullptr) {
            std::size_t n_constraints = 0;
            for (const auto& [agent, ex] : node.constraints) {
                (void)agent;
                n_constraints += ex.size();
            }
            *options.trace << "node cost=" << node.cost << " constraints=" << n_constraints
                           << " conflicts=" << conflicts.size() << "\n";
        }
        if (conflicts.empty()) {
            return finish(node, false);
        }
        if (options.conflict_budget && result.stats.expansions >= *options.conflict_budget) {
            result.stats.budget_exhausted = true;
            return finish(node, true);
        }
        ++result.stats.expansions;
        for (auto& child : expand_conflicts(node, instance, options)) {
            if (!seen.insert(child.constraints).second) continue;
            ++result.stats.children_generated;
            auto ptr = std::make_shared<ConstraintTreeNode>(std::move(child));
            open.push({ptr->cost, seq++, ptr});
        }
    }
    // Unreachable for well-formed instances: excluding every conflicting task
    // eventually yields a conflict-free node.
    throw StructureError("constraint-tree search exhausted the open list");
}

}  // namespace scoba
