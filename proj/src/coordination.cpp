#include "scoba/coordination.hpp"

#include <algorithm>
#include <map>
#include <queue>

namespace scoba {

bool CoordinationGraph::has_edge(AgentId a, AgentId b) const {
    if (directed) return edges.count({a, b}) != 0;
    return edges.count({std::min(a, b), std::max(a, b)}) != 0;
}

CoordinationGraph build_graph(const ProblemInstance& instance, bool directed) {
    CoordinationGraph g;
    g.directed = directed;
    g.nodes = instance.agents();
    std::map<AgentId, std::set<TaskId>> feasible_sets;
    for (AgentId a : g.nodes) {
        for (const auto& ft : instance.feasible(a)) feasible_sets[a].insert(ft.task);
    }
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        for (std::size_t j = i + 1; j < g.nodes.size(); ++j) {
            const AgentId a = g.nodes[i];
            const AgentId b = g.nodes[j];
            const auto& sa = feasible_sets[a];
            const auto& sb = feasible_sets[b];
            const bool intersect = std::any_of(sa.begin(), sa.end(),
                                               [&](TaskId k) { return sb.count(k) != 0; });
            if (!intersect) continue;
            if (directed) {
                g.edges.insert({a, b});  // instance order = upstream to downstream
            } else {
                g.edges.insert({std::min(a, b), std::max(a, b)});
            }
        }
    }
    return g;
}

std::vector<std::set<AgentId>> components(const CoordinationGraph& graph) {
    std::map<AgentId, std::vector<AgentId>> adj;
    for (AgentId a : graph.nodes) adj[a] = {};
    for (const auto& [a, b] : graph.edges) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    std::vector<std::set<AgentId>> out;
    std::set<AgentId> visited;
    for (AgentId start : graph.nodes) {
        if (visited.count(start)) continue;
        std::set<AgentId> component;
        std::queue<AgentId> frontier;
        frontier.push(start);
        visited.insert(start);
        while (!frontier.empty()) {
            AgentId a = frontier.front();
            frontier.pop();
            component.insert(a);
            for (AgentId b : adj[a]) {
                if (visited.insert(b).second) frontier.push(b);
            }
        }
        out.push_back(std::move(component));
    }
    return out;
}

namespace {

std::vector<AgentId> topological_order(const CoordinationGraph& graph) {
    std::map<AgentId, int> indegree;
    std::map<AgentId, std::vector<AgentId>> adj;
    for (AgentId a : graph.nodes) indegree[a] = 0;
    for (const auto& [a, b] : graph.edges) {
        adj[a].push_back(b);
        ++indegree[b];
    }
    // min-heap keeps the order deterministic
    std::priority_queue<AgentId, std::vector<AgentId>, std::greater<AgentId>> ready;
    for (const auto& [a, d] : indegree) {
        if (d == 0) ready.push(a);
    }
    std::vector<AgentId> order;
    while (!ready.empty()) {
        AgentId a = ready.top();
        ready.pop();
        order.push_back(a);
        for (AgentId b : adj[a]) {
            if (--indegree[b] == 0) ready.push(b);
        }
    }
    if (order.size() != graph.nodes.size()) {
        throw InputError("coordination graph has a cycle; no topological order");
    }
    return order;
}

}  // namespace

AllocateResult topological_allocate(const ProblemInstance& instance,
                                    const CoordinationGraph& graph,
                                    const AllocateOptions& options,
                                    TopologicalExclusion exclusion) {
    if (!graph.directed) throw InputError("topological_allocate needs a directed graph");
    const auto order = topological_order(graph);
    const TimeStep horizon = options.horizon.value_or(instance.horizon());

    AllocateResult result;
    // (task, attempt time) pairs already claimed upstream, with the claimer.
    std::vector<std::tuple<TaskId, TimeStep, AgentId>> claimed;
    double cost = 0.0;

    for (AgentId agent : order) {
        std::set<TaskId> excluded;
        for (const auto& [task, t_prev, prev_agent] : claimed) {
            const TimeWindow* own = instance.window(agent, task);
            if (own == nullptr) continue;
            if (exclusion == TopologicalExclusion::AllAssigned) {
                excluded.insert(task);
                continue;
            }
            const TimeWindow* theirs = instance.window(prev_agent, task);
            if (own->contains(t_prev) || own->overlaps(*theirs)) excluded.insert(task);
        }
        std::vector<TaskId> tasks;
        for (const auto& ft : instance.feasible(agent)) {
            if (!excluded.count(ft.task)) tasks.push_back(ft.task);
        }
        auto tree = std::make_shared<const PolicyTree>(
            plan_tree(agent, tasks, horizon, instance, options.truncate));
        for (const auto& [task, t] : planned_attempts(*tree)) {
            claimed.emplace_back(task, t, agent);
        }
        cost += tree->value();
        for (TaskId k : excluded) cost += instance.task(k).penalty;
        result.trees[agent] = std::move(tree);
    }
    for (const auto& [agent, tree] : result.trees) {
        auto attempts = planned_attempts(*tree);
        if (!attempts.empty()) result.allocation.assignments[agent] = std::move(attempts);
    }
    result.cost = cost;
    return result;
}

AllocateResult allocate_per_component(const ProblemInstance& instance,
                                      const AllocateOptions& options) {
    const auto graph = build_graph(instance, /*directed=*/false);
    const auto comps = components(graph);
    if (comps.size() <= 1) return allocate(instance, options);

    AllocateResult merged;
    for (const auto& component : comps) {
        std::vector<AgentId> agents(component.begin(), component.end());
        std::set<TaskId> component_tasks;
        for (AgentId a : agents) {
            for (const auto& ft : instance.feasible(a)) component_tasks.insert(ft.task);
        }
        std::vector<TaskSpec> tasks;
        for (const TaskSpec& t : instance.tasks()) {
            if (component_tasks.count(t.id)) tasks.push_back(t);
        }
        std::map<std::pair<AgentId, TaskId>, TimeWindow> windows;
        std::map<std::pair<AgentId, TaskId>, CompletionModel> completion;
        for (const auto& [key, w] : instance.windows()) {
            if (component.count(key.first)) {
                windows.insert({key, w});
                completion.insert({key, instance.completion_models().at(key)});
            }
        }
        ProblemInstance sub(agents, std::move(tasks), instance.horizon(),
                            std::move(windows), std::move(completion));
        auto part = allocate(sub, options);
        for (auto& [agent, list] : part.allocation.assignments) {
            merged.allocation.assignments[agent] = std::move(list);
        }
        for (auto& [agent, tree] : part.trees) merged.trees[agent] = std::move(tree);
        merged.cost += part.cost;
        merged.unassigned.insert(part.unassigned.begin(), part.unassigned.end());
        merged.stats.expansions += part.stats.expansions;
        merged.stats.children_generated += part.stats.children_generated;
        merged.stats.budget_exhausted |= part.stats.budget_exhausted;
    }
    return merged;
}

}  // namespace scoba
