#pragma once

#include <map>
#include <random>
#include <vector>

#include "scoba/core.hpp"
#include "scoba/rng.hpp"

namespace scoba::testing {

struct RandomInstanceConfig {
    int max_agents = 3;
    int max_tasks = 4;
    TimeStep max_horizon = 12;
    double feasible_prob = 0.85;  // chance an (agent, task) pair gets a window
    bool shared_windows = true;   // one window per task, common to all agents
};

/// Random static instances for oracle comparisons. Windows are shared per
/// task by default so that double allocation always conflicts and the
/// brute-force policy space matches the allocator's.
inline ProblemInstance random_instance(Rng& rng, const RandomInstanceConfig& cfg = {}) {
    const int n_agents = std::uniform_int_distribution<int>(1, cfg.max_agents)(rng);
    const int n_tasks = std::uniform_int_distribution<int>(1, cfg.max_tasks)(rng);
    const TimeStep horizon =
        std::uniform_int_distribution<TimeStep>(4, cfg.max_horizon)(rng);

    std::vector<AgentId> agents;
    for (int a = 0; a < n_agents; ++a) agents.push_back(a);

    std::vector<TaskSpec> tasks;
    std::map<std::pair<AgentId, TaskId>, TimeWindow> windows;
    std::map<std::pair<AgentId, TaskId>, CompletionModel> completion;

    for (int k = 0; k < n_tasks; ++k) {
        TaskSpec t;
        t.id = k;
        t.downtime = std::uniform_int_distribution<TimeStep>(0, 2)(rng);
        tasks.push_back(t);

        const TimeStep lower = std::uniform_int_distribution<TimeStep>(0, horizon - 2)(rng);
        const TimeStep upper =
            std::uniform_int_distribution<TimeStep>(lower + 1, horizon)(rng);
        const TimeWindow shared(lower, upper);

        bool any = false;
        for (int a = 0; a < n_agents; ++a) {
            if (uniform01(rng) > cfg.feasible_prob && !(a == n_agents - 1 && !any)) {
                continue;
            }
            any = true;
            TimeWindow w = shared;
            if (!cfg.shared_windows) {
                const TimeStep lo =
                    std::uniform_int_distribution<TimeStep>(0, horizon - 2)(rng);
                const TimeStep up =
                    std::uniform_int_distribution<TimeStep>(lo + 1, horizon)(rng);
                w = TimeWindow(lo, up);
            }
            const double p = std::uniform_real_distribution<double>(0.3, 0.95)(rng);
            windows.insert({{a, k}, w});
            completion.insert({{a, k}, CompletionModel::geometric(p)});
        }
    }
    return ProblemInstance(std::move(agents), std::move(tasks), horizon,
                           std::move(windows), std::move(completion));
}

/// Instance with the same structure but permuted agent and task ids.
inline ProblemInstance relabeled(const ProblemInstance& instance,
                                 const std::map<AgentId, AgentId>& agent_map,
                                 const std::map<TaskId, TaskId>& task_map) {
    std::vector<AgentId> agents;
    for (AgentId a : instance.agents()) agents.push_back(agent_map.at(a));
    std::vector<TaskSpec> tasks;
    for (TaskSpec t : instance.tasks()) {
        t.id = task_map.at(t.id);
        tasks.push_back(t);
    }
    std::map<std::pair<AgentId, TaskId>, TimeWindow> windows;
    std::map<std::pair<AgentId, TaskId>, CompletionModel> completion;
    for (const auto& [key, w] : instance.windows()) {
        windows.insert({{agent_map.at(key.first), task_map.at(key.second)}, w});
    }
    for (const auto& [key, m] : instance.completion_models()) {
        completion.insert({{agent_map.at(key.first), task_map.at(key.second)}, m});
    }
    return ProblemInstance(std::move(agents), std::move(tasks), instance.horizon(),
                           std::move(windows), std::move(completion));
}

}  // namespace scoba::testing
