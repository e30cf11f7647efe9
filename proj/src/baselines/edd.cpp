#include "scoba/baselines/edd.hpp"

#include <algorithm>

namespace scoba::baselines {

Allocation edd_assign(const ProblemInstance& instance, const std::set<AgentId>& free_agents) {
    Allocation out;
    std::set<TaskId> claimed;
    std::vector<AgentId> agents(free_agents.begin(), free_agents.end());
    std::sort(agents.begin(), agents.end());
    for (AgentId agent : agents) {
        if (!instance.has_agent(agent)) throw InputError("unknown agent id");
        const ProblemInstance::FeasibleTask* best = nullptr;
        for (const auto& ft : instance.feasible(agent)) {
            if (claimed.count(ft.task)) continue;
            if (best == nullptr || ft.window.upper < best->window.upper ||
                (ft.window.upper == best->window.upper && ft.task < best->task)) {
                best = &ft;
            }
        }
        if (best != nullptr) {
            claimed.insert(best->task);
            out.assignments[agent].push_back({best->task, best->window.lower});
        }
    }
    return out;
}

}  // namespace scoba::baselines
