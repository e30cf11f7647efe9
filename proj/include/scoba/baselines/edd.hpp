#pragma once

#include <set>

#include "scoba/core.hpp"

namespace scoba::baselines {

/// Earliest-due-date heuristic: every free agent takes its feasible task
/// with the nearest window deadline, at most one agent per task (agents
/// claim in ascending id order). Attempt time is the window start.
Allocation edd_assign(const ProblemInstance& instance, const std::set<AgentId>& free_agents);

}  // namespace scoba::baselines
