#pragma once

#include <set>
#include <utility>
#include <vector>

#include "scoba/core.hpp"
#include "scoba/allocator.hpp"

namespace scoba {

/// Agent graph where the absence of an edge certifies that two agents'
/// feasible task sets are disjoint, so they can never conflict.
struct CoordinationGraph {
    std::vector<AgentId> nodes;
    /// Directed graphs store (from, to); undirected graphs store the pair
    /// with the smaller id first.
    std::set<std::pair<AgentId, AgentId>> edges;
    bool directed = false;

    bool has_edge(AgentId a, AgentId b) const;
};

/// Edge between two agents iff their feasible task sets intersect. For
/// directed graphs the edge points from the agent listed earlier in the
/// instance (upstream) to the later one.
CoordinationGraph build_graph(const ProblemInstance& instance, bool directed);

/// Connected components ignoring edge direction, each sorted by agent id;
/// components ordered by their smallest agent.
std::vector<std::set<AgentId>> components(const CoordinationGraph& graph);

enum class TopologicalExclusion {
    /// Skip a predecessor-claimed task only when keeping it could conflict
    /// (attempt inside the other's window or overlapping windows). This is
    /// exactly what the constraint-tree search would enforce, so both code
    /// paths land on identical costs.
    ConflictOnly,
    /// Skip every task a predecessor claimed, even time-disjoint duplicates.
    /// Divides the work cleanly along the chain; the online conveyor loop
    /// runs with this rule.
    AllAssigned,
};

/// Plans agents along a topological order of the directed graph, excluding
/// predecessor-claimed tasks per the chosen rule. Conflict-free by
/// construction, no constraint-tree children generated. Cyclic graphs raise
/// InputError.
AllocateResult topological_allocate(
    const ProblemInstance& instance, const CoordinationGraph& graph,
    const AllocateOptions& options = {},
    TopologicalExclusion exclusion = TopologicalExclusion::ConflictOnly);

/// Runs the constraint-tree search independently per connected component
/// and merges the results. Agents in different components cannot conflict.
AllocateResult allocate_per_component(const ProblemInstance& instance,
                                      const AllocateOptions& options = {});

}  // namespace scoba
