#pragma once

#include <vector>

#include "scoba/core.hpp"

namespace scoba::baselines {

/// Bipartite weights for one-shot matching: rows are agents, columns tasks,
/// entries the per-pair completion upper bound (0 for infeasible pairs).
struct AssignmentMatrix {
    std::vector<AgentId> agents;
    std::vector<TaskId> tasks;
    std::vector<double> weights;  // row-major, agents x tasks

    double at(std::size_t row, std::size_t col) const {
        return weights[row * tasks.size() + col];
    }
};

AssignmentMatrix build_assignment_matrix(const ProblemInstance& instance);

/// Maximum-total-weight one-to-one matching; rectangular inputs are padded
/// with zero-weight dummies internally. Returns the matched column per row,
/// -1 where a row stays unmatched (or only a zero-weight dummy was left).
std::vector<int> max_weight_matching(std::size_t n_rows, std::size_t n_cols,
                                     const std::vector<double>& weights);

/// Unbalanced Hungarian assignment over the matrix; matched pairs are
/// scheduled at their earliest feasible step.
Allocation hungarian_assign(const AssignmentMatrix& matrix, const ProblemInstance& instance);

}  // namespace scoba::baselines
