#include "scoba/baselines/hungarian.hpp"

#include <algorithm>
#include <limits>

namespace scoba::baselines {

AssignmentMatrix build_assignment_matrix(const ProblemInstance& instance) {
    AssignmentMatrix m;
    m.agents = instance.agents();
    for (const TaskSpec& t : instance.tasks()) m.tasks.push_back(t.id);
    m.weights.assign(m.agents.size() * m.tasks.size(), 0.0);
    for (std::size_t i = 0; i < m.agents.size(); ++i) {
        for (std::size_t j = 0; j < m.tasks.size(); ++j) {
            if (instance.window(m.agents[i], m.tasks[j]) != nullptr) {
                m.weights[i * m.tasks.size() + j] =
                    completion_upper_bound(instance, m.agents[i], m.tasks[j]);
            }
        }
    }
    return m;
}

std::vector<int> max_weight_matching(std::size_t n_rows, std::size_t n_cols,
                                     const std::vector<double>& weights) {
    if (n_rows == 0 || n_cols == 0) return std::vector<int>(n_rows, -1);
    // Unbalanced shortest-augmenting-path Hungarian on cost = -weight: rows
    // are processed as-is, columns are padded with zero-weight dummies when
    // there are more agents than tasks.
    const std::size_t n = std::max(n_rows, n_cols);
    constexpr double kInf = std::numeric_limits<double>::infinity();
    auto cost = [&](std::size_t i, std::size_t j) -> double {
        return (i < n_rows && j < n_cols) ? -weights[i * n_cols + j] : 0.0;
    };
    std::vector<double> u(n_rows + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n_rows; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, kInf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = kInf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> match(n_rows, -1);
    for (std::size_t j = 1; j <= n; ++j) {
        if (p[j] != 0 && j <= n_cols) {
            match[p[j] - 1] = static_cast<int>(j - 1);
        }
    }
    return match;
}

Allocation hungarian_assign(const AssignmentMatrix& matrix, const ProblemInstance& instance) {
    Allocation out;
    if (matrix.agents.empty() || matrix.tasks.empty()) return out;
    const auto match = max_weight_matching(matrix.agents.size(), matrix.tasks.size(),
                                           matrix.weights);
    for (std::size_t i = 0; i < matrix.agents.size(); ++i) {
        const int j = match[i];
        if (j < 0) continue;
        if (matrix.at(i, static_cast<std::size_t>(j)) <= 0.0) continue;  // dummy-grade match
        const AgentId agent = matrix.agents[i];
        const TaskId task = matrix.tasks[static_cast<std::size_t>(j)];
        out.assignments[agent].push_back({task, instance.window(agent, task)->lower});
    }
    return out;
}

}  // namespace scoba::baselines
