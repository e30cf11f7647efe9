#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "scoba/common.hpp"
#include "scoba/rng.hpp"

namespace scoba::baselines {

struct MctsConfig {
    int iterations = 100;
    int depth = 20;
    double exploration = 1.0;
};

// Generative-model concept expected by mcts_plan:
//   using State = ...;                                        copyable snapshot
//   std::vector<AgentId> agents(const State&) const;          fixed priority order
//   std::vector<int> actions(const State&, AgentId) const;    non-empty; [0] = default
//   int rollout_action(const State&, AgentId) const;          heuristic policy (EDD)
//   double step(State&, const std::map<AgentId,int>&, Rng&);  reward of one step
//   bool terminal(const State&) const;

/// Open-loop UCT for one agent with the already-decided agents' actions
/// fixed and the remaining agents following the rollout policy.
template <class Sim>
int mcts_agent_action(const Sim& sim, const typename Sim::State& root, AgentId agent,
                      const std::map<AgentId, int>& decided, const MctsConfig& config,
                      Rng& rng) {
    if (config.iterations <= 0) return sim.rollout_action(root, agent);
    const auto root_actions = sim.actions(root, agent);
    if (root_actions.size() == 1) return root_actions[0];

    struct Node {
        std::map<int, std::size_t> children;  // action -> node index
        double total = 0.0;
        int visits = 0;
    };
    std::vector<Node> nodes(1);

    auto joint_step = [&](typename Sim::State& state, AgentId acting, int action,
                          Rng& r) -> double {
        std::map<AgentId, int> joint = decided;
        joint[acting] = action;
        for (AgentId other : sim.agents(state)) {
            if (!joint.count(other)) joint[other] = sim.rollout_action(state, other);
        }
        return sim.step(state, joint, r);
    };

    for (int it = 0; it < config.iterations; ++it) {
        typename Sim::State state = root;
        std::vector<std::size_t> path{0};
        double reward = 0.0;
        int d = 0;
        // Selection / expansion down the agent's own action sequence.
        while (d < config.depth && !sim.terminal(state)) {
            Node& node = nodes[path.back()];
            const auto actions = sim.actions(state, agent);
            int chosen = -1;
            bool expanded = false;
            for (int a : actions) {
                if (!node.children.count(a)) {
                    chosen = a;
                    expanded = true;
                    break;
                }
            }
            if (!expanded) {
                double best = -std::numeric_limits<double>::infinity();
                for (int a : actions) {
                    const Node& child = nodes[node.children.at(a)];
                    const double mean = child.total / std::max(1, child.visits);
                    const double ucb =
                        mean + config.exploration *
                                   std::sqrt(std::log(static_cast<double>(node.visits) + 1.0) /
                                             (child.visits + 1e-9));
                    if (ucb > best) {
                        best = ucb;
                        chosen = a;
                    }
                }
            }
            reward += joint_step(state, agent, chosen, rng);
            ++d;
            auto it_child = nodes[path.back()].children.find(chosen);
            if (it_child == nodes[path.back()].children.end()) {
                nodes.push_back(Node{});
                nodes[path.back()].children[chosen] = nodes.size() - 1;
                path.push_back(nodes.size() - 1);
                break;  // expand one node per iteration, then roll out
            }
            path.push_back(it_child->second);
            if (expanded) break;
        }
        // Rollout with every agent on the heuristic policy.
        while (d < config.depth && !sim.terminal(state)) {
            std::map<AgentId, int> joint;
            for (AgentId a : sim.agents(state)) joint[a] = sim.rollout_action(state, a);
            reward += sim.step(state, joint, rng);
            ++d;
        }
        for (std::size_t idx : path) {
            nodes[idx].total += reward;
            nodes[idx].visits += 1;
        }
    }

    // Final choice: best mean at the root, ties to the lowest action index.
    int best_action = root_actions[0];
    double best_mean = -std::numeric_limits<double>::infinity();
    for (int a : root_actions) {
        auto it = nodes[0].children.find(a);
        if (it == nodes[0].children.end()) continue;
        const Node& child = nodes[it->second];
        if (child.visits == 0) continue;
        const double mean = child.total / child.visits;
        if (mean > best_mean + 1e-12) {
            best_mean = mean;
            best_action = a;
        }
    }
    return best_action;
}

/// Per-agent actions chosen sequentially in fixed agent order; earlier
/// agents' choices are fixed while later ones follow the rollout policy.
template <class Sim>
std::map<AgentId, int> mcts_plan(const Sim& sim, const typename Sim::State& root,
                                 const MctsConfig& config, Rng& rng) {
    std::map<AgentId, int> decided;
    if (sim.terminal(root)) return decided;
    for (AgentId agent : sim.agents(root)) {
        decided[agent] = mcts_agent_action(sim, root, agent, decided, config, rng);
    }
    return decided;
}

}  // namespace scoba::baselines
