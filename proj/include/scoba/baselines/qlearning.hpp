#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "scoba/common.hpp"
#include "scoba/conveyor.hpp"
#include "scoba/rng.hpp"

namespace scoba::baselines {

struct QLearnConfig {
    double learning_rate = 0.01;
    double epsilon_decay = 0.9995;
    int training_steps = 100000;
    double belt_discretization = 0.05;
    double discount = 0.95;
    double epsilon_floor = 0.01;
    std::size_t state_cap = 2'000'000;  // exceeding it raises ResourceError
    TimeStep episode_length = 500;
};

/// Tabular Q over lazily discovered states. Greedy lookups break ties by the
/// lowest action index; unseen states default to action 0 (all idle).
class QTable {
  public:
    QTable(int n_actions, std::size_t state_cap);

    int n_actions() const { return n_actions_; }
    std::size_t size() const { return table_.size(); }

    int greedy(std::uint64_t state) const;
    double max_q(std::uint64_t state) const;
    double& q(std::uint64_t state, int action);  // grows the table, cap-checked

    void save(const std::string& path) const;
    static QTable load(const std::string& path);

  private:
    int n_actions_;
    std::size_t state_cap_;
    std::unordered_map<std::uint64_t, std::vector<double>> table_;
};

/// Discretized view of the belt used for both training and greedy execution:
/// the state is the cell-occupancy mask plus per-arm remaining downtime, an
/// action picks one workspace slot (or idles) per arm.
class ConveyorQModel {
  public:
    ConveyorQModel(const conveyor::BeltConfig& config, double discretization);

    int n_joint_actions() const { return n_joint_actions_; }
    int slots_per_arm() const { return slots_per_arm_; }

    std::uint64_t encode(const conveyor::BeltWorld& world) const;
    /// Translates a joint action into arm targets for the execution step.
    Allocation targets(const conveyor::BeltWorld& world, int joint_action) const;

  private:
    conveyor::BeltConfig config_;
    double discretization_;
    int n_cells_;
    int slots_per_arm_;
    int n_joint_actions_;
    std::vector<int> arm_first_cell_;
};

/// Pre-computes a tabular policy by epsilon-greedy Q-learning on the
/// conveyor simulator (the only domain with a tractable enumeration).
QTable qlearn_train(const conveyor::BeltConfig& config, const QLearnConfig& qconfig,
                    std::uint64_t seed);

}  // namespace scoba::baselines
