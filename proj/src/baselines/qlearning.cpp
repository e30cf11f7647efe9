#include "scoba/baselines/qlearning.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace scoba::baselines {

QTable::QTable(int n_actions, std::size_t state_cap)
    : n_actions_(n_actions), state_cap_(state_cap) {
    if (n_actions <= 0) throw InputError("QTable needs at least one action");
}

int QTable::greedy(std::uint64_t state) const {
    auto it = table_.find(state);
    if (it == table_.end()) return 0;
    const auto& qs = it->second;
    int best = 0;
    for (int a = 1; a < n_actions_; ++a) {
        if (qs[a] > qs[best]) best = a;  // ties keep the lowest index
    }
    return best;
}

double QTable::max_q(std::uint64_t state) const {
    auto it = table_.find(state);
    if (it == table_.end()) return 0.0;
    return *std::max_element(it->second.begin(), it->second.end());
}

double& QTable::q(std::uint64_t state, int action) {
    auto it = table_.find(state);
    if (it == table_.end()) {
        if (table_.size() >= state_cap_) {
            throw ResourceError("Q-table exceeded its configured state cap");
        }
        it = table_.emplace(state, std::vector<double>(n_actions_, 0.0)).first;
    }
    return it->second.at(static_cast<std::size_t>(action));
}

void QTable::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open file for writing: " + path);
    out << "qtable " << n_actions_ << " " << table_.size() << "\n";
    out.precision(17);
    for (const auto& [state, qs] : table_) {
        out << state;
        for (double v : qs) out << " " << v;
        out << "\n";
    }
}

QTable QTable::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open Q-table file: " + path);
    std::string tag;
    int n_actions = 0;
    std::size_t entries = 0;
    in >> tag >> n_actions >> entries;
    if (tag != "qtable") throw InputError("not a Q-table file: " + path);
    QTable table(n_actions, std::max<std::size_t>(entries + 1, 1));
    for (std::size_t i = 0; i < entries; ++i) {
        std::uint64_t state;
        in >> state;
        for (int a = 0; a < n_actions; ++a) in >> table.q(state, a);
    }
    if (!in) throw InputError("truncated Q-table file: " + path);
    return table;
}

ConveyorQModel::ConveyorQModel(const conveyor::BeltConfig& config, double discretization)
    : config_(config), discretization_(discretization) {
    if (discretization <= 0.0) throw InputError("discretization must be positive");
    n_cells_ = static_cast<int>(std::ceil(config.length / discretization - 1e-9));
    if (n_cells_ > 48) throw ResourceError("belt discretization too fine to enumerate");
    slots_per_arm_ = 0;
    for (const auto& arm : config.arms) {
        const int first = static_cast<int>(std::floor(arm.x_low / discretization + 1e-9));
        const int last = static_cast<int>(std::ceil(arm.x_high / discretization - 1e-9));
        arm_first_cell_.push_back(first);
        slots_per_arm_ = std::max(slots_per_arm_, last - first);
    }
    n_joint_actions_ = 1;
    for (std::size_t i = 0; i < config.arms.size(); ++i) {
        n_joint_actions_ *= slots_per_arm_ + 1;  // one idle slot per arm
    }
}

std::uint64_t ConveyorQModel::encode(const conveyor::BeltWorld& world) const {
    std::uint64_t mask = 0;
    for (const auto& o : world.objects) {
        if (o.status != conveyor::BeltObject::Status::OnBelt) continue;
        if (o.position < 0.0 || o.position >= config_.length) continue;
        const int cell = std::min(
            n_cells_ - 1, static_cast<int>(std::floor(o.position / discretization_)));
        mask |= (1ULL << cell);
    }
    std::uint64_t state = mask;
    std::uint64_t shift = static_cast<std::uint64_t>(n_cells_);
    for (std::size_t i = 0; i < world.arm_busy_until.size(); ++i) {
        const auto remaining = static_cast<std::uint64_t>(std::clamp<TimeStep>(
            world.arm_busy_until[i] - world.now, 0, 3));
        state |= remaining << shift;
        shift += 2;
    }
    return state;
}

Allocation ConveyorQModel::targets(const conveyor::BeltWorld& world, int joint_action) const {
    Allocation alloc;
    int remainder = joint_action;
    for (std::size_t i = 0; i < config_.arms.size(); ++i) {
        const int choice = remainder % (slots_per_arm_ + 1);
        remainder /= slots_per_arm_ + 1;
        if (choice == 0) continue;  // idle
        const int cell = arm_first_cell_[i] + (choice - 1);
        const double lo = cell * discretization_;
        const double hi = lo + discretization_;
        const conveyor::BeltObject* target = nullptr;
        for (const auto& o : world.objects) {
            if (o.status != conveyor::BeltObject::Status::OnBelt) continue;
            if (o.position >= lo && o.position < hi) {
                if (target == nullptr || o.id < target->id) target = &o;
            }
        }
        if (target != nullptr) {
            alloc.assignments[static_cast<AgentId>(i)].push_back({target->id, world.now});
        }
    }
    return alloc;
}

QTable qlearn_train(const conveyor::BeltConfig& config, const QLearnConfig& qconfig,
                    std::uint64_t seed) {
    ConveyorQModel model(config, qconfig.belt_discretization);
    QTable table(model.n_joint_actions(), qconfig.state_cap);

    Rng gen_rng = make_rng(seed, 0, kStreamGeneration);
    Rng exec_rng = make_rng(seed, 0, kStreamExecution);
    Rng explore_rng = make_rng(seed, 0, kStreamPlanner);

    auto world = conveyor::BeltWorld::create(config);
    double epsilon = 1.0;
    TimeStep episode_step = 0;

    for (int step = 0; step < qconfig.training_steps; ++step) {
        if (episode_step >= qconfig.episode_length) {
            world = conveyor::BeltWorld::create(config);
            episode_step = 0;
        }
        const std::uint64_t state = model.encode(world);
        int action;
        if (uniform01(explore_rng) < epsilon) {
            action = std::uniform_int_distribution<int>(0, model.n_joint_actions() - 1)(
                explore_rng);
        } else {
            action = table.greedy(state);
        }
        const Allocation alloc = model.targets(world, action);
        const auto events = conveyor::step_execution(world, alloc, exec_rng);
        auto arrivals = conveyor::generate_step(world.gen, config, world.now, gen_rng);
        for (auto& o : arrivals) world.objects.push_back(o);
        std::erase_if(world.objects, [](const conveyor::BeltObject& o) {
            return o.status != conveyor::BeltObject::Status::OnBelt;
        });

        const double reward = -static_cast<double>(events.misses.size());
        const std::uint64_t next_state = model.encode(world);
        double& qv = table.q(state, action);
        qv += qconfig.learning_rate *
              (reward + qconfig.discount * table.max_q(next_state) - qv);

        epsilon = std::max(qconfig.epsilon_floor, epsilon * qconfig.epsilon_decay);
        ++episode_step;
    }
    return table;
}

}  // namespace scoba::baselines
