#include "scoba/conveyor.hpp"

#include <algorithm>
#include <cmath>

namespace scoba::conveyor {

namespace {
constexpr double kEps = 1e-9;

TimeStep steps_until(double distance, double speed) {
    // First step at which a point `distance` ahead has been reached.
    if (distance <= 0.0) return 0;
    return static_cast<TimeStep>(std::ceil(distance / speed - kEps));
}
}  // namespace

double grasp_cdf(double p, TimeStep t) {
    if (p < 0.0 || p > 1.0) throw InputError("grasp probability must be in [0,1]");
    if (t < 0) throw InputError("duration must be nonnegative");
    return cdf_geometric(p, t);
}

BeltConfig BeltConfig::defaults(double grasp_prob, double speed, double new_object_prob) {
    BeltConfig c;
    c.speed = speed;
    c.new_object_prob = new_object_prob;
    c.arms = {
        ArmSpec{0.05, 0.35, grasp_prob},
        ArmSpec{0.35, 0.65, grasp_prob},
        ArmSpec{0.65, 0.95, grasp_prob},
    };
    return c;
}

double BeltConfig::belt_end() const {
    double end = 0.0;
    for (const ArmSpec& a : arms) end = std::max(end, a.x_high);
    return end;
}

std::optional<TimeWindow> window_for(const ArmSpec& arm, const BeltObject& object,
                                     double speed, TimeStep now) {
    if (speed <= 0.0) throw InputError("belt speed must be positive");
    if (object.position >= arm.x_high - kEps) return std::nullopt;
    const TimeStep lower = now + steps_until(arm.x_low - object.position, speed);
    const TimeStep upper = now + steps_until(arm.x_high - object.position, speed);
    if (lower >= upper) return std::nullopt;
    return TimeWindow(lower, upper);
}

GeneratorState GeneratorState::from_config(const BeltConfig& config) {
    GeneratorState gen;
    for (const ArmSpec& arm : config.arms) {
        gen.arms.push_back({-arm.x_high, -arm.x_low, 0});
    }
    return gen;
}

std::vector<BeltObject> generate_step(GeneratorState& gen, const BeltConfig& config,
                                      TimeStep now, Rng& rng) {
    for (auto& pending : gen.pending) pending.position += config.speed;
    for (std::size_t i = 0; i < gen.arms.size(); ++i) {
        auto& varm = gen.arms[i];
        if (now < varm.next_eligible) continue;
        if (uniform01(rng) < config.new_object_prob) {
            const double x =
                std::uniform_real_distribution<double>(varm.x_low, varm.x_high)(rng);
            gen.pending.push_back({x, static_cast<int>(i)});
            // mirrored downtime before the next drop
            varm.next_eligible = now + 1 + config.downtime;
        }
    }
    std::vector<BeltObject> arrivals;
    std::vector<GeneratorState::PendingObject> still_pending;
    for (const auto& pending : gen.pending) {
        if (pending.position >= 0.0) {
            arrivals.push_back(BeltObject{gen.next_id++, pending.position, now,
                                          BeltObject::Status::OnBelt, pending.source_arm});
        } else {
            still_pending.push_back(pending);
        }
    }
    gen.pending = std::move(still_pending);
    std::sort(arrivals.begin(), arrivals.end(),
              [](const BeltObject& a, const BeltObject& b) { return a.id < b.id; });
    return arrivals;
}

BeltWorld BeltWorld::create(const BeltConfig& config) {
    BeltWorld w;
    w.config = config;
    w.arm_busy_until.assign(config.arms.size(), 0);
    w.gen = GeneratorState::from_config(config);
    return w;
}

const BeltObject* BeltWorld::find(TaskId id) const {
    for (const auto& o : objects) {
        if (o.id == id) return &o;
    }
    return nullptr;
}

BeltObject* BeltWorld::find(TaskId id) {
    for (auto& o : objects) {
        if (o.id == id) return &o;
    }
    return nullptr;
}

ExecutionEvents step_execution(BeltWorld& world, const Allocation& alloc, Rng& rng) {
    ExecutionEvents events;
    const auto& arms = world.config.arms;

    // Attempts at the current step, arms in belt order.
    for (std::size_t i = 0; i < arms.size(); ++i) {
        const AgentId arm_id = static_cast<AgentId>(i);
        if (world.arm_busy_until[i] > world.now) continue;
        auto it = alloc.assignments.find(arm_id);
        if (it == alloc.assignments.end()) continue;
        const BeltObject* target = nullptr;
        for (const auto& [task, t] : it->second) {
            (void)t;
            const BeltObject* o = world.find(task);
            if (o != nullptr && o->status == BeltObject::Status::OnBelt) {
                target = o;
                break;
            }
        }
        if (target == nullptr) continue;
        if (target->position < arms[i].x_low - 1e-9 ||
            target->position >= arms[i].x_high - 1e-9) {
            continue;  // not in this arm's workspace yet (or already past)
        }
        if (uniform01(rng) < arms[i].grasp_prob) {
            BeltObject* o = world.find(target->id);
            o->status = BeltObject::Status::Picked;
            world.arm_busy_until[i] = world.now + world.config.downtime;
            ++world.picked;
            events.successes.push_back({arm_id, o->id});
        }
    }

    // Belt advances; note workspace exits and end-of-belt misses.
    const double end = world.config.belt_end();
    for (auto& o : world.objects) {
        if (o.status != BeltObject::Status::OnBelt) continue;
        const double before = o.position;
        o.position += world.config.speed;
        for (std::size_t i = 0; i < arms.size(); ++i) {
            if (before < arms[i].x_high - 1e-9 && o.position >= arms[i].x_high - 1e-9) {
                events.window_ends.push_back({static_cast<AgentId>(i), o.id});
            }
        }
        if (o.position >= end - 1e-9) {
            o.status = BeltObject::Status::Missed;
            ++world.missed;
            events.misses.push_back(o.id);
        }
    }
    ++world.now;
    return events;
}

ProblemInstance build_instance(const BeltWorld& world) {
    std::vector<AgentId> agents;
    for (std::size_t i = 0; i < world.config.arms.size(); ++i) {
        agents.push_back(static_cast<AgentId>(i));
    }
    std::vector<TaskSpec> tasks;
    std::map<std::pair<AgentId, TaskId>, TimeWindow> windows;
    std::map<std::pair<AgentId, TaskId>, CompletionModel> completion;
    TimeStep horizon = world.now + 1;

    for (const auto& o : world.objects) {
        if (o.status != BeltObject::Status::OnBelt) continue;
        bool any = false;
        for (std::size_t i = 0; i < world.config.arms.size(); ++i) {
            const ArmSpec& arm = world.config.arms[i];
            auto w = window_for(arm, o, world.config.speed, world.now);
            if (!w) continue;
            // An arm mid-downtime cannot start before it frees up.
            const TimeStep lower = std::max(w->lower, world.arm_busy_until[i]);
            if (lower >= w->upper) continue;
            const AgentId arm_id = static_cast<AgentId>(i);
            windows.insert({{arm_id, o.id}, TimeWindow(lower, w->upper)});
            completion.insert({{arm_id, o.id}, CompletionModel::geometric(arm.grasp_prob)});
            horizon = std::max(horizon, w->upper + world.config.downtime + 1);
            any = true;
        }
        if (any) tasks.push_back(TaskSpec{o.id, 1.0, world.config.downtime});
    }
    return ProblemInstance(std::move(agents), std::move(tasks), horizon,
                           std::move(windows), std::move(completion));
}

}  // namespace scoba::conveyor
