#pragma once

#include <optional>
#include <vector>

#include "scoba/core.hpp"
#include "scoba/rng.hpp"

namespace scoba::conveyor {

/// Probability of at least one successful grasp in t per-step Bernoulli(p)
/// trials.
double grasp_cdf(double p, TimeStep t);

struct ArmSpec {
    double x_low = 0.0;
    double x_high = 0.0;
    double grasp_prob = 0.75;
};

struct BeltConfig {
    double length = 1.0;
    std::vector<ArmSpec> arms;  // upstream to downstream
    double speed = 0.07;        // units per time-step
    double new_object_prob = 0.75;
    TimeStep downtime = 2;

    /// Three arms with adjacent 0.3-unit workspaces spanning x = 0.05..0.95.
    static BeltConfig defaults(double grasp_prob = 0.75, double speed = 0.07,
                               double new_object_prob = 0.75);
    double belt_end() const;  // x_high of the last workspace
};

struct BeltObject {
    TaskId id = 0;
    double position = 0.0;
    TimeStep arrival_time = 0;
    enum class Status { OnBelt, Picked, Missed } status = Status::OnBelt;
    int source_arm = -1;  // virtual arm that dropped it
};

/// Steps during which the object sits inside the arm's workspace, given the
/// current position; nothing once it has moved past.
std::optional<TimeWindow> window_for(const ArmSpec& arm, const BeltObject& object,
                                     double speed, TimeStep now);

/// Mirrored task generator: virtual arms on the reflected belt drop objects
/// into their mirrored workspaces, wait out the mirrored downtime, and the
/// objects surface as real ones when they cross the reflection axis.
struct GeneratorState {
    struct VirtualArm {
        double x_low = 0.0;  // mirrored coordinates, negative axis
        double x_high = 0.0;
        TimeStep next_eligible = 0;
    };
    struct PendingObject {
        double position;  // negative until it crosses the reflection axis
        int source_arm;
    };
    std::vector<VirtualArm> arms;
    std::vector<PendingObject> pending;
    TaskId next_id = 0;

    static GeneratorState from_config(const BeltConfig& config);
};

/// Advances the generator by one step (positions move, eligible arms drop
/// with probability new_object_prob) and returns the objects that crossed
/// onto the real belt at time `now`.
std::vector<BeltObject> generate_step(GeneratorState& gen, const BeltConfig& config,
                                      TimeStep now, Rng& rng);

struct BeltWorld {
    BeltConfig config;
    TimeStep now = 0;
    std::vector<BeltObject> objects;
    std::vector<TimeStep> arm_busy_until;
    GeneratorState gen;
    long total_objects = 0;
    long picked = 0;
    long missed = 0;

    static BeltWorld create(const BeltConfig& config);
    const BeltObject* find(TaskId id) const;
    BeltObject* find(TaskId id);
};

struct ExecutionEvents {
    std::vector<std::pair<AgentId, TaskId>> successes;
    std::vector<TaskId> misses;                            // exited the last workspace
    std::vector<std::pair<AgentId, TaskId>> window_ends;   // left some arm's workspace
    std::vector<TaskId> arrivals;
    bool any() const {
        return !successes.empty() || !misses.empty() || !window_ends.empty() ||
               !arrivals.empty();
    }
};

/// One execution step at world.now: each allocated arm whose target sits in
/// its workspace performs a Bernoulli(grasp_prob) pick (success starts the
/// downtime), the belt advances, and objects drifting past the last
/// workspace are marked missed. Advances world.now.
ExecutionEvents step_execution(BeltWorld& world, const Allocation& alloc, Rng& rng);

/// Snapshot of the current belt as an allocation problem: one task per
/// on-belt object, windows from residence times (clamped by arm downtime),
/// geometric grasp models.
ProblemInstance build_instance(const BeltWorld& world);

}  // namespace scoba::conveyor
