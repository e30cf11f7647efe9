#include "scoba/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include "scoba/allocator.hpp"
#include "scoba/baselines/edd.hpp"
#include "scoba/baselines/hungarian.hpp"
#include "scoba/conveyor.hpp"
#include "scoba/coordination.hpp"
#include "scoba/drone.hpp"
#include "scoba/rng.hpp"

namespace scoba::harness {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct PlannerTimer {
    double total = 0.0;
    double max = 0.0;
    long count = 0;
    void record(double s) {
        total += s;
        max = std::max(max, s);
        ++count;
    }
    void fill(TrialMetrics& m) const {
        m.planner_invocations = count;
        m.planner_time_mean = count > 0 ? total / count : 0.0;
        m.planner_time_max = max;
    }
};

}  // namespace

std::string to_string(Domain d) {
    return d == Domain::Conveyor ? "conveyor" : "drone";
}

std::string to_string(Planner p) {
    switch (p) {
        case Planner::Scoba: return "scoba";
        case Planner::Edd: return "edd";
        case Planner::Hungarian: return "hungarian";
        case Planner::Mcts: return "mcts";
        case Planner::Qlearning: return "qlearning";
    }
    return "?";
}

Domain parse_domain(const std::string& s) {
    if (s == "conveyor") return Domain::Conveyor;
    if (s == "drone") return Domain::Drone;
    throw InputError("unknown domain: " + s);
}

Planner parse_planner(const std::string& s) {
    if (s == "scoba") return Planner::Scoba;
    if (s == "edd") return Planner::Edd;
    if (s == "hungarian") return Planner::Hungarian;
    if (s == "mcts") return Planner::Mcts;
    if (s == "qlearning") return Planner::Qlearning;
    throw InputError("unknown planner: " + s);
}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

struct RawConfig {
    TrialConfig config;
    std::optional<TimeStep> horizon;
    std::string sweep_param;
    std::vector<double> sweep_values;
    std::vector<Planner> planners;
};

RawConfig parse_lines(std::istream& in) {
    RawConfig raw;
    TrialConfig& c = raw.config;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ss(line);
        std::string key;
        if (!(ss >> key) || key[0] == '#') continue;
        try {
            if (key == "domain") {
                std::string v;
                ss >> v;
                c.domain = parse_domain(v);
            } else if (key == "planner") {
                std::string v;
                ss >> v;
                c.planner = parse_planner(v);
            } else if (key == "horizon") {
                TimeStep v;
                ss >> v;
                raw.horizon = v;
            } else if (key == "trials") {
                ss >> c.trials;
            } else if (key == "seed") {
                ss >> c.seed;
            } else if (key == "threads") {
                ss >> c.threads;
            } else if (key == "grasp_prob") {
                ss >> c.grasp_prob;
            } else if (key == "speed") {
                ss >> c.speed;
            } else if (key == "new_object_prob") {
                ss >> c.new_object_prob;
            } else if (key == "depots") {
                ss >> c.depots;
            } else if (key == "drones") {
                ss >> c.drones;
            } else if (key == "new_request_prob") {
                ss >> c.new_request_prob;
            } else if (key == "city_file") {
                ss >> c.city_file;
            } else if (key == "conflict_budget") {
                std::string v;
                ss >> v;
                if (v == "none") {
                    c.conflict_budget = std::nullopt;
                } else {
                    c.conflict_budget = std::stoi(v);
                }
            } else if (key == "mcts_iterations") {
                ss >> c.mcts.iterations;
            } else if (key == "mcts_depth") {
                ss >> c.mcts.depth;
            } else if (key == "mcts_exploration") {
                ss >> c.mcts.exploration;
            } else if (key == "qlearn_learning_rate") {
                ss >> c.qlearn.learning_rate;
            } else if (key == "qlearn_epsilon_decay") {
                ss >> c.qlearn.epsilon_decay;
            } else if (key == "qlearn_training_steps") {
                ss >> c.qlearn.training_steps;
            } else if (key == "qlearn_discretization") {
                ss >> c.qlearn.belt_discretization;
            } else if (key == "event_log_prefix") {
                ss >> c.event_log_prefix;
            } else if (key == "sweep_param") {
                ss >> raw.sweep_param;
            } else if (key == "sweep_values") {
                double v;
                while (ss >> v) raw.sweep_values.push_back(v);
            } else if (key == "planners") {
                std::string v;
                while (ss >> v) raw.planners.push_back(parse_planner(v));
            } else {
                throw InputError("unknown config key: " + key);
            }
            if (ss.fail() && !ss.eof()) throw InputError("malformed value for key: " + key);
        } catch (const std::invalid_argument& e) {
            std::ostringstream msg;
            msg << "config line " << lineno << ": " << e.what();
            throw InputError(msg.str());
        }
    }
    c.horizon = raw.horizon.value_or(c.domain == Domain::Drone ? 100 : 500);
    return raw;
}

}  // namespace

TrialConfig parse_config(std::istream& in) {
    return parse_lines(in).config;
}

TrialConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file: " + path);
    return parse_config(in);
}

SweepSpec parse_sweep(std::istream& in) {
    RawConfig raw = parse_lines(in);
    SweepSpec spec;
    spec.base = raw.config;
    spec.param = raw.sweep_param;
    spec.values = raw.sweep_values;
    spec.planners = raw.planners.empty() ? std::vector<Planner>{raw.config.planner}
                                         : raw.planners;
    if (spec.param.empty()) throw InputError("sweep file needs a sweep_param line");
    if (spec.values.empty()) throw InputError("sweep file needs a sweep_values line");
    return spec;
}

SweepSpec parse_sweep_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open sweep file: " + path);
    return parse_sweep(in);
}

void set_parameter(TrialConfig& config, const std::string& name, double value) {
    if (name == "speed") {
        config.speed = value;
    } else if (name == "grasp_prob") {
        config.grasp_prob = value;
    } else if (name == "new_object_prob") {
        config.new_object_prob = value;
    } else if (name == "new_request_prob") {
        config.new_request_prob = value;
    } else if (name == "drones") {
        config.drones = static_cast<int>(value);
    } else if (name == "depots") {
        config.depots = static_cast<int>(value);
    } else if (name == "horizon") {
        config.horizon = static_cast<TimeStep>(value);
    } else if (name == "trials") {
        config.trials = static_cast<int>(value);
    } else if (name == "conflict_budget") {
        config.conflict_budget = static_cast<int>(value);
    } else {
        throw InputError("unknown sweep parameter: " + name);
    }
}

// ---------------------------------------------------------------------------
// Conveyor controllers

namespace {

// MCTS view of the belt: per-arm actions are workspace slots of fixed width.
struct ConveyorSim {
    double slot_width = 0.02;

    using State = conveyor::BeltWorld;

    std::vector<AgentId> agents(const State& s) const {
        std::vector<AgentId> out;
        for (std::size_t i = 0; i < s.config.arms.size(); ++i) {
            out.push_back(static_cast<AgentId>(i));
        }
        return out;
    }

    int slots(const State& s, AgentId a) const {
        const auto& arm = s.config.arms[static_cast<std::size_t>(a)];
        return static_cast<int>(std::ceil((arm.x_high - arm.x_low) / slot_width - 1e-9));
    }

    const conveyor::BeltObject* object_in_slot(const State& s, AgentId a, int slot) const {
        const auto& arm = s.config.arms[static_cast<std::size_t>(a)];
        const double lo = arm.x_low + slot * slot_width;
        const double hi = lo + slot_width;
        const conveyor::BeltObject* found = nullptr;
        for (const auto& o : s.objects) {
            if (o.status != conveyor::BeltObject::Status::OnBelt) continue;
            if (o.position >= lo && o.position < hi) {
                if (found == nullptr || o.id < found->id) found = &o;
            }
        }
        return found;
    }

    std::vector<int> actions(const State& s, AgentId a) const {
        std::vector<int> out{0};
        if (s.arm_busy_until[static_cast<std::size_t>(a)] > s.now) return out;
        for (int slot = 0; slot < slots(s, a); ++slot) {
            if (object_in_slot(s, a, slot) != nullptr) out.push_back(slot + 1);
        }
        return out;
    }

    int rollout_action(const State& s, AgentId a) const {
        // EDD within the workspace: the furthest-along object leaves first.
        if (s.arm_busy_until[static_cast<std::size_t>(a)] > s.now) return 0;
        int best = 0;
        for (int slot = slots(s, a) - 1; slot >= 0; --slot) {
            if (object_in_slot(s, a, slot) != nullptr) {
                best = slot + 1;
                break;
            }
        }
        return best;
    }

    double step(State& s, const std::map<AgentId, int>& joint, Rng& rng) const {
        Allocation alloc;
        for (const auto& [agent, action] : joint) {
            if (action <= 0) continue;
            const auto* o = object_in_slot(s, agent, action - 1);
            if (o != nullptr) alloc.assignments[agent].push_back({o->id, s.now});
        }
        const auto events = conveyor::step_execution(s, alloc, rng);
        auto arrivals = conveyor::generate_step(s.gen, s.config, s.now, rng);
        for (auto& o : arrivals) s.objects.push_back(o);
        std::erase_if(s.objects, [](const conveyor::BeltObject& o) {
            return o.status != conveyor::BeltObject::Status::OnBelt;
        });
        return -static_cast<double>(events.misses.size());
    }

    bool terminal(const State&) const { return false; }
};

class ConveyorController {
  public:
    virtual ~ConveyorController() = default;
    virtual bool per_step() const { return false; }
    virtual Allocation plan(const conveyor::BeltWorld& world, Rng& planner_rng) = 0;
};

class ScobaConveyor : public ConveyorController {
  public:
    explicit ScobaConveyor(std::optional<int> budget) : budget_(budget) {}
    Allocation plan(const conveyor::BeltWorld& world, Rng&) override {
        const auto instance = conveyor::build_instance(world);
        if (instance.tasks().empty()) return {};
        AllocateOptions options;
        options.conflict_budget = budget_;
        options.truncate = true;
        const auto graph = build_graph(instance, /*directed=*/true);
        // Upstream arms claim first, downstream arms plan the leftovers.
        return topological_allocate(instance, graph, options,
                                    TopologicalExclusion::AllAssigned)
            .allocation;
    }

  private:
    std::optional<int> budget_;
};

class EddConveyor : public ConveyorController {
  public:
    Allocation plan(const conveyor::BeltWorld& world, Rng&) override {
        const auto instance = conveyor::build_instance(world);
        if (instance.tasks().empty()) return {};
        std::set<AgentId> free_agents;
        for (std::size_t i = 0; i < world.arm_busy_until.size(); ++i) {
            if (world.arm_busy_until[i] <= world.now) {
                free_agents.insert(static_cast<AgentId>(i));
            }
        }
        return baselines::edd_assign(instance, free_agents);
    }
};

class HungarianConveyor : public ConveyorController {
  public:
    Allocation plan(const conveyor::BeltWorld& world, Rng&) override {
        const auto instance = conveyor::build_instance(world);
        if (instance.tasks().empty()) return {};
        // One-shot matching over objects currently inside a workspace; the
        // matrix keeps zeros for pairs whose window has not opened yet.
        auto matrix = baselines::build_assignment_matrix(instance);
        for (std::size_t i = 0; i < matrix.agents.size(); ++i) {
            for (std::size_t j = 0; j < matrix.tasks.size(); ++j) {
                const TimeWindow* w = instance.window(matrix.agents[i], matrix.tasks[j]);
                if (w == nullptr || w->lower > world.now) {
                    matrix.weights[i * matrix.tasks.size() + j] = 0.0;
                }
            }
        }
        return baselines::hungarian_assign(matrix, instance);
    }
};

class MctsConveyor : public ConveyorController {
  public:
    explicit MctsConveyor(const baselines::MctsConfig& config) : config_(config) {}
    bool per_step() const override { return true; }
    Allocation plan(const conveyor::BeltWorld& world, Rng& planner_rng) override {
        const auto joint = baselines::mcts_plan(sim_, world, config_, planner_rng);
        Allocation alloc;
        for (const auto& [agent, action] : joint) {
            if (action <= 0) continue;
            const auto* o = sim_.object_in_slot(world, agent, action - 1);
            if (o != nullptr) alloc.assignments[agent].push_back({o->id, world.now});
        }
        return alloc;
    }

  private:
    ConveyorSim sim_;
    baselines::MctsConfig config_;
};

class QlearnConveyor : public ConveyorController {
  public:
    QlearnConveyor(const baselines::QTable* table, const baselines::ConveyorQModel* model)
        : table_(table), model_(model) {}
    bool per_step() const override { return true; }
    Allocation plan(const conveyor::BeltWorld& world, Rng&) override {
        return model_->targets(world, table_->greedy(model_->encode(world)));
    }

  private:
    const baselines::QTable* table_;
    const baselines::ConveyorQModel* model_;
};

// Shared per-config state (a trained Q-table) reused across trials.
struct PlannerContext {
    std::shared_ptr<const baselines::QTable> qtable;
    std::shared_ptr<const baselines::ConveyorQModel> qmodel;
};

PlannerContext make_context(const TrialConfig& config) {
    PlannerContext ctx;
    if (config.planner == Planner::Qlearning) {
        if (config.domain != Domain::Conveyor) {
            throw InputError("q-learning is only available on the conveyor domain");
        }
        const auto belt = conveyor::BeltConfig::defaults(config.grasp_prob, config.speed,
                                                         config.new_object_prob);
        ctx.qmodel = std::make_shared<baselines::ConveyorQModel>(
            belt, config.qlearn.belt_discretization);
        ctx.qtable = std::make_shared<baselines::QTable>(
            baselines::qlearn_train(belt, config.qlearn, config.seed));
    }
    return ctx;
}

std::unique_ptr<ConveyorController> make_conveyor_controller(const TrialConfig& config,
                                                             const PlannerContext& ctx) {
    switch (config.planner) {
        case Planner::Scoba:
            return std::make_unique<ScobaConveyor>(config.conflict_budget);
        case Planner::Edd:
            return std::make_unique<EddConveyor>();
        case Planner::Hungarian:
            return std::make_unique<HungarianConveyor>();
        case Planner::Mcts:
            return std::make_unique<MctsConveyor>(config.mcts);
        case Planner::Qlearning:
            return std::make_unique<QlearnConveyor>(ctx.qtable.get(), ctx.qmodel.get());
    }
    throw InputError("unknown planner");
}

TrialMetrics run_conveyor_trial(const TrialConfig& config, int trial_index,
                                const PlannerContext& ctx) {
    const auto belt = conveyor::BeltConfig::defaults(config.grasp_prob, config.speed,
                                                     config.new_object_prob);
    auto world = conveyor::BeltWorld::create(belt);
    Rng gen_rng = make_rng(config.seed, trial_index, kStreamGeneration);
    Rng exec_rng = make_rng(config.seed, trial_index, kStreamExecution);
    Rng planner_rng = make_rng(config.seed, trial_index, kStreamPlanner);

    auto controller = make_conveyor_controller(config, ctx);
    PlannerTimer timer;
    std::ofstream log;
    if (!config.event_log_prefix.empty()) {
        log.open(config.event_log_prefix + std::to_string(trial_index) + ".csv");
        log << "time,event,object,arm\n";
    }

    Allocation current;
    bool replan = true;

    auto plan_now = [&]() {
        const auto start = Clock::now();
        current = controller->plan(world, planner_rng);
        timer.record(seconds_since(start));
    };

    auto step_once = [&](bool generate) {
        bool freed = false;
        for (TimeStep busy : world.arm_busy_until) {
            if (busy == world.now) freed = true;
        }
        if (controller->per_step() || replan || freed) {
            plan_now();
            replan = false;
        }
        const TimeStep t = world.now;
        const auto events = conveyor::step_execution(world, current, exec_rng);
        std::vector<conveyor::BeltObject> arrivals;
        if (generate) {
            arrivals = conveyor::generate_step(world.gen, belt, world.now, gen_rng);
            for (const auto& o : arrivals) {
                world.objects.push_back(o);
                ++world.total_objects;
            }
        }
        if (log.is_open()) {
            for (const auto& [arm, obj] : events.successes) {
                log << t << ",pick," << obj << "," << arm << "\n";
            }
            for (const auto& [arm, obj] : events.window_ends) {
                log << t << ",window_end," << obj << "," << arm << "\n";
            }
            for (TaskId obj : events.misses) log << t << ",miss," << obj << ",-1\n";
            for (const auto& o : arrivals) {
                log << world.now << ",arrival," << o.id << ",-1\n";
            }
        }
        std::erase_if(world.objects, [](const conveyor::BeltObject& o) {
            return o.status != conveyor::BeltObject::Status::OnBelt;
        });
        if (events.any() || !arrivals.empty()) replan = true;
    };

    for (TimeStep t = 0; t < config.horizon; ++t) step_once(true);

    // Drain: no fresh arrivals, run until the belt empties.
    const TimeStep drain_limit =
        world.now + static_cast<TimeStep>(std::ceil(belt.length / belt.speed)) + 2;
    while (world.now < drain_limit &&
           std::any_of(world.objects.begin(), world.objects.end(), [](const auto& o) {
               return o.status == conveyor::BeltObject::Status::OnBelt;
           })) {
        step_once(false);
    }

    TrialMetrics m;
    m.total_tasks = world.total_objects;
    m.unsuccessful = world.missed;
    m.fraction = m.total_tasks > 0
                     ? static_cast<double>(m.unsuccessful) / static_cast<double>(m.total_tasks)
                     : 0.0;
    m.seed = substream_seed(config.seed, trial_index, kStreamGeneration);
    timer.fill(m);
    return m;
}

// ---------------------------------------------------------------------------
// Drone controllers

struct DroneSim {
    using State = drone::DroneWorld;

    std::vector<AgentId> agents(const State& s) const {
        std::vector<AgentId> out;
        for (const auto& d : s.drones) out.push_back(d.id);
        return out;
    }

    bool dispatchable(const State& s, const drone::Drone& d,
                      const drone::DeliveryRequest& r) const {
        if (r.status != drone::DeliveryRequest::Status::Pending) return false;
        if (d.ready_at > s.now) return false;
        if (!r.window.contains(s.now)) return false;
        const auto& depot = s.city.depots[static_cast<std::size_t>(d.depot)];
        return drone::distance(depot, r.location) <= s.city.range_limit;
    }

    std::vector<int> actions(const State& s, AgentId agent) const {
        std::vector<int> out{0};
        const auto& d = s.drones[static_cast<std::size_t>(agent)];
        for (const auto& r : s.requests) {
            if (dispatchable(s, d, r)) out.push_back(static_cast<int>(r.id) + 1);
        }
        return out;
    }

    int rollout_action(const State& s, AgentId agent) const {
        const auto& d = s.drones[static_cast<std::size_t>(agent)];
        int best = 0;
        TimeStep best_deadline = 0;
        for (const auto& r : s.requests) {
            if (!dispatchable(s, d, r)) continue;
            if (best == 0 || r.window.upper < best_deadline) {
                best = static_cast<int>(r.id) + 1;
                best_deadline = r.window.upper;
            }
        }
        return best;
    }

    double step(State& s, const std::map<AgentId, int>& joint, Rng& rng) const {
        Allocation alloc;
        std::set<TaskId> taken;
        for (const auto& [agent, action] : joint) {
            if (action <= 0) continue;
            const TaskId id = static_cast<TaskId>(action - 1);
            if (!taken.insert(id).second) continue;  // one drone per request
            alloc.assignments[agent].push_back({id, s.now});
        }
        const auto events = drone::step_execution(s, alloc, rng);
        auto arrivals =
            drone::generate_requests(s.city, s.new_request_prob, rng, s.now, s.next_id);
        for (auto& r : arrivals) s.requests.push_back(r);
        double reward = -static_cast<double>(events.expiries.size());
        for (const auto& d : events.dispatches) {
            if (!d.on_time) reward -= 1.0;
        }
        return reward;
    }

    bool terminal(const State&) const { return false; }
};

class DroneController {
  public:
    virtual ~DroneController() = default;
    virtual bool per_step() const { return false; }
    virtual Allocation plan(const drone::DroneWorld& world, Rng& planner_rng) = 0;
};

class ScobaDrone : public DroneController {
  public:
    explicit ScobaDrone(std::optional<int> budget) : budget_(budget) {}
    Allocation plan(const drone::DroneWorld& world, Rng&) override {
        const auto instance = drone::build_instance(world);
        if (instance.tasks().empty()) return {};
        AllocateOptions options;
        options.conflict_budget = budget_;
        options.truncate = true;
        // Only next assignments get executed before the next replan, so
        // conflicts are resolved at that granularity.
        options.first_assignment_conflicts = true;
        return allocate_per_component(instance, options).allocation;
    }

  private:
    std::optional<int> budget_;
};

class EddDrone : public DroneController {
  public:
    Allocation plan(const drone::DroneWorld& world, Rng&) override {
        const auto instance = drone::build_instance(world);
        if (instance.tasks().empty()) return {};
        std::set<AgentId> free_agents;
        for (const auto& d : world.drones) {
            if (d.ready_at <= world.now) free_agents.insert(d.id);
        }
        return baselines::edd_assign(instance, free_agents);
    }
};

class HungarianDrone : public DroneController {
  public:
    Allocation plan(const drone::DroneWorld& world, Rng&) override {
        const auto instance = drone::build_instance(world);
        if (instance.tasks().empty()) return {};
        return baselines::hungarian_assign(baselines::build_assignment_matrix(instance),
                                           instance);
    }
};

class MctsDrone : public DroneController {
  public:
    explicit MctsDrone(const baselines::MctsConfig& config) : config_(config) {}
    bool per_step() const override { return true; }
    Allocation plan(const drone::DroneWorld& world, Rng& planner_rng) override {
        const auto joint = baselines::mcts_plan(sim_, world, config_, planner_rng);
        Allocation alloc;
        std::set<TaskId> taken;
        for (const auto& [agent, action] : joint) {
            if (action <= 0) continue;
            const TaskId id = static_cast<TaskId>(action - 1);
            if (!taken.insert(id).second) continue;
            alloc.assignments[agent].push_back({id, world.now});
        }
        return alloc;
    }

  private:
    DroneSim sim_;
    baselines::MctsConfig config_;
};

std::unique_ptr<DroneController> make_drone_controller(const TrialConfig& config) {
    switch (config.planner) {
        case Planner::Scoba:
            return std::make_unique<ScobaDrone>(config.conflict_budget);
        case Planner::Edd:
            return std::make_unique<EddDrone>();
        case Planner::Hungarian:
            return std::make_unique<HungarianDrone>();
        case Planner::Mcts:
            return std::make_unique<MctsDrone>(config.mcts);
        case Planner::Qlearning:
            throw InputError("q-learning is only available on the conveyor domain");
    }
    throw InputError("unknown planner");
}

drone::CityModel city_for(const TrialConfig& config) {
    if (!config.city_file.empty()) return drone::CityModel::load(config.city_file);
    return drone::CityModel::with_depots(config.depots);
}

TrialMetrics run_drone_trial(const TrialConfig& config, int trial_index) {
    const auto city = city_for(config);
    auto world = drone::DroneWorld::create(city, config.drones, config.new_request_prob);
    Rng gen_rng = make_rng(config.seed, trial_index, kStreamGeneration);
    Rng exec_rng = make_rng(config.seed, trial_index, kStreamExecution);
    Rng planner_rng = make_rng(config.seed, trial_index, kStreamPlanner);

    auto controller = make_drone_controller(config);
    PlannerTimer timer;
    std::ofstream log;
    if (!config.event_log_prefix.empty()) {
        log.open(config.event_log_prefix + std::to_string(trial_index) + ".csv");
        log << "time,event,request,drone,delivery_time,on_time\n";
    }

    if (config.horizon > 0) {
        auto initial = drone::initial_requests(city, config.drones, gen_rng, world.next_id);
        for (auto& r : initial) {
            world.requests.push_back(r);
            ++world.total_requests;
            if (log.is_open()) {
                log << 0 << ",arrival," << r.id << ",-1,,\n";
            }
        }
    }

    Allocation current;
    bool replan = true;

    auto plan_now = [&]() {
        const auto start = Clock::now();
        current = controller->plan(world, planner_rng);
        timer.record(seconds_since(start));
    };

    auto step_once = [&](bool generate) {
        bool freed = false;
        for (const auto& d : world.drones) {
            if (d.ready_at == world.now) freed = true;
        }
        if (controller->per_step() || replan || freed) {
            plan_now();
            replan = false;
        }
        const TimeStep t = world.now;
        const auto events = drone::step_execution(world, current, exec_rng);
        std::vector<drone::DeliveryRequest> arrivals;
        if (generate) {
            arrivals = drone::generate_requests(city, config.new_request_prob, gen_rng,
                                                world.now, world.next_id);
            for (const auto& r : arrivals) {
                world.requests.push_back(r);
                ++world.total_requests;
            }
        }
        if (log.is_open()) {
            for (const auto& d : events.dispatches) {
                log << t << ",dispatch," << d.request << "," << d.drone << ","
                    << d.delivery_time << "," << (d.on_time ? 1 : 0) << "\n";
            }
            for (TaskId r : events.expiries) log << t << ",expire," << r << ",-1,,\n";
            for (const auto& r : arrivals) {
                log << world.now << ",arrival," << r.id << ",-1,,\n";
            }
        }
        if (events.any() || !arrivals.empty()) replan = true;
    };

    for (TimeStep t = 0; t < config.horizon; ++t) step_once(true);

    // Drain: no fresh requests; pending ones resolve within their windows.
    const TimeStep drain_limit = world.now + 32;
    while (world.now < drain_limit &&
           std::any_of(world.requests.begin(), world.requests.end(), [](const auto& r) {
               return r.status == drone::DeliveryRequest::Status::Pending;
           })) {
        step_once(false);
    }

    TrialMetrics m;
    m.total_tasks = world.total_requests;
    m.unsuccessful = world.late;
    m.fraction = m.total_tasks > 0
                     ? static_cast<double>(m.unsuccessful) / static_cast<double>(m.total_tasks)
                     : 0.0;
    m.seed = substream_seed(config.seed, trial_index, kStreamGeneration);
    timer.fill(m);
    return m;
}

}  // namespace

TrialMetrics run_trial(const TrialConfig& config, int trial_index) {
    if (config.domain == Domain::Conveyor) {
        return run_conveyor_trial(config, trial_index, make_context(config));
    }
    return run_drone_trial(config, trial_index);
}

std::vector<TrialMetrics> run_trials(const TrialConfig& config) {
    if (config.trials < 0) throw InputError("trial count must be nonnegative");
    const PlannerContext ctx = make_context(config);
    std::vector<TrialMetrics> results(static_cast<std::size_t>(config.trials));
    const int threads = std::max(1, config.threads);

    auto work = [&](int trial) {
        if (config.domain == Domain::Conveyor) {
            results[static_cast<std::size_t>(trial)] = run_conveyor_trial(config, trial, ctx);
        } else {
            results[static_cast<std::size_t>(trial)] = run_drone_trial(config, trial);
        }
    };

    if (threads == 1) {
        for (int i = 0; i < config.trials; ++i) work(i);
    } else {
        std::atomic<int> next{0};
        std::exception_ptr error;
        std::mutex error_mutex;
        std::vector<std::thread> pool;
        for (int w = 0; w < threads; ++w) {
            pool.emplace_back([&]() {
                while (true) {
                    const int trial = next.fetch_add(1);
                    if (trial >= config.trials) return;
                    try {
                        work(trial);
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(error_mutex);
                        if (!error) error = std::current_exception();
                        return;
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
        if (error) std::rethrow_exception(error);
    }
    return results;
}

void write_metrics_csv(std::ostream& out, const TrialConfig& config,
                       const std::vector<TrialMetrics>& metrics) {
    out << "domain,planner,trial,total_tasks,unsuccessful,fraction,"
           "planner_time_mean_s,planner_time_max_s,planner_invocations,seed\n";
    out << std::setprecision(12);
    for (std::size_t i = 0; i < metrics.size(); ++i) {
        const auto& m = metrics[i];
        out << to_string(config.domain) << "," << to_string(config.planner) << "," << i
            << "," << m.total_tasks << "," << m.unsuccessful << "," << m.fraction << ","
            << m.planner_time_mean << "," << m.planner_time_max << ","
            << m.planner_invocations << "," << m.seed << "\n";
    }
}

namespace {

std::pair<double, double> mean_stderr(const std::vector<double>& xs) {
    if (xs.empty()) return {0.0, 0.0};
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    if (xs.size() < 2) return {mean, 0.0};
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(xs.size() - 1);
    return {mean, std::sqrt(var / static_cast<double>(xs.size()))};
}

}  // namespace

std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
    std::vector<SweepRow> rows;
    for (Planner planner : spec.planners) {
        for (double value : spec.values) {
            TrialConfig config = spec.base;
            config.planner = planner;
            set_parameter(config, spec.param, value);
            const auto metrics = run_trials(config);
            std::vector<double> fractions, times;
            for (const auto& m : metrics) {
                fractions.push_back(m.fraction);
                times.push_back(m.planner_time_mean);
            }
            const auto [mean, se] = mean_stderr(fractions);
            const auto [tmean, tse] = mean_stderr(times);
            (void)tse;
            rows.push_back(SweepRow{config.domain, planner, spec.param, value, mean, se,
                                    tmean, config.trials});
        }
    }
    return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "domain,planner,param,value,mean_fraction,stderr,mean_planner_time_s,trials\n";
    out << std::setprecision(12);
    for (const auto& r : rows) {
        out << to_string(r.domain) << "," << to_string(r.planner) << "," << r.param << ","
            << r.value << "," << r.mean_fraction << "," << r.stderr_fraction << ","
            << r.mean_planner_time << "," << r.trials << "\n";
    }
}

// ---------------------------------------------------------------------------
// Timing reports

std::vector<TreeTimingRow> conveyor_tree_timing(const std::vector<int>& object_counts,
                                                int repeats, std::uint64_t seed) {
    std::vector<TreeTimingRow> rows;
    const conveyor::ArmSpec arm{0.05, 0.35, 0.75};
    const double speed = 0.07;
    for (int count : object_counts) {
        double nodes = 0.0, secs = 0.0, hung = 0.0;
        for (int rep = 0; rep < repeats; ++rep) {
            Rng rng = make_rng(seed, static_cast<std::uint64_t>(count), rep);
            // Objects scattered back along the approach: consecutive windows
            // overlap part of the time.
            std::vector<AgentId> agents{0};
            std::vector<TaskSpec> tasks;
            std::map<std::pair<AgentId, TaskId>, TimeWindow> windows;
            std::map<std::pair<AgentId, TaskId>, CompletionModel> completion;
            double offset = 0.0;
            TimeStep horizon = 1;
            for (int i = 0; i < count; ++i) {
                conveyor::BeltObject o{i, arm.x_low - offset, 0,
                                       conveyor::BeltObject::Status::OnBelt};
                const auto w = conveyor::window_for(arm, o, speed, 0);
                tasks.push_back(TaskSpec{i, 1.0, 2});
                windows.insert({{0, i}, *w});
                completion.insert({{0, i}, CompletionModel::geometric(arm.grasp_prob)});
                horizon = std::max(horizon, w->upper + 3);
                offset += std::uniform_real_distribution<double>(0.7, 2.1)(rng) * speed;
            }
            ProblemInstance instance(agents, tasks, horizon, windows, completion);
            std::vector<TaskId> ids;
            for (const auto& t : instance.tasks()) ids.push_back(t.id);

            auto start = Clock::now();
            const auto tree = plan_tree(0, ids, horizon, instance, /*truncate=*/false);
            secs += seconds_since(start);
            nodes += static_cast<double>(tree.size());

            start = Clock::now();
            const auto matrix = baselines::build_assignment_matrix(instance);
            (void)baselines::hungarian_assign(matrix, instance);
            hung += seconds_since(start);
        }
        const double n = static_cast<double>(std::max(1, repeats));
        rows.push_back(TreeTimingRow{count, nodes / n, secs / n, hung / n});
    }
    return rows;
}

std::vector<AllocTimingRow> drone_alloc_timing(
    const std::vector<std::pair<int, int>>& fleet_settings,
    const std::vector<int>& request_counts, int trials, std::uint64_t seed,
    std::optional<int> conflict_budget) {
    std::vector<AllocTimingRow> rows;
    for (const auto& [depots, drones] : fleet_settings) {
        const auto city = drone::CityModel::with_depots(depots);
        for (int requests : request_counts) {
            std::vector<double> times;
            double hung = 0.0, mcts = 0.0;
            for (int trial = 0; trial < trials; ++trial) {
                Rng rng = make_rng(seed, static_cast<std::uint64_t>(trial),
                                   static_cast<std::uint64_t>(requests));
                auto world = drone::DroneWorld::create(city, drones, 0.0);
                for (int i = 0; i < requests; ++i) {
                    drone::DeliveryRequest r;
                    r.id = world.next_id++;
                    r.location.x = std::uniform_real_distribution<double>(
                        city.box_min.x, city.box_max.x)(rng);
                    r.location.y = std::uniform_real_distribution<double>(
                        city.box_min.y, city.box_max.y)(rng);
                    const TimeStep duration =
                        std::uniform_int_distribution<TimeStep>(15, 30)(rng);
                    r.window = TimeWindow(0, duration);
                    world.requests.push_back(r);
                }
                const auto instance = drone::build_instance(world);

                AllocateOptions options;
                options.conflict_budget = conflict_budget;
                options.truncate = true;
                auto start = Clock::now();
                (void)allocate_per_component(instance, options);
                times.push_back(seconds_since(start));

                start = Clock::now();
                (void)baselines::hungarian_assign(
                    baselines::build_assignment_matrix(instance), instance);
                hung += seconds_since(start);

                DroneSim sim;
                baselines::MctsConfig mcfg;
                start = Clock::now();
                (void)baselines::mcts_plan(sim, world, mcfg, rng);
                mcts += seconds_since(start);
            }
            const auto [mean, se] = mean_stderr(times);
            const double n = static_cast<double>(std::max(1, trials));
            rows.push_back(
                AllocTimingRow{depots, drones, requests, mean, se, hung / n, mcts / n});
        }
    }
    return rows;
}

void write_tree_timing_csv(std::ostream& out, const std::vector<TreeTimingRow>& rows) {
    out << "objects,mean_tree_nodes,mean_plan_seconds,hungarian_seconds\n";
    out << std::setprecision(9);
    for (const auto& r : rows) {
        out << r.objects << "," << r.mean_nodes << "," << r.mean_seconds << ","
            << r.hungarian_seconds << "\n";
    }
}

void write_alloc_timing_csv(std::ostream& out, const std::vector<AllocTimingRow>& rows) {
    out << "depots,drones,requests,mean_seconds,stderr_seconds,hungarian_seconds,"
           "mcts_seconds\n";
    out << std::setprecision(9);
    for (const auto& r : rows) {
        out << r.depots << "," << r.drones << "," << r.requests << "," << r.mean_seconds
            << "," << r.stderr_seconds << "," << r.hungarian_seconds << ","
            << r.mcts_seconds << "\n";
    }
}

OracleCheckReport oracle_check(int trials, std::uint64_t seed, std::ostream* progress) {
    OracleCheckReport report;
    report.all_small = true;
    report.zero_at_slowest = true;
    const std::vector<double> speeds{0.04, 0.07, 0.1};
    const std::vector<double> probs{0.5, 0.75, 1.0};
    for (double speed : speeds) {
        for (double prob : probs) {
            TrialConfig config;
            config.domain = Domain::Conveyor;
            config.planner = Planner::Scoba;
            config.horizon = 500;
            config.trials = trials;
            config.seed = seed;
            config.grasp_prob = 1.0;
            config.speed = speed;
            config.new_object_prob = prob;
            const auto metrics = run_trials(config);
            double mean = 0.0;
            for (const auto& m : metrics) mean += m.fraction;
            mean /= static_cast<double>(std::max<std::size_t>(1, metrics.size()));
            report.cells.push_back(OracleCheckCell{speed, prob, mean});
            if (mean > 1e-3) report.all_small = false;
            if (speed == 0.04 && mean != 0.0) report.zero_at_slowest = false;
            if (progress != nullptr) {
                *progress << "oracle-check speed=" << speed << " prob=" << prob
                          << " mean_fraction=" << mean << "\n";
            }
        }
    }
    return report;
}

void write_oracle_csv(std::ostream& out, const OracleCheckReport& report) {
    out << "speed,new_object_prob,mean_fraction\n";
    out << std::setprecision(12);
    for (const auto& c : report.cells) {
        out << c.speed << "," << c.new_object_prob << "," << c.mean_fraction << "\n";
    }
}

}  // namespace scoba::harness
