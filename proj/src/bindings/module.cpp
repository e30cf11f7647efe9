#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "scoba/allocator.hpp"
#include "scoba/conveyor.hpp"
#include "scoba/coordination.hpp"
#include "scoba/drone.hpp"
#include "scoba/harness.hpp"
#include "scoba/instance_io.hpp"
#include "scoba/policy_tree.hpp"

namespace py = pybind11;
using namespace scoba;

namespace {

// Instances are built from plain dicts/lists on the python side:
//   agents: [int], horizon: int,
//   tasks: [(id, penalty, downtime)],
//   windows: {(agent, task): (lower, upper)},
//   completion: {(agent, task): ("geometric", [p]) | ("epanechnikov", [mu, r])
//                | ("table", [v1, ...])}
ProblemInstance make_instance(
    const std::vector<AgentId>& agents,
    const std::vector<std::tuple<TaskId, double, TimeStep>>& tasks, TimeStep horizon,
    const std::map<std::pair<AgentId, TaskId>, std::pair<TimeStep, TimeStep>>& windows,
    const std::map<std::pair<AgentId, TaskId>,
                   std::pair<std::string, std::vector<double>>>& completion) {
    std::vector<TaskSpec> specs;
    for (const auto& [id, penalty, downtime] : tasks) {
        specs.push_back(TaskSpec{id, penalty, downtime});
    }
    std::map<std::pair<AgentId, TaskId>, TimeWindow> ws;
    for (const auto& [key, w] : windows) ws.insert({key, TimeWindow(w.first, w.second)});
    std::map<std::pair<AgentId, TaskId>, CompletionModel> models;
    for (const auto& [key, spec] : completion) {
        const auto& [name, params] = spec;
        if (name == "geometric") {
            models.insert({key, CompletionModel::geometric(params.at(0))});
        } else if (name == "epanechnikov") {
            models.insert({key, CompletionModel::epanechnikov(params.at(0), params.at(1))});
        } else if (name == "table") {
            models.insert({key, CompletionModel::table(params)});
        } else {
            throw InputError("unknown completion model: " + name);
        }
    }
    return ProblemInstance(agents, specs, horizon, ws, models);
}

AllocateOptions make_options(std::optional<int> conflict_budget, bool truncate) {
    AllocateOptions options;
    options.conflict_budget = conflict_budget;
    options.truncate = truncate;
    return options;
}

py::dict allocation_dict(const Allocation& alloc) {
    py::dict out;
    for (const auto& [agent, list] : alloc.assignments) {
        py::list entries;
        for (const auto& [task, t] : list) entries.append(py::make_tuple(task, t));
        out[py::int_(agent)] = entries;
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_scoba, m) {
    m.doc() = "Stochastic conflict-based task allocation core";

    py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
    py::register_exception<ResourceError>(m, "ResourceError", PyExc_RuntimeError);

    py::class_<ProblemInstance>(m, "ProblemInstance")
        .def(py::init(&make_instance), py::arg("agents"), py::arg("tasks"),
             py::arg("horizon"), py::arg("windows"), py::arg("completion"))
        .def_property_readonly("agents", &ProblemInstance::agents)
        .def_property_readonly("horizon", &ProblemInstance::horizon)
        .def("__repr__", [](const ProblemInstance& inst) {
            std::ostringstream ss;
            ss << "ProblemInstance(agents=" << inst.agents().size()
               << ", tasks=" << inst.tasks().size() << ", horizon=" << inst.horizon()
               << ")";
            return ss.str();
        });

    m.def("load_instance", &read_instance_file, py::arg("path"));
    m.def(
        "save_instance",
        [](const std::string& path, const ProblemInstance& instance) {
            write_instance_file(path, instance);
        },
        py::arg("path"), py::arg("instance"));

    m.def("attempt_feasible", &attempt_feasible, py::arg("instance"), py::arg("agent"),
          py::arg("task"), py::arg("t"));
    m.def("completion_upper_bound", &completion_upper_bound, py::arg("instance"),
          py::arg("agent"), py::arg("task"));
    m.def("grasp_cdf", &conveyor::grasp_cdf, py::arg("p"), py::arg("t"));
    m.def("epan_cdf", &drone::epan_cdf, py::arg("mu"), py::arg("r"), py::arg("t"));

    m.def(
        "detect_conflicts",
        [](const ProblemInstance& instance,
           const std::map<AgentId, std::vector<std::pair<TaskId, TimeStep>>>& assignments) {
            Allocation alloc;
            alloc.assignments = assignments;
            py::list out;
            for (const auto& c : detect_conflicts(instance, alloc)) {
                out.append(py::make_tuple(c.first_agent, c.second_agent, c.task,
                                          c.first_time, c.second_time));
            }
            return out;
        },
        py::arg("instance"), py::arg("assignments"));

    m.def(
        "plan_tree_summary",
        [](const ProblemInstance& instance, AgentId agent, bool truncate) {
            std::vector<TaskId> ids;
            for (const auto& ft : instance.feasible(agent)) ids.push_back(ft.task);
            const auto tree = plan_tree(agent, ids, instance.horizon(), instance, truncate);
            py::dict out;
            out["value"] = tree.value();
            out["nodes"] = tree.size();
            const auto first = extract_assignment(tree);
            out["first_assignment"] =
                first ? py::object(py::make_tuple(first->first, first->second))
                      : py::object(py::none());
            return out;
        },
        py::arg("instance"), py::arg("agent"), py::arg("truncate") = false);

    m.def(
        "allocate",
        [](const ProblemInstance& instance, std::optional<int> conflict_budget,
           bool truncate) {
            const auto result = allocate(instance, make_options(conflict_budget, truncate));
            py::dict out;
            out["allocation"] = allocation_dict(result.allocation);
            out["cost"] = result.cost;
            out["expansions"] = result.stats.expansions;
            out["expected_penalty"] =
                evaluate_expected_penalty(instance, result.policy());
            return out;
        },
        py::arg("instance"), py::arg("conflict_budget") = py::none(),
        py::arg("truncate") = false);

    m.def(
        "brute_force_optimal",
        [](const ProblemInstance& instance, std::uint64_t branch_budget) {
            BruteForceOptions options;
            options.branch_budget = branch_budget;
            const auto result = brute_force_optimal(instance, options);
            py::dict out;
            out["value"] = result.value;
            py::dict assignment;
            for (const auto& [task, agent] : result.assignment) {
                assignment[py::int_(task)] = agent;
            }
            out["assignment"] = assignment;
            return out;
        },
        py::arg("instance"), py::arg("branch_budget") = 10'000'000ULL);

    m.def(
        "run_trial",
        [](const std::string& domain, const std::string& planner, TimeStep horizon,
           std::uint64_t seed, int trial_index) {
            harness::TrialConfig config;
            config.domain = harness::parse_domain(domain);
            config.planner = harness::parse_planner(planner);
            config.horizon = horizon;
            config.seed = seed;
            const auto metrics = harness::run_trial(config, trial_index);
            py::dict out;
            out["total_tasks"] = metrics.total_tasks;
            out["unsuccessful"] = metrics.unsuccessful;
            out["fraction"] = metrics.fraction;
            out["planner_time_mean_s"] = metrics.planner_time_mean;
            return out;
        },
        py::arg("domain"), py::arg("planner"), py::arg("horizon"), py::arg("seed") = 0,
        py::arg("trial_index") = 0);
}
