#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "scoba/allocator.hpp"
#include "test_util.hpp"

using namespace scoba;

namespace {

// Two agents contending for a shared task, each with a private fallback.
// The root conflicts on the shared task and both children are conflict-free.
ProblemInstance contention_instance() {
    std::map<std::pair<AgentId, TaskId>, TimeWindow> windows{
        {{1, 0}, TimeWindow(0, 4)}, {{3, 0}, TimeWindow(0, 4)},
        {{1, 1}, TimeWindow(0, 4)}, {{3, 2}, TimeWindow(0, 4)},
    };
    std::map<std::pair<AgentId, TaskId>, CompletionModel> completion{
        {{1, 0}, CompletionModel::geometric(0.55)},
        {{3, 0}, CompletionModel::geometric(0.5)},
        {{1, 1}, CompletionModel::geometric(0.30)},
        {{3, 2}, CompletionModel::geometric(0.10)},
    };
    return ProblemInstance({1, 3}, {TaskSpec{0}, TaskSpec{1}, TaskSpec{2}}, 10,
                           std::move(windows), std::move(completion));
}

AllocateOptions exact_options() {
    AllocateOptions options;
    options.conflict_budget = std::nullopt;
    options.truncate = false;
    return options;
}

}  // namespace

TEST_CASE("root conflict spawns one child per involved agent, best child wins") {
    const auto instance = contention_instance();
    const auto options = exact_options();

    const auto root = make_root(instance, options);
    const auto root_conflicts = detect_conflicts(instance, root.flat_allocation());
    REQUIRE(root_conflicts.size() == 1);
    CHECK(root_conflicts[0].task == 0);

    const auto children = expand_conflicts(root, instance, options);
    REQUIRE(children.size() == 2);
    for (const auto& child : children) {
        std::size_t total = 0;
        for (const auto& [agent, ex] : child.constraints) total += ex.size();
        CHECK(total == 1);  // exactly one new constraint per child
        CHECK(child.cost >= root.cost - 1e-12);  // exclusion never looks cheaper
    }

    const auto result = allocate(instance, options);
    CHECK(result.cost ==
          doctest::Approx(std::min(children[0].cost, children[1].cost)).epsilon(1e-12));
    CHECK(detect_conflicts(instance, result.allocation).empty());
    CHECK(result.unassigned.empty());
}

TEST_CASE("single agent reduces to plan-tree extraction with no children") {
    ProblemInstance instance({0}, {TaskSpec{0}}, 10, {{{0, 0}, TimeWindow(0, 2)}},
                             {{{0, 0}, CompletionModel::geometric(0.75)}});
    const auto result = allocate(instance, exact_options());
    CHECK(result.stats.expansions == 0);
    CHECK(result.stats.children_generated == 0);
    CHECK(result.cost == doctest::Approx(0.0625));
    const auto firsts = result.first_assignments();
    REQUIRE(firsts.count(0));
    CHECK(firsts.at(0) == std::pair<TaskId, TimeStep>{0, 0});
}

TEST_CASE("no feasible attempts returns the empty allocation") {
    ProblemInstance instance({0, 1}, {TaskSpec{0}}, 10, {}, {});
    const auto result = allocate(instance, exact_options());
    CHECK(result.allocation.empty());
    CHECK(result.cost == 0.0);
}

TEST_CASE("generate_child examples") {
    SUBCASE("constraining a never-attempted task keeps the cost unchanged") {
        // task 1's window sits inside task 0's attempt occupancy, so the
        // optimal branch never attempts it.
        ProblemInstance instance(
            {0}, {TaskSpec{0}, TaskSpec{1}}, 10,
            {{{0, 0}, TimeWindow(0, 4)}, {{0, 1}, TimeWindow(1, 3)}},
            {{{0, 0}, CompletionModel::geometric(0.6)},
             {{0, 1}, CompletionModel::geometric(0.5)}});
        const auto options = exact_options();
        const auto root = make_root(instance, options);
        REQUIRE(root.flat_allocation().assignments.at(0).size() == 1);

        const auto child = generate_child(root, 0, 1, instance, options);
        CHECK(child.cost == doctest::Approx(root.cost).epsilon(1e-12));
        CHECK(child.flat_allocation() == root.flat_allocation());
    }
    SUBCASE("constraining the only task leaves the full residual penalty") {
        ProblemInstance instance({0}, {TaskSpec{0}}, 10, {{{0, 0}, TimeWindow(0, 2)}},
                                 {{{0, 0}, CompletionModel::geometric(0.75)}});
        const auto options = exact_options();
        const auto root = make_root(instance, options);
        const auto child = generate_child(root, 0, 0, instance, options);
        CHECK(child.trees.at(0)->value() == 0.0);
        CHECK(child.cost == doctest::Approx(1.0));  // certain penalty for task 0
        CHECK(child.flat_allocation().empty());
    }
}

TEST_CASE("three agents on one task expand into three children") {
    std::map<std::pair<AgentId, TaskId>, TimeWindow> windows;
    std::map<std::pair<AgentId, TaskId>, CompletionModel> completion;
    for (AgentId a = 0; a < 3; ++a) {
        windows.insert({{a, 0}, TimeWindow(0, 3)});
        completion.insert({{a, 0}, CompletionModel::geometric(0.4 + 0.1 * a)});
    }
    ProblemInstance instance({0, 1, 2}, {TaskSpec{0}}, 10, std::move(windows),
                             std::move(completion));
    const auto options = exact_options();
    const auto root = make_root(instance, options);
    const auto children = expand_conflicts(root, instance, options);
    CHECK(children.size() == 3);

    SUBCASE("conflict-free node refuses expansion") {
        const auto result = allocate(instance, options);
        ConstraintTreeNode done;
        done.constraints = {};
        done.trees = result.trees;
        done.cost = result.cost;
        CHECK_THROWS_AS(expand_conflicts(done, instance, options), InputError);
    }
}

TEST_CASE("tie_break keeps the lowest agent id per contested task") {
    const auto instance = contention_instance();
    const auto root = make_root(instance, exact_options());
    const auto alloc = root.flat_allocation();

    const auto [resolved, unassigned] = tie_break(alloc, instance);
    CHECK(detect_conflicts(instance, resolved).empty());
    REQUIRE(unassigned.size() == 1);
    CHECK(*unassigned.begin() == 3);
    // agent 1 kept the contested task
    bool kept = false;
    for (const auto& [task, t] : resolved.assignments.at(1)) {
        (void)t;
        if (task == 0) kept = true;
    }
    CHECK(kept);

    SUBCASE("conflict-free input passes through untouched") {
        const auto [again, none] = tie_break(resolved, instance);
        CHECK(again == resolved);
        CHECK(none.empty());
    }
}

TEST_CASE("three-way tie break: one keeper, two unassigned") {
    std::map<std::pair<AgentId, TaskId>, TimeWindow> windows;
    std::map<std::pair<AgentId, TaskId>, CompletionModel> completion;
    for (AgentId a : {2, 5, 9}) {
        windows.insert({{a, 0}, TimeWindow(0, 3)});
        completion.insert({{a, 0}, CompletionModel::geometric(0.5)});
    }
    ProblemInstance instance({2, 5, 9}, {TaskSpec{0}}, 10, std::move(windows),
                             std::move(completion));
    Allocation alloc;
    alloc.assignments[2] = {{0, 0}};
    alloc.assignments[5] = {{0, 0}};
    alloc.assignments[9] = {{0, 1}};
    const auto [resolved, unassigned] = tie_break(alloc, instance);
    CHECK(resolved.assignments.count(2) == 1);
    CHECK(unassigned == std::set<AgentId>{5, 9});
}

TEST_CASE("exhausted budget returns the tie-broken current best") {
    const auto instance = contention_instance();
    AllocateOptions options;
    options.conflict_budget = 0;
    options.truncate = false;
    const auto result = allocate(instance, options);
    CHECK(result.stats.budget_exhausted);
    CHECK(detect_conflicts(instance, result.allocation).empty());
    CHECK(result.unassigned == std::set<AgentId>{3});
}

TEST_CASE("popped costs are monotonically non-decreasing") {
    Rng rng(2024);
    for (int rep = 0; rep < 80; ++rep) {
        const auto instance = testing::random_instance(rng);
        const auto result = allocate(instance, exact_options());
        for (std::size_t i = 1; i < result.stats.popped_costs.size(); ++i) {
            CHECK(result.stats.popped_costs[i] >=
                  result.stats.popped_costs[i - 1] - 1e-12);
        }
    }
}

TEST_CASE("allocator matches the brute-force oracle on random instances") {
    Rng rng(7);
    int checked = 0;
    for (int rep = 0; rep < 60; ++rep) {
        testing::RandomInstanceConfig cfg;
        cfg.max_agents = 2;
        cfg.max_tasks = 3;
        cfg.max_horizon = 10;
        const auto instance = testing::random_instance(rng, cfg);
        const auto result = allocate(instance, exact_options());
        const auto oracle = brute_force_optimal(instance);
        const double achieved = evaluate_expected_penalty(instance, result.policy());
        CHECK(achieved == doctest::Approx(oracle.value).epsilon(1e-9));
        CHECK(detect_conflicts(instance, result.allocation).empty());
        ++checked;
    }
    CHECK(checked == 60);
}

TEST_CASE("returned cost is invariant under agent relabeling") {
    Rng rng(31);
    for (int rep = 0; rep < 30; ++rep) {
        const auto instance = testing::random_instance(rng);
        const auto base = allocate(instance, exact_options());
        std::map<AgentId, AgentId> agent_map;
        const auto& agents = instance.agents();
        for (std::size_t i = 0; i < agents.size(); ++i) {
            agent_map[agents[i]] = agents[(i + 1) % agents.size()];
        }
        std::map<TaskId, TaskId> task_map;
        for (const auto& t : instance.tasks()) task_map[t.id] = t.id;
        const auto permuted = testing::relabeled(instance, agent_map, task_map);
        const auto other = allocate(permuted, exact_options());
        CHECK(other.cost == doctest::Approx(base.cost).epsilon(1e-9));
    }
}

TEST_CASE("search trace logs one line per expanded node") {
    const auto instance = contention_instance();
    std::ostringstream trace;
    AllocateOptions options = exact_options();
    options.trace = &trace;
    const auto result = allocate(instance, options);
    (void)result;
    std::istringstream lines(trace.str());
    std::string line;
    int count = 0;
    while (std::getline(lines, line)) {
        CHECK(line.find("cost=") != std::string::npos);
        CHECK(line.find("constraints=") != std::string::npos);
        CHECK(line.find("conflicts=") != std::string::npos);
        ++count;
    }
    CHECK(count == static_cast<int>(result.stats.popped_costs.size()));
}
