#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "scoba/core.hpp"
#include "scoba/instance_io.hpp"
#include "test_util.hpp"

using namespace scoba;

namespace {

// Minimal single-pair instance: one agent (id 0), one task (id 0).
ProblemInstance one_pair(TimeWindow w, CompletionModel model, TimeStep downtime = 0,
                         TimeStep horizon = 20) {
    return ProblemInstance({0}, {TaskSpec{0, 1.0, downtime}}, horizon, {{{0, 0}, w}},
                           {{{0, 0}, std::move(model)}});
}

}  // namespace

TEST_CASE("time window validation") {
    CHECK_THROWS_AS(TimeWindow(2, 2), InputError);
    CHECK_THROWS_AS(TimeWindow(5, 3), InputError);
    const TimeWindow w(2, 7);
    CHECK(w.length() == 5);
    CHECK(w.contains(2));
    CHECK(!w.contains(7));
}

TEST_CASE("attempt_feasible boundaries") {
    auto instance = one_pair(TimeWindow(2, 7), CompletionModel::geometric(0.5));
    CHECK(attempt_feasible(instance, 0, 0, 2));       // lower inclusive
    CHECK_FALSE(attempt_feasible(instance, 0, 0, 7)); // upper exclusive
    CHECK(attempt_feasible(instance, 0, 0, 6));
    CHECK_FALSE(attempt_feasible(instance, 0, 0, 1));
    CHECK_THROWS_AS(attempt_feasible(instance, 9, 0, 3), InputError);
    CHECK_THROWS_AS(attempt_feasible(instance, 0, 9, 3), InputError);
}

TEST_CASE("attempt_feasible missing window pair") {
    // agent 1 exists but has no window for the task
    ProblemInstance instance({0, 1}, {TaskSpec{0}}, 10, {{{0, 0}, TimeWindow(0, 5)}},
                             {{{0, 0}, CompletionModel::geometric(0.5)}});
    CHECK_FALSE(attempt_feasible(instance, 1, 0, 3));
}

TEST_CASE("completion_upper_bound") {
    auto instance = one_pair(TimeWindow(0, 2), CompletionModel::geometric(0.75));
    CHECK(completion_upper_bound(instance, 0, 0) == doctest::Approx(0.9375).epsilon(1e-12));

    auto saturated = one_pair(TimeWindow(0, 5), CompletionModel::table({1.0}));
    CHECK(completion_upper_bound(saturated, 0, 0) == 1.0);

    ProblemInstance two_agents({0, 1}, {TaskSpec{0}}, 10, {{{0, 0}, TimeWindow(0, 5)}},
                               {{{0, 0}, CompletionModel::geometric(0.5)}});
    CHECK_THROWS_AS(completion_upper_bound(two_agents, 1, 0), InputError);
}

TEST_CASE("completion model shapes") {
    const auto models = {
        CompletionModel::geometric(0.6),
        CompletionModel::epanechnikov(9.0, 3.0),
        CompletionModel::table({0.1, 0.4, 0.9, 1.0}),
    };
    for (const auto& m : models) {
        CHECK(m.cdf(0) == 0.0);
        double prev = 0.0;
        for (TimeStep t = 1; t <= 30; ++t) {
            const double v = m.cdf(t);
            CHECK(v >= prev - 1e-12);
            CHECK(v <= 1.0 + 1e-12);
            prev = v;
        }
    }
    CHECK_THROWS_AS(CompletionModel::table({0.5, 0.2}), InputError);
    CHECK_THROWS_AS(CompletionModel::geometric(1.5), InputError);
}

TEST_CASE("detect_conflicts on overlapping and disjoint windows") {
    // n1 and n3 share k1 with overlapping windows
    ProblemInstance instance(
        {1, 3}, {TaskSpec{0}}, 12,
        {{{1, 0}, TimeWindow(0, 6)}, {{3, 0}, TimeWindow(2, 8)}},
        {{{1, 0}, CompletionModel::geometric(0.5)},
         {{3, 0}, CompletionModel::geometric(0.5)}});
    Allocation alloc;
    alloc.assignments[1] = {{0, 2}};
    alloc.assignments[3] = {{0, 3}};
    const auto conflicts = detect_conflicts(instance, alloc);
    REQUIRE(conflicts.size() == 1);
    CHECK(conflicts[0].first_agent == 1);
    CHECK(conflicts[0].second_agent == 3);
    CHECK(conflicts[0].task == 0);

    SUBCASE("distinct tasks never conflict") {
        ProblemInstance two(
            {1, 3}, {TaskSpec{0}, TaskSpec{1}}, 12,
            {{{1, 0}, TimeWindow(0, 6)}, {{3, 1}, TimeWindow(0, 6)}},
            {{{1, 0}, CompletionModel::geometric(0.5)},
             {{3, 1}, CompletionModel::geometric(0.5)}});
        Allocation a;
        a.assignments[1] = {{0, 0}};
        a.assignments[3] = {{1, 0}};
        CHECK(detect_conflicts(two, a).empty());
    }

    SUBCASE("disjoint windows, attempts outside each other's window") {
        ProblemInstance disjoint(
            {1, 3}, {TaskSpec{0}}, 12,
            {{{1, 0}, TimeWindow(0, 4)}, {{3, 0}, TimeWindow(4, 8)}},
            {{{1, 0}, CompletionModel::geometric(0.5)},
             {{3, 0}, CompletionModel::geometric(0.5)}});
        Allocation a;
        a.assignments[1] = {{0, 0}};
        a.assignments[3] = {{0, 4}};
        CHECK(detect_conflicts(disjoint, a).empty());
    }

    SUBCASE("window-violating allocation raises") {
        Allocation bad;
        bad.assignments[1] = {{0, 7}};  // outside [0, 6)
        CHECK_THROWS_AS(detect_conflicts(instance, bad), InputError);
    }
}

TEST_CASE("detect_conflicts symmetric in agent roles") {
    ProblemInstance instance(
        {1, 3}, {TaskSpec{0}}, 12,
        {{{1, 0}, TimeWindow(0, 4)}, {{3, 0}, TimeWindow(2, 8)}},
        {{{1, 0}, CompletionModel::geometric(0.5)},
         {{3, 0}, CompletionModel::geometric(0.5)}});
    // agent 3 attempts inside agent 1's window; agent 1's attempt is outside 3's
    Allocation alloc;
    alloc.assignments[1] = {{0, 0}};
    alloc.assignments[3] = {{0, 2}};
    CHECK(detect_conflicts(instance, alloc).size() == 1);
    // swap roles: now only the "or" branch on the other side fires
    Allocation swapped;
    swapped.assignments[1] = {{0, 3}};
    swapped.assignments[3] = {{0, 6}};
    CHECK(detect_conflicts(instance, swapped).size() == 1);
}

TEST_CASE("evaluate_expected_penalty basics") {
    SUBCASE("single attempt, q = 0.9375") {
        auto instance = one_pair(TimeWindow(0, 2), CompletionModel::geometric(0.75));
        ContingentPolicy policy;
        policy.plans[0] = PlanNode::attempting(0);
        CHECK(evaluate_expected_penalty(instance, policy) ==
              doctest::Approx(0.0625).epsilon(1e-12));
    }
    SUBCASE("empty policy pays every task") {
        ProblemInstance instance(
            {0}, {TaskSpec{0}, TaskSpec{1}, TaskSpec{2}}, 10,
            {{{0, 0}, TimeWindow(0, 5)}},
            {{{0, 0}, CompletionModel::geometric(0.5)}});
        CHECK(evaluate_expected_penalty(instance, ContingentPolicy{}) == 3.0);
    }
    SUBCASE("two disjoint tasks, four-branch enumeration") {
        ProblemInstance instance(
            {0}, {TaskSpec{0}, TaskSpec{1}}, 20,
            {{{0, 0}, TimeWindow(0, 2)}, {{0, 1}, TimeWindow(5, 7)}},
            {{{0, 0}, CompletionModel::table({0.0, 0.75})},
             {{0, 1}, CompletionModel::table({0.0, 0.5})}});
        ContingentPolicy policy;
        policy.plans[0] =
            PlanNode::attempting(0, PlanNode::attempting(1), PlanNode::attempting(1));
        CHECK(evaluate_expected_penalty(instance, policy) ==
              doctest::Approx(0.75).epsilon(1e-12));
    }
    SUBCASE("attempt outside the window raises") {
        auto instance = one_pair(TimeWindow(0, 2), CompletionModel::geometric(0.75), 0, 20);
        ContingentPolicy policy;
        // second attempt of the same task after its window closed
        policy.plans[0] = PlanNode::attempting(0, nullptr, PlanNode::attempting(0));
        CHECK_THROWS_AS(evaluate_expected_penalty(instance, policy), InputError);
    }
}

TEST_CASE("brute force oracle on pinned instances") {
    SUBCASE("one agent, one task, q = 0.9") {
        auto instance = one_pair(TimeWindow(0, 1), CompletionModel::geometric(0.9));
        const auto result = brute_force_optimal(instance);
        CHECK(result.value == doctest::Approx(0.1).epsilon(1e-12));
        CHECK(result.assignment.at(0) == 0);
        CHECK(evaluate_expected_penalty(instance, result.policy) ==
              doctest::Approx(result.value).epsilon(1e-12));
    }
    SUBCASE("no tasks") {
        ProblemInstance instance({0}, {}, 5, {}, {});
        CHECK(brute_force_optimal(instance).value == 0.0);
    }
    SUBCASE("two agents, one shared task, better agent wins") {
        ProblemInstance instance(
            {1, 2}, {TaskSpec{0}}, 10,
            {{{1, 0}, TimeWindow(0, 1)}, {{2, 0}, TimeWindow(0, 1)}},
            {{{1, 0}, CompletionModel::geometric(0.9)},
             {{2, 0}, CompletionModel::geometric(0.5)}});
        const auto result = brute_force_optimal(instance);
        CHECK(result.value == doctest::Approx(0.1).epsilon(1e-12));
        CHECK(result.assignment.at(0) == 1);
    }
    SUBCASE("budget overrun raises") {
        Rng rng(7);
        auto instance = testing::random_instance(rng);
        BruteForceOptions options;
        options.branch_budget = 3;
        CHECK_THROWS_AS(brute_force_optimal(instance, options), ResourceError);
    }
}

TEST_CASE("oracle value is a lower bound and invariant to relabeling") {
    Rng rng(42);
    for (int rep = 0; rep < 60; ++rep) {
        const auto instance = testing::random_instance(rng);
        const auto result = brute_force_optimal(instance);

        // The oracle's own policy evaluates exactly to its value.
        const double value = evaluate_expected_penalty(instance, result.policy);
        CHECK(value == doctest::Approx(result.value).epsilon(1e-9));

        // Unit penalties: 0 <= expected penalty <= K.
        CHECK(result.value >= -1e-12);
        CHECK(result.value <= instance.total_penalty() + 1e-12);

        // Any other policy is no better: compare against single-agent greedy
        // variants derived by dropping one plan.
        auto degraded = result.policy.clone();
        if (!degraded.plans.empty()) {
            degraded.plans.erase(degraded.plans.begin());
            CHECK(evaluate_expected_penalty(instance, degraded) >= result.value - 1e-9);
        }

        // Relabeling invariance.
        std::map<AgentId, AgentId> agent_map;
        for (AgentId a : instance.agents()) agent_map[a] = a + 17;
        std::map<TaskId, TaskId> task_map;
        for (const auto& t : instance.tasks()) task_map[t.id] = t.id * 3 + 5;
        const auto permuted = testing::relabeled(instance, agent_map, task_map);
        CHECK(brute_force_optimal(permuted).value ==
              doctest::Approx(result.value).epsilon(1e-9));
    }
}

TEST_CASE("flatten_policy lists earliest attempts in time order") {
    ProblemInstance instance(
        {0}, {TaskSpec{0, 1.0, 1}, TaskSpec{1}}, 20,
        {{{0, 0}, TimeWindow(0, 3)}, {{0, 1}, TimeWindow(3, 9)}},
        {{{0, 0}, CompletionModel::geometric(0.5)},
         {{0, 1}, CompletionModel::geometric(0.5)}});
    ContingentPolicy policy;
    policy.plans[0] =
        PlanNode::attempting(0, PlanNode::attempting(1), PlanNode::attempting(1));
    const auto alloc = flatten_policy(instance, policy);
    REQUIRE(alloc.assignments.at(0).size() == 2);
    CHECK(alloc.assignments.at(0)[0] == std::pair<TaskId, TimeStep>{0, 0});
    // fail branch starts at 3, success branch at 4; earliest kept
    CHECK(alloc.assignments.at(0)[1] == std::pair<TaskId, TimeStep>{1, 3});
}

TEST_CASE("instance file round trip") {
    Rng rng(11);
    for (int rep = 0; rep < 10; ++rep) {
        const auto instance = testing::random_instance(rng);
        std::stringstream buffer;
        write_instance(buffer, instance);
        const auto parsed = read_instance(buffer);

        CHECK(parsed.agents() == instance.agents());
        CHECK(parsed.horizon() == instance.horizon());
        REQUIRE(parsed.tasks().size() == instance.tasks().size());
        CHECK(parsed.windows() == instance.windows());
        for (const auto& [key, model] : instance.completion_models()) {
            CHECK(parsed.completion_models().at(key) == model);
        }
    }
}

TEST_CASE("instance file errors") {
    std::stringstream missing("horizon 5\nagent 0\ntask 0\nwindow 0 0 1 3\n");
    CHECK_THROWS_AS(read_instance(missing), InputError);  // no completion model
    std::stringstream garbage("horizon 5\nfrobnicate 1\n");
    CHECK_THROWS_AS(read_instance(garbage), InputError);
}

TEST_CASE("instance validation") {
    CHECK_THROWS_AS(ProblemInstance({0}, {TaskSpec{0}}, 0, {}, {}), InputError);
    CHECK_THROWS_AS(ProblemInstance({0, 0}, {}, 5, {}, {}), InputError);
    CHECK_THROWS_AS(
        ProblemInstance({0}, {TaskSpec{0}}, 5, {{{0, 0}, TimeWindow(0, 9)}},
                        {{{0, 0}, CompletionModel::geometric(0.5)}}),
        InputError);  // window past horizon
    CHECK_THROWS_AS(
        ProblemInstance({0}, {TaskSpec{0}}, 5, {{{0, 0}, TimeWindow(0, 3)}}, {}),
        InputError);  // missing completion model
}
