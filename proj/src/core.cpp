#include "scoba/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <tuple>

namespace scoba {

TimeWindow::TimeWindow(TimeStep lo, TimeStep up) : lower(lo), upper(up) {
    if (lo >= up) {
        std::ostringstream ss;
        ss << "time window must satisfy lower < upper, got [" << lo << ", " << up << ")";
        throw InputError(ss.str());
    }
}

double cdf_geometric(double p, TimeStep t) {
    if (t <= 0) return 0.0;
    return 1.0 - std::pow(1.0 - p, static_cast<double>(t));
}

double cdf_epanechnikov(double mu, double r, double t) {
    if (r <= 0.0) throw InputError("epanechnikov half-width must be positive");
    const double u = (t - mu) / r;
    if (u <= -1.0) return 0.0;
    if (u >= 1.0) return 1.0;
    return 0.75 * (u - u * u * u / 3.0) + 0.5;
}

CompletionModel CompletionModel::geometric(double p) {
    if (p < 0.0 || p > 1.0) throw InputError("geometric parameter must be in [0,1]");
    CompletionModel m;
    m.kind_ = Kind::Geometric;
    m.params_ = {p};
    return m;
}

CompletionModel CompletionModel::epanechnikov(double mu, double r) {
    if (r <= 0.0) throw InputError("epanechnikov half-width must be positive");
    if (mu < r) throw InputError("epanechnikov support must not extend below zero");
    CompletionModel m;
    m.kind_ = Kind::Epanechnikov;
    m.params_ = {mu, r};
    return m;
}

CompletionModel CompletionModel::table(std::vector<double> values) {
    double prev = 0.0;
    for (double v : values) {
        if (v < prev - 1e-12 || v > 1.0 + 1e-12) {
            throw InputError("table CDF must be non-decreasing within [0,1]");
        }
        prev = v;
    }
    CompletionModel m;
    m.kind_ = Kind::Table;
    m.params_ = std::move(values);
    return m;
}

double CompletionModel::cdf(TimeStep t) const {
    if (t <= 0) return 0.0;
    switch (kind_) {
        case Kind::Geometric:
            return cdf_geometric(params_[0], t);
        case Kind::Epanechnikov:
            return cdf_epanechnikov(params_[0], params_[1], static_cast<double>(t));
        case Kind::Table: {
            if (params_.empty()) return 0.0;
            const std::size_t i = static_cast<std::size_t>(t) - 1;
            return i < params_.size() ? params_[i] : params_.back();
        }
    }
    return 0.0;
}

std::string CompletionModel::name() const {
    switch (kind_) {
        case Kind::Geometric: return "geometric";
        case Kind::Epanechnikov: return "epanechnikov";
        case Kind::Table: return "table";
    }
    return "?";
}

ProblemInstance::ProblemInstance(
    std::vector<AgentId> agents, std::vector<TaskSpec> tasks, TimeStep horizon,
    std::map<std::pair<AgentId, TaskId>, TimeWindow> windows,
    std::map<std::pair<AgentId, TaskId>, CompletionModel> completion)
    : agents_(std::move(agents)),
      tasks_(std::move(tasks)),
      horizon_(horizon),
      windows_(std::move(windows)),
      completion_(std::move(completion)) {
    if (horizon_ < 1) throw InputError("horizon must be >= 1");
    std::set<AgentId> agent_set(agents_.begin(), agents_.end());
    if (agent_set.size() != agents_.size()) throw InputError("duplicate agent id");
    for (std::size_t i = 0; i < tasks_.size(); ++i) {
        const TaskSpec& t = tasks_[i];
        if (t.penalty < 0.0) throw InputError("task penalty must be nonnegative");
        if (t.downtime < 0) throw InputError("task downtime must be nonnegative");
        if (!task_index_.emplace(t.id, i).second) throw InputError("duplicate task id");
    }
    for (const auto& [key, w] : windows_) {
        const auto& [agent, task] = key;
        if (!agent_set.count(agent)) throw InputError("window references unknown agent");
        if (!task_index_.count(task)) throw InputError("window references unknown task");
        if (w.lower < 0 || w.lower >= w.upper || w.upper > horizon_) {
            std::ostringstream ss;
            ss << "window [" << w.lower << ", " << w.upper << ") for agent " << agent
               << ", task " << task << " must satisfy 0 <= lower < upper <= horizon";
            throw InputError(ss.str());
        }
        auto it = completion_.find(key);
        if (it == completion_.end()) {
            throw InputError("every window needs a completion model");
        }
        if (it->second.cdf(0) != 0.0) throw InputError("completion cdf(0) must be 0");
    }
    for (const auto& [key, model] : completion_) {
        (void)model;
        if (!windows_.count(key)) {
            throw InputError("completion model without a matching window");
        }
    }
    for (AgentId a : agents_) feasible_[a] = {};
    for (const auto& [key, w] : windows_) {
        const auto& [agent, task] = key;
        const TaskSpec& spec = tasks_[task_index_.at(task)];
        feasible_[agent].push_back(
            FeasibleTask{task, w, spec.downtime, spec.penalty, &completion_.at(key)});
    }
    for (auto& [agent, list] : feasible_) {
        (void)agent;
        std::sort(list.begin(), list.end(), [](const FeasibleTask& x, const FeasibleTask& y) {
            if (x.window.lower != y.window.lower) return x.window.lower < y.window.lower;
            if (x.window.upper != y.window.upper) return x.window.upper < y.window.upper;
            return x.task < y.task;
        });
    }
}

bool ProblemInstance::has_agent(AgentId a) const {
    return feasible_.count(a) != 0;
}

bool ProblemInstance::has_task(TaskId k) const {
    return task_index_.count(k) != 0;
}

const TaskSpec& ProblemInstance::task(TaskId k) const {
    auto it = task_index_.find(k);
    if (it == task_index_.end()) throw InputError("unknown task id");
    return tasks_[it->second];
}

const TimeWindow* ProblemInstance::window(AgentId a, TaskId k) const {
    auto it = windows_.find({a, k});
    return it == windows_.end() ? nullptr : &it->second;
}

const CompletionModel* ProblemInstance::completion(AgentId a, TaskId k) const {
    auto it = completion_.find({a, k});
    return it == completion_.end() ? nullptr : &it->second;
}

const std::vector<ProblemInstance::FeasibleTask>& ProblemInstance::feasible(
    AgentId agent) const {
    auto it = feasible_.find(agent);
    if (it == feasible_.end()) throw InputError("unknown agent id");
    return it->second;
}

double ProblemInstance::total_penalty() const {
    double sum = 0.0;
    for (const TaskSpec& t : tasks_) sum += t.penalty;
    return sum;
}

bool Allocation::empty() const {
    for (const auto& [agent, list] : assignments) {
        (void)agent;
        if (!list.empty()) return false;
    }
    return true;
}

bool attempt_feasible(const ProblemInstance& instance, AgentId agent, TaskId task,
                      TimeStep t) {
    if (!instance.has_agent(agent)) throw InputError("unknown agent id");
    if (!instance.has_task(task)) throw InputError("unknown task id");
    const TimeWindow* w = instance.window(agent, task);
    return w != nullptr && w->contains(t);
}

double completion_upper_bound(const ProblemInstance& instance, AgentId agent,
                              TaskId task) {
    if (!instance.has_agent(agent)) throw InputError("unknown agent id");
    if (!instance.has_task(task)) throw InputError("unknown task id");
    const TimeWindow* w = instance.window(agent, task);
    if (w == nullptr) throw InputError("agent-task pair has no window");
    return instance.completion(agent, task)->cdf(w->length());
}

std::vector<Conflict> detect_conflicts(const ProblemInstance& instance,
                                       const Allocation& alloc) {
    for (const auto& [agent, list] : alloc.assignments) {
        for (const auto& [task, t] : list) {
            if (!attempt_feasible(instance, agent, task, t)) {
                std::ostringstream ss;
                ss << "allocation entry (agent " << agent << ", task " << task
                   << ", t=" << t << ") violates the window constraint";
                throw InputError(ss.str());
            }
        }
    }
    std::vector<Conflict> out;
    std::set<std::tuple<AgentId, AgentId, TaskId>> seen;
    for (auto it1 = alloc.assignments.begin(); it1 != alloc.assignments.end(); ++it1) {
        for (auto it2 = std::next(it1); it2 != alloc.assignments.end(); ++it2) {
            const AgentId a1 = it1->first;
            const AgentId a2 = it2->first;
            for (const auto& [k1, t1] : it1->second) {
                for (const auto& [k2, t2] : it2->second) {
                    if (k1 != k2) continue;
                    if (seen.count({a1, a2, k1})) continue;
                    const TimeWindow* w1 = instance.window(a1, k1);
                    const TimeWindow* w2 = instance.window(a2, k1);
                    if (w1->contains(t2) || w2->contains(t1)) {
                        out.push_back(Conflict{a1, a2, k1, t1, t2});
                        seen.insert({a1, a2, k1});
                    }
                }
            }
        }
    }
    return out;
}

std::unique_ptr<PlanNode> PlanNode::pass(TaskId k, std::unique_ptr<PlanNode> next) {
    auto n = std::make_unique<PlanNode>();
    n->task = k;
    n->attempt = false;
    n->next = std::move(next);
    return n;
}

std::unique_ptr<PlanNode> PlanNode::attempting(TaskId k,
                                               std::unique_ptr<PlanNode> on_success,
                                               std::unique_ptr<PlanNode> on_fail) {
    auto n = std::make_unique<PlanNode>();
    n->task = k;
    n->attempt = true;
    n->on_success = std::move(on_success);
    n->on_fail = std::move(on_fail);
    return n;
}

std::unique_ptr<PlanNode> PlanNode::clone() const {
    auto n = std::make_unique<PlanNode>();
    n->task = task;
    n->attempt = attempt;
    if (on_success) n->on_success = on_success->clone();
    if (on_fail) n->on_fail = on_fail->clone();
    if (next) n->next = next->clone();
    return n;
}

ContingentPolicy ContingentPolicy::clone() const {
    ContingentPolicy out;
    for (const auto& [agent, plan] : plans) {
        out.plans[agent] = plan ? plan->clone() : nullptr;
    }
    return out;
}

namespace {

// Walks one agent's plan, accumulating P[agent completes k] per task.
void walk_plan(const ProblemInstance& instance, AgentId agent, const PlanNode* node,
               TimeStep busy, double prob, std::map<TaskId, double>& completed) {
    if (node == nullptr || prob <= 0.0) return;
    if (!instance.has_task(node->task)) throw InputError("plan references unknown task");
    if (!node->attempt) {
        walk_plan(instance, agent, node->next.get(), busy, prob, completed);
        return;
    }
    const TimeWindow* w = instance.window(agent, node->task);
    if (w == nullptr) throw InputError("plan attempts a task with no window for the agent");
    const TimeStep start = std::max(w->lower, busy);
    if (start >= w->upper) {
        std::ostringstream ss;
        ss << "plan attempts task " << node->task << " at step " << start
           << ", outside window [" << w->lower << ", " << w->upper << ")";
        throw InputError(ss.str());
    }
    const double q = instance.completion(agent, node->task)->cdf(w->upper - start);
    completed[node->task] += prob * q;
    const TimeStep downtime = instance.task(node->task).downtime;
    walk_plan(instance, agent, node->on_fail.get(), w->upper, prob * (1.0 - q), completed);
    walk_plan(instance, agent, node->on_success.get(), w->upper + downtime, prob * q,
              completed);
}

void collect_attempts(const ProblemInstance& instance, AgentId agent, const PlanNode* node,
                      TimeStep busy, std::map<TaskId, TimeStep>& earliest) {
    if (node == nullptr) return;
    if (!node->attempt) {
        collect_attempts(instance, agent, node->next.get(), busy, earliest);
        return;
    }
    const TimeWindow* w = instance.window(agent, node->task);
    if (w == nullptr) throw InputError("plan attempts a task with no window for the agent");
    const TimeStep start = std::max(w->lower, busy);
    auto it = earliest.find(node->task);
    if (it == earliest.end() || start < it->second) earliest[node->task] = start;
    const TimeStep downtime = instance.task(node->task).downtime;
    collect_attempts(instance, agent, node->on_fail.get(), w->upper, earliest);
    collect_attempts(instance, agent, node->on_success.get(), w->upper + downtime, earliest);
}

}  // namespace

double evaluate_expected_penalty(const ProblemInstance& instance,
                                 const ContingentPolicy& policy) {
    // P[k completed by someone] combines per-agent completion probabilities;
    // execution processes of distinct agents are independent.
    std::map<TaskId, double> miss;
    for (const TaskSpec& t : instance.tasks()) miss[t.id] = 1.0;
    for (const auto& [agent, plan] : policy.plans) {
        if (!instance.has_agent(agent)) throw InputError("plan references unknown agent");
        std::map<TaskId, double> completed;
        walk_plan(instance, agent, plan.get(), 0, 1.0, completed);
        for (const auto& [task, p] : completed) miss[task] *= (1.0 - p);
    }
    double total = 0.0;
    for (const TaskSpec& t : instance.tasks()) total += t.penalty * miss[t.id];
    return total;
}

Allocation flatten_policy(const ProblemInstance& instance, const ContingentPolicy& policy) {
    Allocation out;
    for (const auto& [agent, plan] : policy.plans) {
        std::map<TaskId, TimeStep> earliest;
        collect_attempts(instance, agent, plan.get(), 0, earliest);
        std::vector<std::pair<TaskId, TimeStep>> list(earliest.begin(), earliest.end());
        std::sort(list.begin(), list.end(), [](const auto& x, const auto& y) {
            if (x.second != y.second) return x.second < y.second;
            return x.first < y.first;
        });
        for (auto& [task, t] : list) out.assignments[agent].push_back({task, t});
    }
    return out;
}

namespace {

struct OracleCounter {
    std::uint64_t visits = 0;
    std::uint64_t budget = 0;
    void tick() {
        if (++visits > budget) {
            throw ResourceError("brute-force enumeration exceeded its branch budget");
        }
    }
};

// Minimal expected penalty over tasks[i..] when the agent frees up at `busy`.
// Decisions follow window order: each task is attempted at its earliest
// feasible step or passed for good.
double oracle_agent_value(const std::vector<ProblemInstance::FeasibleTask>& tasks,
                          std::size_t i, TimeStep busy, OracleCounter& counter) {
    counter.tick();
    if (i == tasks.size()) return 0.0;
    const auto& ft = tasks[i];
    const double leave = ft.penalty + oracle_agent_value(tasks, i + 1, busy, counter);
    const TimeStep start = std::max(ft.window.lower, busy);
    if (start >= ft.window.upper) return leave;
    const double q = ft.model->cdf(ft.window.upper - start);
    const double attempt =
        (1.0 - q) * (ft.penalty + oracle_agent_value(tasks, i + 1, ft.window.upper, counter)) +
        q * oracle_agent_value(tasks, i + 1, ft.window.upper + ft.downtime, counter);
    return std::min(attempt, leave);
}

// Same recursion, additionally materializing the minimizing plan.
std::pair<double, std::unique_ptr<PlanNode>> oracle_agent_plan(
    const std::vector<ProblemInstance::FeasibleTask>& tasks, std::size_t i, TimeStep busy) {
    if (i == tasks.size()) return {0.0, nullptr};
    const auto& ft = tasks[i];
    auto [leave_value, leave_next] = oracle_agent_plan(tasks, i + 1, busy);
    leave_value += ft.penalty;
    const TimeStep start = std::max(ft.window.lower, busy);
    if (start < ft.window.upper) {
        const double q = ft.model->cdf(ft.window.upper - start);
        auto [fail_value, fail_plan] = oracle_agent_plan(tasks, i + 1, ft.window.upper);
        auto [succ_value, succ_plan] =
            oracle_agent_plan(tasks, i + 1, ft.window.upper + ft.downtime);
        const double attempt_value =
            (1.0 - q) * (ft.penalty + fail_value) + q * succ_value;
        if (attempt_value <= leave_value) {  // ties prefer attempting
            return {attempt_value,
                    PlanNode::attempting(ft.task, std::move(succ_plan), std::move(fail_plan))};
        }
    }
    return {leave_value, PlanNode::pass(ft.task, std::move(leave_next))};
}

}  // namespace

BruteForceResult brute_force_optimal(const ProblemInstance& instance,
                                     const BruteForceOptions& options) {
    OracleCounter counter;
    counter.budget = options.branch_budget;

    const auto& agents = instance.agents();
    const auto& tasks = instance.tasks();

    // Eligible agents per task (those with a window for it); `none` encoded
    // as agents.size().
    std::vector<std::vector<std::size_t>> choices(tasks.size());
    for (std::size_t k = 0; k < tasks.size(); ++k) {
        for (std::size_t a = 0; a < agents.size(); ++a) {
            if (instance.window(agents[a], tasks[k].id) != nullptr) choices[k].push_back(a);
        }
        choices[k].push_back(agents.size());  // unassigned
    }

    double best_value = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> assignment(tasks.size(), agents.size());
    std::vector<std::size_t> best_assignment = assignment;

    // Per-agent assigned sets rebuilt from the assignment vector; kept in
    // window order as required by the earliest-attempt semantics.
    auto agent_tasks = [&](std::size_t a,
                           const std::vector<std::size_t>& asg) {
        std::vector<ProblemInstance::FeasibleTask> own;
        for (const auto& ft : instance.feasible(agents[a])) {
            const std::size_t k = static_cast<std::size_t>(
                std::find_if(tasks.begin(), tasks.end(),
                             [&](const TaskSpec& t) { return t.id == ft.task; }) -
                tasks.begin());
            if (asg[k] == a) own.push_back(ft);
        }
        return own;
    };

    auto evaluate_assignment = [&](const std::vector<std::size_t>& asg) {
        double total = 0.0;
        for (std::size_t k = 0; k < tasks.size(); ++k) {
            if (asg[k] == agents.size()) total += tasks[k].penalty;
        }
        for (std::size_t a = 0; a < agents.size(); ++a) {
            auto own = agent_tasks(a, asg);
            if (!own.empty()) total += oracle_agent_value(own, 0, 0, counter);
        }
        return total;
    };

    // Depth-first over all task -> agent assignments.
    std::vector<std::size_t> cursor(tasks.size(), 0);
    std::size_t depth = 0;
    if (tasks.empty()) {
        best_value = 0.0;
    } else {
        while (true) {
            if (depth == tasks.size()) {
                const double v = evaluate_assignment(assignment);
                if (v < best_value - 1e-15) {
                    best_value = v;
                    best_assignment = assignment;
                }
                --depth;
                ++cursor[depth];
            } else if (cursor[depth] < choices[depth].size()) {
                assignment[depth] = choices[depth][cursor[depth]];
                ++depth;
                if (depth < tasks.size()) cursor[depth] = 0;
            } else {
                if (depth == 0) break;
                --depth;
                ++cursor[depth];
            }
        }
    }

    BruteForceResult result;
    result.value = best_value == std::numeric_limits<double>::infinity() ? 0.0 : best_value;
    for (std::size_t a = 0; a < agents.size(); ++a) {
        auto own = agent_tasks(a, best_assignment);
        if (own.empty()) continue;
        auto [value, plan] = oracle_agent_plan(own, 0, 0);
        (void)value;
        if (plan) result.policy.plans[agents[a]] = std::move(plan);
    }
    for (std::size_t k = 0; k < tasks.size(); ++k) {
        if (best_assignment[k] != agents.size()) {
            result.assignment[tasks[k].id] = agents[best_assignment[k]];
        }
    }
    return result;
}

}  // namespace scoba
