#include "scoba/policy_tree.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <sstream>

namespace scoba {

namespace {

std::vector<ProblemInstance::FeasibleTask> gather_tasks(
    AgentId agent, const std::vector<TaskId>& tasks, const ProblemInstance& instance) {
    if (!instance.has_agent(agent)) throw InputError("unknown agent id");
    std::vector<ProblemInstance::FeasibleTask> out;
    out.reserve(tasks.size());
    for (TaskId k : tasks) {
        const TimeWindow* w = instance.window(agent, k);
        if (w == nullptr) {
            std::ostringstream ss;
            ss << "task " << k << " has no window for agent " << agent;
            throw InputError(ss.str());
        }
        out.push_back(ProblemInstance::FeasibleTask{
            k, *w, instance.task(k).downtime, instance.task(k).penalty,
            instance.completion(agent, k)});
    }
    return out;
}

void sort_by_window_start(std::vector<ProblemInstance::FeasibleTask>& tasks) {
    // Window-start order; equal starts resolve by deadline so that the
    // attempt-first tie-break lines up with earliest-due-date execution.
    std::sort(tasks.begin(), tasks.end(), [](const auto& x, const auto& y) {
        if (x.window.lower != y.window.lower) return x.window.lower < y.window.lower;
        if (x.window.upper != y.window.upper) return x.window.upper < y.window.upper;
        return x.task < y.task;
    });
}

std::size_t truncation_index(const std::vector<ProblemInstance::FeasibleTask>& tasks) {
    TimeStep resolved = 0;
    for (std::size_t j = 0; j < tasks.size(); ++j) {
        if (j > 0 && tasks[j].window.lower >= resolved) return j;
        resolved = std::max(resolved, tasks[j].window.upper + tasks[j].downtime);
    }
    return tasks.size();
}

// Builds the node arena. Continuations are memoized on (task index, busy
// clamped to the task's window start): any two branches that agree on that
// key behave identically from there on and share the same nodes.
class TreeBuilder {
  public:
    TreeBuilder(const std::vector<ProblemInstance::FeasibleTask>& tasks,
                std::vector<PolicyTreeNode>& nodes)
        : tasks_(tasks), nodes_(nodes) {}

    std::pair<std::int32_t, std::int32_t> continuation(std::size_t i, TimeStep busy) {
        if (i == tasks_.size()) return {-1, -1};
        const auto& ft = tasks_[i];
        const TimeStep start = std::max(busy, ft.window.lower);
        const auto key = std::make_pair(i, start);
        if (auto it = memo_.find(key); it != memo_.end()) return it->second;

        std::pair<std::int32_t, std::int32_t> result;
        if (start >= ft.window.upper) {
            // Window already spent on this branch: only the leave continuation.
            const std::int32_t leave = new_node(NodeKind::Leave, ft.task, ft.penalty);
            assign_children(leave, continuation(i + 1, start));
            result = {leave, -1};
        } else {
            const double q = ft.model->cdf(ft.window.upper - start);
            const std::int32_t attempt = new_node(NodeKind::Attempt, ft.task, 0.0);
            nodes_[attempt].attempt_time = start;
            const std::int32_t fail = new_node(NodeKind::Fail, ft.task, ft.penalty);
            nodes_[fail].outcome_prob = 1.0 - q;
            const std::int32_t succ = new_node(NodeKind::Success, ft.task, 0.0);
            nodes_[succ].outcome_prob = q;
            assign_children(fail, continuation(i + 1, ft.window.upper));
            assign_children(succ, continuation(i + 1, ft.window.upper + ft.downtime));
            nodes_[attempt].child_a = fail;
            nodes_[attempt].child_b = succ;
            const std::int32_t leave = new_node(NodeKind::Leave, ft.task, ft.penalty);
            assign_children(leave, continuation(i + 1, start));
            result = {attempt, leave};
        }
        memo_.emplace(key, result);
        return result;
    }

  private:
    std::int32_t new_node(NodeKind kind, TaskId task, double penalty) {
        PolicyTreeNode n;
        n.kind = kind;
        n.task = task;
        n.penalty = penalty;
        nodes_.push_back(n);
        return static_cast<std::int32_t>(nodes_.size() - 1);
    }

    void assign_children(std::int32_t idx, std::pair<std::int32_t, std::int32_t> ch) {
        nodes_[idx].child_a = ch.first;
        nodes_[idx].child_b = ch.second;
    }

    const std::vector<ProblemInstance::FeasibleTask>& tasks_;
    std::vector<PolicyTreeNode>& nodes_;
    std::map<std::pair<std::size_t, TimeStep>, std::pair<std::int32_t, std::int32_t>> memo_;
};

const char* kind_name(NodeKind k) {
    switch (k) {
        case NodeKind::Root: return "root";
        case NodeKind::Attempt: return "attempt";
        case NodeKind::Leave: return "leave";
        case NodeKind::Fail: return "fail";
        case NodeKind::Success: return "success";
    }
    return "?";
}

}  // namespace

std::vector<EventPoint> event_sweep(AgentId agent, const std::vector<TaskId>& tasks,
                                    const ProblemInstance& instance) {
    auto feas = gather_tasks(agent, tasks, instance);
    std::vector<EventPoint> events;
    events.reserve(feas.size() * 3);
    for (const auto& ft : feas) {
        events.push_back({ft.window.lower, EventKind::WindowStart, ft.task});
        events.push_back({ft.window.upper, EventKind::WindowEnd, ft.task});
        events.push_back({ft.window.upper + ft.downtime, EventKind::DowntimeEnd, ft.task});
    }
    std::sort(events.begin(), events.end(), [](const EventPoint& x, const EventPoint& y) {
        if (x.time != y.time) return x.time < y.time;
        if (x.kind != y.kind) return static_cast<int>(x.kind) < static_cast<int>(y.kind);
        return x.task < y.task;
    });
    return events;
}

std::size_t truncation_point(AgentId agent, const std::vector<TaskId>& tasks,
                             const ProblemInstance& instance) {
    auto feas = gather_tasks(agent, tasks, instance);
    return truncation_index(feas);
}

PolicyTree plan_tree(AgentId agent, const std::vector<TaskId>& tasks, TimeStep horizon,
                     const ProblemInstance& instance, bool truncate) {
    auto feas = gather_tasks(agent, tasks, instance);
    std::erase_if(feas, [horizon](const auto& ft) { return ft.window.lower >= horizon; });
    sort_by_window_start(feas);
    if (truncate) feas.resize(truncation_index(feas));

    PolicyTree tree;
    tree.agent_ = agent;
    for (const auto& ft : feas) tree.considered_.push_back(ft.task);

    PolicyTreeNode root;
    root.kind = NodeKind::Root;
    tree.nodes_.push_back(root);
    tree.root_ = 0;

    TreeBuilder builder(feas, tree.nodes_);
    const auto children = builder.continuation(0, 0);
    tree.nodes_[0].child_a = children.first;
    tree.nodes_[0].child_b = children.second;

    propagate_values(tree);
    return tree;
}

double PolicyTree::value() const {
    if (!propagated_) throw StructureError("tree values have not been propagated");
    return nodes_[root_].value;
}

namespace {

double propagate_node(std::vector<PolicyTreeNode>& nodes, std::int32_t idx,
                      std::vector<char>& done) {
    PolicyTreeNode& n = nodes[idx];
    if (done[idx]) return n.value;
    done[idx] = 1;

    const std::int32_t a = n.child_a;
    const std::int32_t b = n.child_b;
    double below = 0.0;
    if (a == -1 && b == -1) {
        below = 0.0;
    } else if (b == -1) {
        if (nodes[a].kind != NodeKind::Leave) {
            throw StructureError("lone child must be a forced leave");
        }
        below = propagate_node(nodes, a, done);
    } else {
        const NodeKind ka = nodes[a].kind;
        const NodeKind kb = nodes[b].kind;
        if (ka == NodeKind::Attempt && kb == NodeKind::Leave) {
            below = std::min(propagate_node(nodes, a, done), propagate_node(nodes, b, done));
        } else if (ka == NodeKind::Fail && kb == NodeKind::Success) {
            below = nodes[a].outcome_prob * propagate_node(nodes, a, done) +
                    nodes[b].outcome_prob * propagate_node(nodes, b, done);
        } else {
            throw StructureError("malformed sibling pair");
        }
    }
    n.value = n.penalty + below;
    return n.value;
}

}  // namespace

double propagate_values(PolicyTree& tree) {
    if (tree.root_ < 0) throw StructureError("empty tree");
    std::vector<char> done(tree.nodes_.size(), 0);
    const double v = propagate_node(tree.nodes_, tree.root_, done);
    tree.propagated_ = true;
    return v;
}

std::optional<std::pair<TaskId, TimeStep>> extract_assignment(const PolicyTree& tree) {
    if (!tree.values_propagated()) throw StructureError("propagate values first");
    const auto& nodes = tree.nodes();
    std::int32_t idx = tree.root();
    while (idx != -1) {
        const auto& n = nodes[idx];
        if (n.child_a == -1) return std::nullopt;
        if (n.child_b == -1) {
            idx = n.child_a;  // forced leave
            continue;
        }
        // decision pair {attempt, leave}; ties prefer attempting
        const auto& attempt = nodes[n.child_a];
        const auto& leave = nodes[n.child_b];
        if (attempt.value <= leave.value) {
            return std::make_pair(attempt.task, attempt.attempt_time);
        }
        idx = n.child_b;
    }
    return std::nullopt;
}

namespace {

std::unique_ptr<PlanNode> convert_policy(const std::vector<PolicyTreeNode>& nodes,
                                         std::int32_t a, std::int32_t b) {
    if (a == -1) return nullptr;
    const auto& first = nodes[a];
    if (b == -1) {  // forced leave
        return PlanNode::pass(first.task, convert_policy(nodes, first.child_a, first.child_b));
    }
    const auto& leave = nodes[b];
    if (first.value <= leave.value) {
        const auto& fail = nodes[first.child_a];
        const auto& succ = nodes[first.child_b];
        return PlanNode::attempting(
            first.task, convert_policy(nodes, succ.child_a, succ.child_b),
            convert_policy(nodes, fail.child_a, fail.child_b));
    }
    return PlanNode::pass(leave.task, convert_policy(nodes, leave.child_a, leave.child_b));
}

}  // namespace

std::unique_ptr<PlanNode> extract_policy(const PolicyTree& tree) {
    if (!tree.values_propagated()) throw StructureError("propagate values first");
    const auto& root = tree.nodes()[tree.root()];
    return convert_policy(tree.nodes(), root.child_a, root.child_b);
}

std::vector<std::pair<TaskId, TimeStep>> planned_attempts(const PolicyTree& tree) {
    if (!tree.values_propagated()) throw StructureError("propagate values first");
    const auto& nodes = tree.nodes();
    std::map<TaskId, TimeStep> earliest;
    std::vector<char> visited(nodes.size(), 0);
    // Iterative DAG walk over branches reachable under optimal decisions.
    std::vector<std::pair<std::int32_t, std::int32_t>> stack;
    stack.push_back({nodes[tree.root()].child_a, nodes[tree.root()].child_b});
    auto push_children = [&](std::int32_t idx) {
        if (idx == -1 || visited[idx]) return;
        visited[idx] = 1;
        stack.push_back({nodes[idx].child_a, nodes[idx].child_b});
    };
    while (!stack.empty()) {
        auto [a, b] = stack.back();
        stack.pop_back();
        if (a == -1) continue;
        if (b == -1) {
            push_children(a);  // forced leave
            continue;
        }
        const auto& attempt = nodes[a];
        const auto& leave = nodes[b];
        if (attempt.value <= leave.value) {
            auto it = earliest.find(attempt.task);
            if (it == earliest.end() || attempt.attempt_time < it->second) {
                earliest[attempt.task] = attempt.attempt_time;
            }
            // Zero-probability outcomes are never visited at execution time,
            // so they claim nothing.
            if (nodes[attempt.child_a].outcome_prob > 0.0) push_children(attempt.child_a);
            if (nodes[attempt.child_b].outcome_prob > 0.0) push_children(attempt.child_b);
        } else {
            push_children(b);
        }
    }
    std::vector<std::pair<TaskId, TimeStep>> out(earliest.begin(), earliest.end());
    std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
        if (x.second != y.second) return x.second < y.second;
        return x.first < y.first;
    });
    return out;
}

void PolicyTree::dump(std::ostream& out) const {
    // Logical tree view: shared continuations are printed per occurrence.
    struct Item {
        std::int32_t idx;
        int depth;
    };
    std::vector<Item> stack{{root_, 0}};
    while (!stack.empty()) {
        auto [idx, depth] = stack.back();
        stack.pop_back();
        const auto& n = nodes_[idx];
        for (int i = 0; i < depth; ++i) out << "  ";
        out << kind_name(n.kind);
        if (n.kind != NodeKind::Root) out << " k=" << n.task;
        if (n.kind == NodeKind::Attempt) out << " t=" << n.attempt_time;
        if (n.kind == NodeKind::Fail || n.kind == NodeKind::Success) {
            out << " p=" << n.outcome_prob;
        }
        if (propagated_) out << " v=" << n.value;
        out << "\n";
        if (n.child_b != -1) stack.push_back({n.child_b, depth + 1});
        if (n.child_a != -1) stack.push_back({n.child_a, depth + 1});
    }
}

}  // namespace scoba
