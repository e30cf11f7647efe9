#include "scoba/instance_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

namespace scoba {

namespace {

std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> tokens;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) {
        if (tok[0] == '#') break;
        tokens.push_back(tok);
    }
    return tokens;
}

CompletionModel parse_model(const std::vector<std::string>& tokens, std::size_t from) {
    const std::string& name = tokens.at(from);
    if (name == "geometric") {
        return CompletionModel::geometric(std::stod(tokens.at(from + 1)));
    }
    if (name == "epanechnikov") {
        return CompletionModel::epanechnikov(std::stod(tokens.at(from + 1)),
                                             std::stod(tokens.at(from + 2)));
    }
    if (name == "table") {
        std::vector<double> values;
        for (std::size_t i = from + 1; i < tokens.size(); ++i) {
            values.push_back(std::stod(tokens[i]));
        }
        return CompletionModel::table(std::move(values));
    }
    throw InputError("unknown completion model: " + name);
}

}  // namespace

ProblemInstance read_instance(std::istream& in) {
    TimeStep horizon = 0;
    std::vector<AgentId> agents;
    std::vector<TaskSpec> tasks;
    std::map<std::pair<AgentId, TaskId>, TimeWindow> windows;
    std::map<std::pair<AgentId, TaskId>, CompletionModel> completion;

    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto tokens = tokenize(line);
        if (tokens.empty()) continue;
        try {
            const std::string& directive = tokens[0];
            if (directive == "horizon") {
                horizon = static_cast<TimeStep>(std::stol(tokens.at(1)));
            } else if (directive == "agent") {
                agents.push_back(static_cast<AgentId>(std::stol(tokens.at(1))));
            } else if (directive == "task") {
                TaskSpec t;
                t.id = static_cast<TaskId>(std::stol(tokens.at(1)));
                for (std::size_t i = 2; i + 1 < tokens.size(); i += 2) {
                    if (tokens[i] == "penalty") {
                        t.penalty = std::stod(tokens[i + 1]);
                    } else if (tokens[i] == "downtime") {
                        t.downtime = static_cast<TimeStep>(std::stol(tokens[i + 1]));
                    } else {
                        throw InputError("unknown task attribute: " + tokens[i]);
                    }
                }
                tasks.push_back(t);
            } else if (directive == "window") {
                const AgentId a = static_cast<AgentId>(std::stol(tokens.at(1)));
                const TaskId k = static_cast<TaskId>(std::stol(tokens.at(2)));
                const TimeStep lo = static_cast<TimeStep>(std::stol(tokens.at(3)));
                const TimeStep up = static_cast<TimeStep>(std::stol(tokens.at(4)));
                windows.insert({{a, k}, TimeWindow(lo, up)});
            } else if (directive == "completion") {
                const AgentId a = static_cast<AgentId>(std::stol(tokens.at(1)));
                const TaskId k = static_cast<TaskId>(std::stol(tokens.at(2)));
                completion.insert({{a, k}, parse_model(tokens, 3)});
            } else {
                throw InputError("unknown directive: " + directive);
            }
        } catch (const std::out_of_range&) {
            std::ostringstream ss;
            ss << "instance file line " << lineno << ": missing fields";
            throw InputError(ss.str());
        } catch (const std::invalid_argument& e) {
            std::ostringstream ss;
            ss << "instance file line " << lineno << ": " << e.what();
            throw InputError(ss.str());
        }
    }
    return ProblemInstance(std::move(agents), std::move(tasks), horizon,
                           std::move(windows), std::move(completion));
}

ProblemInstance read_instance_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open instance file: " + path);
    return read_instance(in);
}

void write_instance(std::ostream& out, const ProblemInstance& instance) {
    out << "horizon " << instance.horizon() << "\n";
    for (AgentId a : instance.agents()) out << "agent " << a << "\n";
    out << std::setprecision(17);
    for (const TaskSpec& t : instance.tasks()) {
        out << "task " << t.id << " penalty " << t.penalty << " downtime " << t.downtime
            << "\n";
    }
    for (const auto& [key, w] : instance.windows()) {
        out << "window " << key.first << " " << key.second << " " << w.lower << " "
            << w.upper << "\n";
    }
    for (const auto& [key, model] : instance.completion_models()) {
        out << "completion " << key.first << " " << key.second << " " << model.name();
        for (double p : model.params()) out << " " << p;
        out << "\n";
    }
}

void write_instance_file(const std::string& path, const ProblemInstance& instance) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open file for writing: " + path);
    write_instance(out, instance);
}

}  // namespace scoba
