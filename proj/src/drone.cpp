#include "scoba/drone.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

namespace scoba::drone {

double epan_cdf(double mu, double r, double t) {
    return cdf_epanechnikov(mu, r, t);
}

double sample_travel_time(double mu, double r, Rng& rng) {
    if (r < 1e-9) return mu;
    const double u01 = uniform01(rng);
    // Root in [-1, 1] of the kernel CDF: u^3 - 3u + (4U - 2) = 0.
    const double theta = std::acos(std::clamp(1.0 - 2.0 * u01, -1.0, 1.0)) / 3.0;
    const double u = 2.0 * std::cos(theta - 2.0 * std::numbers::pi / 3.0);
    return mu + r * std::clamp(u, -1.0, 1.0);
}

double distance(const Vec2& a, const Vec2& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

double CityModel::travel_time(const Vec2& a, const Vec2& b) const {
    return distance(a, b) / cruise_speed;
}

CityModel CityModel::with_depots(int count) {
    CityModel city;
    if (count == 3) {
        city.depots = {{3.0, 3.5}, {9.0, 3.5}, {6.0, 9.5}};
    } else if (count == 5) {
        city.depots = {{2.5, 2.5}, {9.5, 2.5}, {2.5, 10.0}, {9.5, 10.0}, {6.0, 6.25}};
    } else {
        throw InputError("default city layouts exist for 3 or 5 depots");
    }
    return city;
}

CityModel CityModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open city file: " + path);
    CityModel city;
    city.depots.clear();
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ss(line);
        std::string directive;
        if (!(ss >> directive) || directive[0] == '#') continue;
        if (directive == "box") {
            ss >> city.box_min.x >> city.box_min.y >> city.box_max.x >> city.box_max.y;
        } else if (directive == "cruise_speed") {
            ss >> city.cruise_speed;
        } else if (directive == "range_limit") {
            ss >> city.range_limit;
        } else if (directive == "depot") {
            Vec2 d;
            ss >> d.x >> d.y;
            city.depots.push_back(d);
        } else {
            throw InputError("unknown city directive: " + directive);
        }
        if (!ss && !ss.eof()) throw InputError("malformed city line: " + line);
    }
    if (city.depots.empty()) throw InputError("city file defines no depots");
    return city;
}

void CityModel::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open file for writing: " + path);
    out << "box " << box_min.x << " " << box_min.y << " " << box_max.x << " " << box_max.y
        << "\n";
    out << "cruise_speed " << cruise_speed << "\n";
    out << "range_limit " << range_limit << "\n";
    for (const Vec2& d : depots) out << "depot " << d.x << " " << d.y << "\n";
}

std::optional<std::pair<TimeWindow, CompletionModel>> request_windows(
    const Drone& drone, const DeliveryRequest& request, const CityModel& city,
    TimeStep now) {
    const Vec2& depot = city.depots.at(static_cast<std::size_t>(drone.depot));
    if (distance(depot, request.location) > city.range_limit) return std::nullopt;
    const TimeStep lower = std::max({request.window.lower, now, drone.ready_at});
    if (lower >= request.window.upper) return std::nullopt;
    const double mu = city.travel_time(depot, request.location);
    if (mu < 1e-9) {
        // request at the depot itself: delivery inside any open window is certain
        return std::make_pair(TimeWindow(lower, request.window.upper),
                              CompletionModel::table({1.0}));
    }
    return std::make_pair(TimeWindow(lower, request.window.upper),
                          CompletionModel::epanechnikov(mu, mu / 3.0));
}

std::vector<DeliveryRequest> generate_requests(const CityModel& city,
                                               double new_request_prob, Rng& rng,
                                               TimeStep now, TaskId& next_id) {
    std::vector<DeliveryRequest> out;
    if (uniform01(rng) < new_request_prob) {
        DeliveryRequest r;
        r.id = next_id++;
        r.location.x =
            std::uniform_real_distribution<double>(city.box_min.x, city.box_max.x)(rng);
        r.location.y =
            std::uniform_real_distribution<double>(city.box_min.y, city.box_max.y)(rng);
        const TimeStep duration = std::uniform_int_distribution<TimeStep>(15, 30)(rng);
        r.window = TimeWindow(now, now + duration);
        out.push_back(r);
    }
    return out;
}

std::vector<DeliveryRequest> initial_requests(const CityModel& city, int drone_count,
                                              Rng& rng, TaskId& next_id) {
    const int count = static_cast<int>(std::lround(1.5 * drone_count));
    std::vector<DeliveryRequest> out;
    for (int i = 0; i < count; ++i) {
        DeliveryRequest r;
        r.id = next_id++;
        r.location.x =
            std::uniform_real_distribution<double>(city.box_min.x, city.box_max.x)(rng);
        r.location.y =
            std::uniform_real_distribution<double>(city.box_min.y, city.box_max.y)(rng);
        const TimeStep duration = std::uniform_int_distribution<TimeStep>(15, 30)(rng);
        r.window = TimeWindow(0, duration);
        out.push_back(r);
    }
    return out;
}

DroneWorld DroneWorld::create(const CityModel& city, int drone_count,
                              double new_request_prob) {
    if (drone_count <= 0) throw InputError("need at least one drone");
    DroneWorld w;
    w.city = city;
    w.new_request_prob = new_request_prob;
    for (int i = 0; i < drone_count; ++i) {
        // drones spread equally across depots
        w.drones.push_back(Drone{static_cast<AgentId>(i),
                                 static_cast<int>(i % city.depots.size()), 0});
    }
    return w;
}

DeliveryRequest* DroneWorld::find(TaskId id) {
    for (auto& r : requests) {
        if (r.id == id) return &r;
    }
    return nullptr;
}

std::pair<double, bool> resolve_delivery(double dispatch_time, double travel_time,
                                         const TimeWindow& window) {
    const double delivery =
        std::max(dispatch_time + travel_time, static_cast<double>(window.lower));
    return {delivery, delivery < static_cast<double>(window.upper)};
}

DroneEvents step_execution(DroneWorld& world, const Allocation& alloc, Rng& rng) {
    DroneEvents events;

    for (const auto& drone : world.drones) {
        if (drone.ready_at == world.now) events.drone_freed = true;
    }

    for (auto& drone : world.drones) {
        if (drone.ready_at > world.now) continue;
        auto it = alloc.assignments.find(drone.id);
        if (it == alloc.assignments.end()) continue;
        DeliveryRequest* target = nullptr;
        TimeStep planned_at = 0;
        for (const auto& [task, t] : it->second) {
            DeliveryRequest* r = world.find(task);
            if (r != nullptr && r->status == DeliveryRequest::Status::Pending) {
                target = r;
                planned_at = t;
                break;
            }
        }
        if (target == nullptr || world.now < planned_at) continue;
        if (world.now < target->window.lower || world.now >= target->window.upper) continue;

        const Vec2& depot = world.city.depots.at(static_cast<std::size_t>(drone.depot));
        const double mu = world.city.travel_time(depot, target->location);
        const double travel = sample_travel_time(mu, mu / 3.0, rng);
        const auto [delivery_time, on_time] =
            resolve_delivery(static_cast<double>(world.now), travel, target->window);
        target->status = on_time ? DeliveryRequest::Status::Delivered
                                 : DeliveryRequest::Status::Late;
        if (on_time) {
            ++world.delivered;
        } else {
            ++world.late;
        }
        const double return_leg =
            world.noisy_return ? sample_travel_time(mu, mu / 3.0, rng) : mu;
        drone.ready_at =
            static_cast<TimeStep>(std::ceil(delivery_time + return_leg - 1e-9));
        events.dispatches.push_back({drone.id, target->id, delivery_time, on_time});
    }

    // Requests whose window closed without a dispatch are late.
    for (auto& r : world.requests) {
        if (r.status != DeliveryRequest::Status::Pending) continue;
        if (world.now + 1 >= r.window.upper) {
            r.status = DeliveryRequest::Status::Late;
            ++world.late;
            events.expiries.push_back(r.id);
        }
    }
    ++world.now;
    return events;
}

ProblemInstance build_instance(const DroneWorld& world) {
    // Only drones that can actually be dispatched before the next replan
    // take part; the ones in flight are planned for when they free up.
    std::vector<AgentId> agents;
    for (const auto& d : world.drones) {
        if (d.ready_at <= world.now) agents.push_back(d.id);
    }

    std::vector<TaskSpec> tasks;
    std::map<std::pair<AgentId, TaskId>, TimeWindow> windows;
    std::map<std::pair<AgentId, TaskId>, CompletionModel> completion;
    TimeStep horizon = world.now + 1;

    for (const auto& request : world.requests) {
        if (request.status != DeliveryRequest::Status::Pending) continue;
        double best_return = std::numeric_limits<double>::infinity();
        bool any = false;
        for (const auto& drone : world.drones) {
            if (drone.ready_at > world.now) continue;
            auto pair = request_windows(drone, request, world.city, world.now);
            if (!pair) continue;
            // Dispatcher prudence: a flight whose estimated travel time no
            // longer fits the window would fly out only to arrive late while
            // tying the drone up for the full round trip. Such pairs are
            // not offered to the planner.
            const Vec2& depot = world.city.depots.at(static_cast<std::size_t>(drone.depot));
            const double mu = world.city.travel_time(depot, request.location);
            if (static_cast<double>(pair->first.lower) + mu >=
                static_cast<double>(pair->first.upper)) {
                continue;
            }
            windows.insert({{drone.id, request.id}, pair->first});
            completion.insert({{drone.id, request.id}, std::move(pair->second)});
            best_return = std::min(best_return, mu);
            horizon = std::max(horizon, pair->first.upper);
            any = true;
        }
        if (any) {
            const TimeStep downtime =
                static_cast<TimeStep>(std::lround(std::min(best_return, 1e6)));
            tasks.push_back(TaskSpec{request.id, 1.0, downtime});
        }
    }
    TimeStep max_downtime = 0;
    for (const auto& t : tasks) max_downtime = std::max(max_downtime, t.downtime);
    horizon += max_downtime + 1;
    return ProblemInstance(std::move(agents), std::move(tasks), horizon,
                           std::move(windows), std::move(completion));
}

}  // namespace scoba::drone
