#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scoba/core.hpp"
#include "scoba/rng.hpp"

namespace scoba::drone {

/// CDF of the Epanechnikov distribution centered at mu with half-width r.
double epan_cdf(double mu, double r, double t);

/// One draw via the closed-form inverse CDF; support [mu - r, mu + r].
/// Degenerate half-widths (r below epsilon) return mu.
double sample_travel_time(double mu, double r, Rng& rng);

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

double distance(const Vec2& a, const Vec2& b);

struct CityModel {
    std::vector<Vec2> depots;
    Vec2 box_min{0.0, 0.0};
    Vec2 box_max{12.0, 12.5};
    double cruise_speed = 0.6;  // km per minute
    double range_limit = 10.0;  // km

    /// Deterministic symmetric travel-time estimate in minutes.
    double travel_time(const Vec2& a, const Vec2& b) const;

    /// Hand-placed layouts covering the default bounding box.
    static CityModel with_depots(int count);

    static CityModel load(const std::string& path);
    void save(const std::string& path) const;
};

struct DeliveryRequest {
    TaskId id = 0;
    Vec2 location;
    TimeWindow window;
    enum class Status { Pending, Enroute, Delivered, Late } status = Status::Pending;
};

struct Drone {
    AgentId id = 0;
    int depot = 0;
    TimeStep ready_at = 0;  // at its depot and dispatchable from this step
};

/// Agent-task window and completion model for a drone-request pair: nothing
/// when the request is beyond flight range; otherwise the request window
/// (clamped to the drone's ready time) with an Epanechnikov travel model,
/// credited no earlier than the window opening.
std::optional<std::pair<TimeWindow, CompletionModel>> request_windows(
    const Drone& drone, const DeliveryRequest& request, const CityModel& city,
    TimeStep now);

/// Bernoulli(new_request_prob) arrival for this minute: location uniform in
/// the bounding box, window duration uniform in [15, 30] minutes.
std::vector<DeliveryRequest> generate_requests(const CityModel& city,
                                               double new_request_prob, Rng& rng,
                                               TimeStep now, TaskId& next_id);

/// Opening workload: round(1.5 x fleet size) requests at time zero.
std::vector<DeliveryRequest> initial_requests(const CityModel& city, int drone_count,
                                              Rng& rng, TaskId& next_id);

struct DroneWorld {
    CityModel city;
    std::vector<Drone> drones;
    std::vector<DeliveryRequest> requests;
    TimeStep now = 0;
    double new_request_prob = 0.5;
    bool noisy_return = false;  // sample the return leg too instead of using mu
    TaskId next_id = 0;
    long total_requests = 0;
    long delivered = 0;
    long late = 0;

    static DroneWorld create(const CityModel& city, int drone_count,
                             double new_request_prob);
    DeliveryRequest* find(TaskId id);
};

/// Delivery bookkeeping for one sampled flight: the package cannot be
/// handed over before the window opens (the drone waits), and anything at
/// or past the window end is late.
std::pair<double, bool> resolve_delivery(double dispatch_time, double travel_time,
                                         const TimeWindow& window);

struct DroneEvents {
    struct Dispatch {
        AgentId drone = 0;
        TaskId request = 0;
        double delivery_time = 0.0;
        bool on_time = false;
    };
    std::vector<Dispatch> dispatches;
    std::vector<TaskId> expiries;
    std::vector<TaskId> arrivals;
    bool drone_freed = false;
    bool any() const {
        return !dispatches.empty() || !expiries.empty() || !arrivals.empty() || drone_freed;
    }
};

/// One execution minute at world.now: due dispatches sample their true
/// travel time, deliveries are credited at max(arrival, window start) and
/// marked late past the window end, drones fly the return leg before
/// becoming available, and pending requests whose window closed expire.
/// Advances world.now.
DroneEvents step_execution(DroneWorld& world, const Allocation& alloc, Rng& rng);

/// Snapshot of the pending requests as an allocation problem. The planning
/// downtime of a task approximates the return leg with the smallest
/// in-range depot travel time; execution uses each drone's exact legs.
ProblemInstance build_instance(const DroneWorld& world);

}  // namespace scoba::drone
