#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "scoba/drone.hpp"
#include "scoba/rng.hpp"

using namespace scoba;
using namespace scoba::drone;

TEST_CASE("epanechnikov cdf closed form") {
    CHECK(epan_cdf(9.0, 3.0, 9.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(epan_cdf(9.0, 3.0, 6.0) == 0.0);
    CHECK(epan_cdf(9.0, 3.0, 12.0) == 1.0);
    CHECK(epan_cdf(9.0, 3.0, 10.5) == doctest::Approx(0.84375).epsilon(1e-15));
    CHECK(epan_cdf(9.0, 3.0, 5.0) == 0.0);
    CHECK(epan_cdf(9.0, 3.0, 20.0) == 1.0);
    CHECK_THROWS_AS(epan_cdf(9.0, 0.0, 9.0), InputError);
}

TEST_CASE("inverse-cdf sampling matches the distribution") {
    const double mu = 9.0, r = 3.0;
    Rng rng(4242);
    const int n = 100000;
    std::vector<double> draws;
    draws.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double x = sample_travel_time(mu, r, rng);
        CHECK(x >= mu - r - 1e-9);
        CHECK(x <= mu + r + 1e-9);
        draws.push_back(x);
    }
    std::sort(draws.begin(), draws.end());
    double ks = 0.0;
    for (int i = 0; i < n; ++i) {
        const double model = epan_cdf(mu, r, draws[static_cast<std::size_t>(i)]);
        const double hi = static_cast<double>(i + 1) / n;
        const double lo = static_cast<double>(i) / n;
        ks = std::max({ks, std::abs(model - hi), std::abs(model - lo)});
    }
    CHECK(ks < 0.01);

    SUBCASE("degenerate half-width returns the mean") {
        CHECK(sample_travel_time(7.5, 0.0, rng) == 7.5);
    }
}

TEST_CASE("request windows and completion models") {
    const auto city = CityModel::with_depots(3);
    Drone d{0, 0, 0};  // depot (3, 3.5)

    SUBCASE("out-of-range requests are infeasible") {
        DeliveryRequest r{0, {3.0 + 12.0, 3.5}, TimeWindow(0, 30)};
        CHECK_FALSE(request_windows(d, r, city, 0).has_value());
    }
    SUBCASE("short hop inside a long window is certain") {
        // 5.4 km at 0.6 km/min: mu = 9 minutes, r = 3
        DeliveryRequest r{0, {3.0 + 5.4, 3.5}, TimeWindow(0, 30)};
        const auto pair = request_windows(d, r, city, 0);
        REQUIRE(pair.has_value());
        CHECK(pair->first == TimeWindow(0, 30));
        CHECK(pair->second.cdf(30) == 1.0);
        CHECK(pair->second.cdf(9) == doctest::Approx(0.5));
    }
    SUBCASE("dispatching too late leaves no probability mass") {
        DeliveryRequest r{0, {3.0 + 5.4, 3.5}, TimeWindow(0, 30)};
        const auto pair = request_windows(d, r, city, 0);
        REQUIRE(pair.has_value());
        // 4 minutes of window left but the earliest arrival takes 6
        CHECK(pair->second.cdf(4) == 0.0);
    }
    SUBCASE("busy drones get clamped windows") {
        Drone busy{0, 0, 12};
        DeliveryRequest r{0, {3.0 + 5.4, 3.5}, TimeWindow(0, 30)};
        const auto pair = request_windows(busy, r, city, 0);
        REQUIRE(pair.has_value());
        CHECK(pair->first.lower == 12);
        DeliveryRequest closing{1, {3.0 + 5.4, 3.5}, TimeWindow(0, 10)};
        CHECK_FALSE(request_windows(busy, closing, city, 0).has_value());
    }
}

TEST_CASE("request generation") {
    const auto city = CityModel::with_depots(3);
    Rng rng(9);
    TaskId next = 0;
    SUBCASE("probability zero generates nothing") {
        for (TimeStep t = 0; t < 50; ++t) {
            CHECK(generate_requests(city, 0.0, rng, t, next).empty());
        }
    }
    SUBCASE("probability one generates one request per minute") {
        int count = 0;
        for (TimeStep t = 0; t < 100; ++t) {
            const auto reqs = generate_requests(city, 1.0, rng, t, next);
            count += static_cast<int>(reqs.size());
            for (const auto& r : reqs) {
                CHECK(r.window.lower == t);
                CHECK(r.window.length() >= 15);
                CHECK(r.window.length() <= 30);
                CHECK(r.location.x >= city.box_min.x);
                CHECK(r.location.x <= city.box_max.x);
            }
        }
        CHECK(count == 100);
    }
    SUBCASE("initial batch is 1.5x the fleet") {
        CHECK(initial_requests(city, 18, rng, next).size() == 27);
        CHECK(initial_requests(city, 15, rng, next).size() == 23);  // rounded
    }
}

TEST_CASE("delivery waiting rule") {
    const TimeWindow w(10, 25);
    SUBCASE("early arrivals wait for the window to open") {
        const auto [at, on_time] = resolve_delivery(2.0, 4.0, w);
        CHECK(at == 10.0);
        CHECK(on_time);
    }
    SUBCASE("arrival past the window end is late") {
        const auto [at, on_time] = resolve_delivery(20.0, 9.0, w);
        CHECK(at == 29.0);
        CHECK_FALSE(on_time);
    }
}

TEST_CASE("dispatch execution semantics") {
    auto city = CityModel::with_depots(3);
    SUBCASE("on-time delivery inside the window") {
        auto world = DroneWorld::create(city, 3, 0.0);
        world.requests.push_back(DeliveryRequest{0, {3.0 + 3.0, 3.5}, TimeWindow(0, 30)});
        world.total_requests = 1;
        Rng rng(17);
        Allocation alloc;
        alloc.assignments[0] = {{0, 0}};
        const auto events = step_execution(world, alloc, rng);
        REQUIRE(events.dispatches.size() == 1);
        CHECK(events.dispatches[0].on_time);
        CHECK(world.delivered == 1);
        // ready again only after the return leg
        CHECK(world.drones[0].ready_at > world.now);
    }
    SUBCASE("request expires when its window closes unserved") {
        auto world = DroneWorld::create(city, 1, 0.0);
        world.requests.push_back(DeliveryRequest{0, {11.9, 12.4}, TimeWindow(0, 16)});
        world.total_requests = 1;
        Rng rng(17);
        for (int t = 0; t < 20 && world.late == 0; ++t) {
            (void)step_execution(world, {}, rng);
        }
        CHECK(world.late == 1);
        CHECK(world.requests[0].status == DeliveryRequest::Status::Late);
    }
    SUBCASE("seeded replays are identical") {
        auto run = [&](std::uint64_t seed) {
            auto world = DroneWorld::create(city, 2, 1.0);
            Rng gen_rng(seed), exec_rng(seed + 1);
            std::vector<std::tuple<TimeStep, TaskId, double>> log;
            for (TimeStep t = 0; t < 40; ++t) {
                Allocation alloc;
                // always dispatch drone 0 at the earliest pending request
                for (const auto& r : world.requests) {
                    if (r.status == DeliveryRequest::Status::Pending &&
                        r.window.contains(world.now) &&
                        world.drones[0].ready_at <= world.now) {
                        const auto& depot =
                            world.city.depots[static_cast<std::size_t>(world.drones[0].depot)];
                        if (distance(depot, r.location) <= world.city.range_limit) {
                            alloc.assignments[0] = {{r.id, world.now}};
                            break;
                        }
                    }
                }
                const auto events = step_execution(world, alloc, exec_rng);
                for (const auto& d : events.dispatches) {
                    log.emplace_back(t, d.request, d.delivery_time);
                }
                for (auto& r :
                     generate_requests(city, 1.0, gen_rng, world.now, world.next_id)) {
                    world.requests.push_back(r);
                }
            }
            return log;
        };
        CHECK(run(5) == run(5));
        CHECK(run(5) != run(6));
    }
}

TEST_CASE("planning instances never cross the range limit") {
    const auto city = CityModel::with_depots(5);
    auto world = DroneWorld::create(city, 10, 0.0);
    Rng rng(33);
    for (int i = 0; i < 40; ++i) {
        DeliveryRequest r;
        r.id = world.next_id++;
        r.location.x = std::uniform_real_distribution<double>(0.0, 12.0)(rng);
        r.location.y = std::uniform_real_distribution<double>(0.0, 12.5)(rng);
        r.window = TimeWindow(0, 15 + (i % 16));
        world.requests.push_back(r);
    }
    const auto instance = build_instance(world);
    for (const auto& [key, w] : instance.windows()) {
        (void)w;
        const auto& drone = world.drones[static_cast<std::size_t>(key.first)];
        const auto& depot = city.depots[static_cast<std::size_t>(drone.depot)];
        const auto* req = world.find(key.second);
        REQUIRE(req != nullptr);
        CHECK(distance(depot, req->location) <= city.range_limit + 1e-12);
    }
}

TEST_CASE("city files round trip") {
    const auto city = CityModel::with_depots(5);
    const std::string path = "city_roundtrip_test.txt";
    city.save(path);
    const auto loaded = CityModel::load(path);
    CHECK(loaded.depots.size() == 5);
    CHECK(loaded.cruise_speed == doctest::Approx(city.cruise_speed));
    CHECK(loaded.range_limit == doctest::Approx(city.range_limit));
    CHECK(loaded.box_max.y == doctest::Approx(city.box_max.y));
    std::remove(path.c_str());
}
