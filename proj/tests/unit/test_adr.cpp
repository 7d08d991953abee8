#include "goalcycle/adr.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace goalcycle;
using namespace goalcycle::adr;

namespace {

// Kolmogorov-Smirnov distance of samples against U[lo, hi].
double ks_uniform(std::vector<double> xs, double lo, double hi) {
    std::sort(xs.begin(), xs.end());
    double d = 0.0;
    const double n = static_cast<double>(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = (xs[i] - lo) / (hi - lo);
        d = std::max({d, std::abs(f - i / n), std::abs(f - (i + 1) / n)});
    }
    return d;
}

}  // namespace

TEST_CASE("reference configuration table") {
    const auto s = reference_config();
    REQUIRE(s.params.size() == 7);
    struct Row {
        const char* name;
        double min, init, max, step;
    };
    const Row rows[] = {{"world_size", 20, 20, 32, 1},
                        {"h_obstacle_density", 0.0001, 0.0001, 0.01, 0.0001},
                        {"v_obstacle_density", 0.0, 0.0, 0.2, 0.0005},
                        {"terrain_amplitude", 10.0, 10.0, 15.0, 0.1},
                        {"terrain_frequency", 0.01, 0.01, 0.1, 0.002},
                        {"bot_speed", 7.0, 11.0, 14.0, 0.1},
                        {"dropout_p", 2.0 / 1800, 20.0 / 1800, 40.0 / 1800, 2.0 / 1800}};
    for (std::size_t i = 0; i < 7; ++i) {
        CHECK(s.params[i].name == rows[i].name);
        CHECK(s.params[i].hard_min == rows[i].min);
        CHECK(s.params[i].lo == rows[i].init);
        CHECK(s.params[i].hi == rows[i].init);
        CHECK(s.params[i].hard_max == rows[i].max);
        CHECK(s.params[i].step == rows[i].step);
    }
    CHECK(s.params[0].frozen_low);
    CHECK(!s.params[5].frozen_low);
}

TEST_CASE("sampling without pinning is uniform") {
    auto s = make_state({ADRParam{"a", 0, 10, 2, 7, 0.5}}, ADRConfig{0.0});
    Rng rng(3);
    std::vector<double> xs;
    for (int i = 0; i < 10000; ++i) {
        const auto smp = sample_task_params(s, rng);
        CHECK(!smp.pinned);
        xs.push_back(smp.lambda[0]);
    }
    CHECK(ks_uniform(xs, 2, 7) < 1.63 / std::sqrt(10000.0));  // alpha = 0.01
}

TEST_CASE("forced pinning lands on both boundaries") {
    auto s = make_state({ADRParam{"a", 0, 10, 2, 7, 0.5}}, ADRConfig{1.0});
    Rng rng(4);
    int low = 0;
    const int n = 4000;
    for (int i = 0; i < n; ++i) {
        const auto smp = sample_task_params(s, rng);
        REQUIRE(smp.pinned);
        CHECK((smp.lambda[0] == 2 || smp.lambda[0] == 7));
        low += smp.pinned->side == Side::Low;
    }
    CHECK(std::abs(low - n / 2.0) < 3 * std::sqrt(n * 0.25));
}

TEST_CASE("degenerate ranges give constant samples") {
    auto s = make_state({ADRParam{"a", 0, 10, 3, 3, 0.5}, ADRParam{"b", 0, 1, 0.5, 0.5, 0.1}}, ADRConfig{0.3});
    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
        const auto smp = sample_task_params(s, rng);
        CHECK(smp.lambda == std::vector<double>{3, 0.5});
    }
}

TEST_CASE("push and update rules") {
    auto s = reference_config();
    CHECK_THROWS_AS(push_metric(s, Pin{0, Side::Low}, 1.0), ContractViolation);
    CHECK_THROWS_AS(push_metric(s, Pin{9, Side::High}, 1.0), ContractViolation);
    push_metric(s, Pin{0, Side::High}, 0.9);
    CHECK(s.queue(Pin{0, Side::High}).size() == 1);
    update_boundaries(s);
    CHECK(s.params[0].hi == 21);
    CHECK(s.queue(Pin{0, Side::High}).empty());
    push_metric(s, Pin{0, Side::High}, 0.5);
    update_boundaries(s);
    CHECK(s.params[0].hi == 20);
    const auto before = s.params;
    const auto r = update_boundaries(s);
    CHECK(r.acted == 0);
    for (std::size_t i = 0; i < before.size(); ++i) CHECK(s.params[i].hi == before[i].hi);
    push_metric(s, Pin{5, Side::Low}, 0.8);
    push_metric(s, Pin{5, Side::Low}, 0.8);
    update_boundaries(s);
    CHECK(s.params[5].lo == 11.0);
}

TEST_CASE("ordering invariant under random pushes") {
    Rng rng(8);
    auto s = reference_config();
    for (int k = 0; k < 20000; ++k) {
        const auto smp = sample_task_params(s, rng);
        if (smp.pinned) push_metric(s, *smp.pinned, uniform01(rng));
        if (k % 7 == 0) update_boundaries(s);
        for (const auto& p : s.params) {
            CHECK(p.hard_min <= p.lo);
            CHECK(p.lo <= p.hi);
            CHECK(p.hi <= p.hard_max);
        }
    }
}

TEST_CASE("serialisation round trip") {
    auto s = reference_config();
    push_metric(s, Pin{1, Side::High}, 0.25);
    s.params[5].lo = 9.3;
    const auto back = deserialize(serialize(s));
    REQUIRE(back.params.size() == s.params.size());
    for (std::size_t i = 0; i < s.params.size(); ++i) {
        CHECK(back.params[i].lo == s.params[i].lo);
        CHECK(back.params[i].hi == s.params[i].hi);
        CHECK(back.queues[i][0] == s.queues[i][0]);
        CHECK(back.queues[i][1] == s.queues[i][1]);
    }
    CHECK_THROWS(deserialize("{"));
}

TEST_CASE("apply params into a task") {
    auto s = reference_config();
    env::TaskSpec t;
    apply_params(s, std::vector<double>{24, 0.001, 0.01, 12, 0.05, 7, 0.01}, t);
    CHECK(t.world.world_size == 24);
    CHECK(t.expert.speed == doctest::Approx(0.5));
    CHECK(t.dropout == expert::DropoutScheme::probabilistic(0.01));
}
