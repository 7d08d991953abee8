#include "goalcycle/ct_metric.hpp"

#include <doctest.h>

#include <cmath>

using namespace goalcycle;
using namespace goalcycle::env;

namespace {

TaskSpec flat_task(std::uint64_t seed) {
    TaskSpec t;
    t.world.world_size = 16;
    t.world.num_goals = 4;
    t.world.seed = seed;
    Rng rng(seed);
    t.order = game::sample_order(4, rng);
    t.episode_length = 1800;
    t.episode_seed = seed + 77;
    return t;
}

struct Calibration {
    double ct = 0.0;
    double score = 0.0;
};

Calibration calibrate(const PolicyFactory& f, int seeds) {
    Calibration c;
    for (int s = 0; s < seeds; ++s) {
        const TaskSpec t = flat_task(100 + static_cast<std::uint64_t>(s));
        c.ct += ct::run_ct_eval(f, t, 500 + static_cast<std::uint64_t>(s)).ct;
        c.score += ct::run_normalised(f, t, 900 + static_cast<std::uint64_t>(s)).score;
    }
    c.ct /= seeds;
    c.score /= seeds;
    return c;
}

}  // namespace

TEST_CASE("ct reference values are exact") {
    for (double E : {1.0, 4.0, 10.0, 37.0}) {
        CHECK(ct::ct(E, E, 0, E / 2) == 0.75);
        CHECK(ct::ct(E, E, 0, E) == 1.0);
        CHECK(ct::ct(E, 3, 3, 3) == 0.0);
    }
    CHECK_THROWS_AS(ct::ct(0, 1, 0, 1), UndefinedMetric);
}

TEST_CASE("ct is scale invariant and monotone") {
    Rng rng(11);
    for (int i = 0; i < 1000; ++i) {
        const double E = 1 + uniform(rng, 0, 20), af = uniform(rng, -5, 30), as = uniform(rng, -5, 30),
                     ah = uniform(rng, -5, 30), c = uniform(rng, 0.1, 10);
        const double base = ct::ct(E, af, as, ah);
        CHECK(ct::ct(c * E, c * af, c * as, c * ah) == doctest::Approx(base).epsilon(1e-12));
        CHECK(ct::ct(E, af + 1, as, ah) >= base);
        CHECK(ct::ct(E, af, as, ah + 1) >= base);
        CHECK(ct::ct(E, af, as + 1, ah) <= base);
        CHECK(ct::ct(E, as, as, as) == 0.0);
    }
}

TEST_CASE("aggregate is the uniform mean") {
    std::vector<ct::CTMeasurement> m(3);
    m[0].ct = 0.1;
    m[1].ct = 0.5;
    m[2].ct = 0.9;
    CHECK(ct::mean_ct(m) == doctest::Approx(0.5));
}

TEST_CASE("normalised score") {
    CHECK(ct::normalised_score(0, 5) == 0.0);
    CHECK(ct::normalised_score(10, 5) == 2.0);
    CHECK_THROWS_AS(ct::normalised_score(3, 0), UndefinedMetric);
}

TEST_CASE("stub calibration: follower") {
    const auto c = calibrate(ct::factory_of<ct::FollowerPolicy>(), 20);
    MESSAGE("follower ct " << c.ct << " score " << c.score);
    CHECK(std::abs(c.ct - 0.75) <= 0.1);
    CHECK(std::abs(c.score - 1.0) <= 0.15);
}

TEST_CASE("stub calibration: replay") {
    const auto c = calibrate(ct::factory_of<ct::ReplayPolicy>(), 20);
    MESSAGE("replay ct " << c.ct << " score " << c.score);
    CHECK(c.ct >= 0.9);
    CHECK(c.score >= 1.7);
}

TEST_CASE("stub calibration: random") {
    const auto c = calibrate(ct::factory_of<ct::RandomPolicy>(), 20);
    MESSAGE("random ct " << c.ct);
    CHECK(std::abs(c.ct) <= 0.1);
}

TEST_CASE("paired episodes share the expert's score") {
    const TaskSpec t = flat_task(5);
    const auto a = ct::run_ct_eval(ct::factory_of<ct::RandomPolicy>(), t, 1);
    const auto b = ct::run_ct_eval(ct::factory_of<ct::FollowerPolicy>(), t, 1);
    CHECK(a.E == b.E);
    CHECK(a.E > 0);
}
