#include "goalcycle/expert.hpp"

#include <doctest.h>

#include <array>
#include <cmath>

using namespace goalcycle;
using namespace goalcycle::env;

namespace {

TaskSpec flat_task(std::uint64_t seed, int length = 900) {
    TaskSpec t;
    t.world.world_size = 16;
    t.world.num_goals = 4;
    t.world.seed = seed;
    t.order = game::CyclicOrder({0, 1, 2, 3});
    t.episode_length = length;
    t.episode_seed = seed + 1000;
    return t;
}

double min_clearance(const World& w, std::span<const Vec2> path) {
    double best = INFINITY;
    for (std::size_t k = 1; k < path.size(); ++k) {
        for (int s = 0; s <= 50; ++s) {
            const Vec2 p = path[k - 1] + (path[k] - path[k - 1]) * (s / 50.0);
            for (const auto& pl : w.pillars) best = std::min(best, (p - pl.centre).norm() - pl.radius);
        }
    }
    return best;
}

struct Solo {
    int score;
    int negatives;
};

Solo run_solo(const TaskSpec& task, double noise, std::uint64_t seed) {
    Episode ep(task, {Role::Expert});
    expert::ExpertBot bot(seed, noise);
    Policy* ps[] = {&bot};
    const auto log = run_episode(ep, ps);
    int neg = 0;
    for (const auto& e : log.entries) neg += e.reward < 0;
    return {log.scores[0], neg};
}

}  // namespace

TEST_CASE("planner: straight line in an empty world") {
    World w;
    w.size = 16;
    const auto path = expert::plan_path(w, Vec2(2, 2), Vec2(14, 3));
    CHECK(path.front() == Vec2(2, 2));
    CHECK(path.back() == Vec2(14, 3));
    CHECK(expert::path_length(path) == doctest::Approx((Vec2(14, 3) - Vec2(2, 2)).norm()));
}

TEST_CASE("planner: detours around a disc with clearance") {
    World w;
    w.size = 16;
    w.pillars.push_back(Pillar{Vec2(8, 8), 1.0});
    const Vec2 a(2, 8), b(14, 8);
    const auto path = expert::plan_path(w, a, b);
    CHECK(expert::path_length(path) > (b - a).norm());
    CHECK(min_clearance(w, path) >= kAvatarRadius - 1e-9);
}

TEST_CASE("planner: enclosed target is unreachable") {
    World w;
    w.size = 16;
    for (int k = 0; k < 24; ++k) {
        const double th = kTwoPi * k / 24;
        w.pillars.push_back(Pillar{Vec2(8, 8) + 3.0 * Vec2(std::cos(th), std::sin(th)), 0.6});
    }
    CHECK_THROWS_AS(expert::plan_path(w, Vec2(1, 1), Vec2(8, 8)), PlanningError);
}

TEST_CASE("planner paths keep clear of pillars in generated worlds") {
    WorldParams p;
    p.world_size = 24;
    p.v_obstacle_density = 0.04;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        p.seed = seed;
        const World w = generate_world(p);
        Rng rng(seed);
        const Pose a = sample_spawn(w, rng);
        const auto path = expert::plan_path(w, a.position, w.goals[0].centre);
        CHECK(min_clearance(w, path) >= kAvatarRadius - 1e-9);
    }
}

TEST_CASE("noise-free expert never scores -1 on flat worlds and cycles steadily") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const TaskSpec task = flat_task(seed);
        const Solo s = run_solo(task, 0.0, seed);
        CHECK(s.negatives == 0);
        CHECK(s.score > 8);
    }
}

TEST_CASE("noise=1 expert acts uniformly") {
    TaskSpec task = flat_task(3, 5000);
    Episode ep(task, {Role::Expert});
    expert::ExpertBot bot(77, 1.0);
    bot.begin_episode(ep, 0);
    std::array<int, kNumActions> counts{};
    const int draws = 5000;
    for (int i = 0; i < draws; ++i) ++counts[static_cast<std::size_t>(std::get<Action>(bot.act(ep, 0)))];
    double chi2 = 0.0;
    for (int c : counts) chi2 += (c - draws / 5.0) * (c - draws / 5.0) / (draws / 5.0);
    CHECK(chi2 < 18.47);  // 4 dof, p = 0.001
}

TEST_CASE("noisy expert still cycles but scores less") {
    int clean = 0, noisy = 0;
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        const TaskSpec task = flat_task(seed);
        clean += run_solo(task, 0.0, seed).score;
        const int s = run_solo(task, 0.3, seed).score;
        CHECK(s > 0);
        noisy += s;
    }
    CHECK(noisy < clean);
}

TEST_CASE("fixed route visits the scripted goals") {
    TaskSpec task = flat_task(4);
    Episode ep(task, {Role::Expert});
    expert::ExpertBot bot(1, 0.0, {0, 2});
    Policy* ps[] = {&bot};
    const auto log = run_episode(ep, ps);
    REQUIRE(log.entries.size() > 4);
    for (const auto& e : log.entries) CHECK((e.goal == 0 || e.goal == 2));
}

TEST_CASE("expert on obstacle worlds keeps scoring") {
    WorldParams p;
    p.world_size = 24;
    p.v_obstacle_density = 0.02;
    p.h_obstacle_density = 0.005;
    p.terrain_amplitude = 3;
    p.terrain_frequency = 0.05;
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        p.seed = seed;
        TaskSpec task;
        task.world = p;
        task.order = game::CyclicOrder({0, 1, 2, 3});
        task.episode_length = 900;
        task.episode_seed = seed;
        CHECK(run_solo(task, 0.0, seed).score > 3);
    }
}
