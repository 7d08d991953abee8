#include "goalcycle/ct_metric.hpp"

#include <numeric>

namespace goalcycle::ct {

using env::Episode;
using env::Policy;
using env::Role;
using env::TaskSpec;

double ct(double E, double A_full, double A_solo, double A_half) {
    if (E == 0.0) throw UndefinedMetric("ct: expert score is zero");
    return 0.5 * (A_full - A_solo) / E + 0.5 * (A_half - A_solo) / E;
}

double normalised_score(double agent_full_episode, double expert_half_episode) {
    if (!(expert_half_episode > 0.0)) throw UndefinedMetric("normalised score: expert score is not positive");
    return agent_full_episode / expert_half_episode;
}

std::unique_ptr<Policy> make_expert(const TaskSpec& task, std::uint64_t seed) {
    return std::make_unique<expert::ExpertBot>(seed, task.expert.noise);
}

namespace {

TaskSpec pin_direction(TaskSpec task, std::uint64_t seed) {
    if (task.expert_direction == 0) {
        Rng r = make_rng(seed, 5);
        task.expert_direction = bernoulli(r, 0.5) ? 1 : -1;
    }
    return task;
}

env::EpisodeLog play(const TaskSpec& task, const std::shared_ptr<const env::World>& world,
                     const env::PolicyFactory* agent, std::uint64_t seed) {
    std::vector<Role> roster;
    std::vector<std::unique_ptr<Policy>> owned;
    if (agent) {
        roster.push_back(Role::Agent);
        owned.push_back((*agent)(derive_seed(seed, 3)));
    }
    roster.push_back(Role::Expert);
    owned.push_back(make_expert(task, derive_seed(seed, 2)));
    Episode ep(task, world, roster);
    std::vector<Policy*> ptrs;
    for (auto& p : owned) ptrs.push_back(p.get());
    return env::run_episode(ep, ptrs);
}

}  // namespace

CTMeasurement run_ct_eval(const env::PolicyFactory& agent, const TaskSpec& task, std::uint64_t seed) {
    const TaskSpec base = pin_direction(task, seed);
    const auto world = std::make_shared<const env::World>(env::build_world(base));
    CTMeasurement m;
    TaskSpec t = base;
    t.dropout = expert::DropoutScheme::no();
    m.E = play(t, world, nullptr, seed).scores[0];
    m.A_full = play(t, world, &agent, seed).scores[0];
    t.dropout = expert::DropoutScheme::full();
    m.A_solo = play(t, world, &agent, seed).scores[0];
    t.dropout = expert::DropoutScheme::half();
    m.A_half = play(t, world, &agent, seed).scores[0];
    m.ct = ct(m.E, m.A_full, m.A_solo, m.A_half);
    return m;
}

double mean_ct(std::span<const CTMeasurement> measurements) {
    if (measurements.empty()) return 0.0;
    double s = 0.0;
    for (const auto& m : measurements) s += m.ct;
    return s / static_cast<double>(measurements.size());
}

NormalisedResult run_normalised(const env::PolicyFactory& agent, const TaskSpec& task, std::uint64_t seed) {
    TaskSpec t = pin_direction(task, seed);
    t.dropout = expert::DropoutScheme::half();
    const auto world = std::make_shared<const env::World>(env::build_world(t));
    const auto log = play(t, world, &agent, seed);
    NormalisedResult r;
    r.agent_score = log.scores[0];
    const auto& er = log.rewards[1];
    r.expert_half_score = std::accumulate(er.begin(), er.begin() + t.episode_length / 2, 0);
    r.score = normalised_score(r.agent_score, r.expert_half_score);
    return r;
}

// ---------------------------------------------------------------------------

env::Command RandomPolicy::act(const Episode& /*episode*/, int /*self*/) {
    return static_cast<env::Action>(uniform_int(rng_, env::kNumActions));
}

env::Command FollowerPolicy::act(const Episode& episode, int /*self*/) {
    const int e = episode.expert_index();
    if (e >= 0 && episode.expert_visible()) return episode.player(e).pose;
    return static_cast<env::Action>(uniform_int(rng_, env::kNumActions));
}

ReplayPolicy::ReplayPolicy(std::uint64_t seed)
    : follow_(derive_seed(seed, 1)), bot_(derive_seed(seed, 2), 0.0, {}), rng_(derive_seed(seed, 3)) {}

void ReplayPolicy::begin_episode(const Episode& episode, int self) {
    entered_.clear();
    replaying_ = false;
    bot_.begin_episode(episode, self);
}

env::Command ReplayPolicy::act(const Episode& episode, int self) {
    if (episode.expert_index() >= 0 && episode.expert_visible()) {
        replaying_ = false;
        return follow_.act(episode, self);
    }
    const auto n = static_cast<std::size_t>(episode.world().goals.size());
    if (!replaying_) {
        if (entered_.size() < n) return static_cast<env::Action>(uniform_int(rng_, env::kNumActions));
        bot_.set_route(std::vector<int>(entered_.end() - static_cast<long>(n), entered_.end()), false);
        replaying_ = true;
    }
    return bot_.act(episode, self);
}

void ReplayPolicy::after_step(const Episode& episode, int self, const env::StepResult& result) {
    for (const auto& e : result.entries) {
        if (e.player == self) entered_.push_back(e.goal);
    }
    bot_.after_step(episode, self, result);
}

void AntiFollowerPolicy::begin_episode(const Episode& episode, int self) {
    seen_.clear();
    active_ = false;
    bot_.begin_episode(episode, self);
}

env::Command AntiFollowerPolicy::act(const Episode& episode, int self) {
    if (!active_) return env::Action::Noop;
    return bot_.act(episode, self);
}

void AntiFollowerPolicy::after_step(const Episode& episode, int self, const env::StepResult& result) {
    const auto n = static_cast<std::size_t>(episode.world().goals.size());
    for (const auto& e : result.entries) {
        if (active_ || e.player != episode.expert_index() || !episode.expert_visible()) continue;
        if (e.reward < 0) seen_.clear();
        if (e.reward <= 0) continue;
        seen_.push_back(e.goal);
        if (seen_.size() == n) {
            std::vector<int> reversed(seen_.rbegin(), seen_.rend());
            bot_.set_route(std::move(reversed), false);
            active_ = true;
        }
    }
    if (active_) bot_.after_step(episode, self, result);
}

void RandomEntryPolicy::flip(const Episode& episode) {
    const auto& order = episode.task().order;
    bot_.set_route(bernoulli(rng_, 0.5) ? order.sequence() : order.inverse().sequence(), false);
    streak_ = 0;
}

void RandomEntryPolicy::begin_episode(const Episode& episode, int self) {
    bot_.begin_episode(episode, self);
    flip(episode);
}

env::Command RandomEntryPolicy::act(const Episode& episode, int self) { return bot_.act(episode, self); }

void RandomEntryPolicy::after_step(const Episode& episode, int self, const env::StepResult& result) {
    bot_.after_step(episode, self, result);
    for (const auto& e : result.entries) {
        if (e.player != self || e.reward == 0) continue;
        if (e.reward < 0) {
            streak_ = 0;
            continue;
        }
        if (++streak_ == static_cast<int>(episode.world().goals.size())) flip(episode);
    }
}

}  // namespace goalcycle::ct
