#include "goalcycle/episode.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace goalcycle::env {

namespace {

constexpr std::uint64_t kSpawnTag = 12;
constexpr std::uint64_t kDirectionTag = 13;
constexpr std::uint64_t kDropoutTag = 11;

// Moves an avatar centre from p by d, stopping at the first contact with a pillar or wall.
Vec2 sweep(const World& world, const Vec2& p, const Vec2& d) {
    const double lo = kAvatarRadius, hi = world.size - kAvatarRadius;
    double t = 1.0;
    for (int k = 0; k < 2; ++k) {
        if (d[k] > 0.0) t = std::min(t, std::max(0.0, (hi - p[k]) / d[k]));
        if (d[k] < 0.0) t = std::min(t, std::max(0.0, (lo - p[k]) / d[k]));
    }
    const double a = d.squaredNorm();
    for (const auto& pl : world.pillars) {
        const double R = pl.radius + kAvatarRadius;
        const Vec2 oc = p - pl.centre;
        const double b = oc.dot(d);
        if (b >= 0.0) continue;
        const double cc = oc.squaredNorm() - R * R;
        if (cc <= 0.0) {
            t = 0.0;
            continue;
        }
        const double disc = b * b - a * cc;
        if (disc < 0.0) continue;
        const double tt = (-b - std::sqrt(disc)) / a;
        if (tt < t) t = std::max(0.0, tt);
    }
    Vec2 q = p + t * d;
    for (const auto& pl : world.pillars) {
        const double R = pl.radius + kAvatarRadius;
        const Vec2 rel = q - pl.centre;
        const double n = rel.norm();
        if (n < R && n > 0.0) q = pl.centre + rel * (R / n);
    }
    return q.cwiseMax(lo).cwiseMin(hi);
}

}  // namespace

void validate(const TaskSpec& task) {
    validate(task.world);
    expert::validate(task.dropout);
    if (task.order.size() != task.world.num_goals) {
        throw std::invalid_argument("order size does not match num_goals");
    }
    if (!task.goal_centres.empty() && static_cast<int>(task.goal_centres.size()) != task.world.num_goals) {
        throw std::invalid_argument("goal_centres size does not match num_goals");
    }
    if (task.episode_length <= 0) throw std::invalid_argument("episode_length must be positive");
    if (task.num_rays <= 0) throw std::invalid_argument("num_rays must be positive");
    if (!(task.expert.speed > 0.0)) throw std::invalid_argument("expert speed must be positive");
    if (!(task.expert.noise >= 0.0 && task.expert.noise <= 1.0)) {
        throw std::invalid_argument("expert noise must be in [0, 1]");
    }
    if (task.expert_direction < -1 || task.expert_direction > 1) {
        throw std::invalid_argument("expert_direction must be -1, 0 or 1");
    }
}

World build_world(const TaskSpec& task) {
    if (task.goal_centres.empty()) return generate_world(task.world);
    return generate_world(task.world, std::span<const Vec2>(task.goal_centres));
}

TaskSpec make_task(const WorldParams& params, Rng& rng) {
    TaskSpec task;
    task.world = params;
    task.order = game::sample_order(params.num_goals, rng);
    task.episode_seed = rng();
    return task;
}

Episode::Episode(TaskSpec task, std::vector<Role> roster) : task_(std::move(task)) {
    validate(task_);
    world_ = std::make_shared<const World>(build_world(task_));
    init(std::move(roster));
}

Episode::Episode(TaskSpec task, std::shared_ptr<const World> world, std::vector<Role> roster)
    : task_(std::move(task)), world_(std::move(world)) {
    validate(task_);
    if (!world_) throw std::invalid_argument("null world");
    init(std::move(roster));
}

void Episode::init(std::vector<Role> roster) {
    // Role-keyed spawn streams: the expert starts in the same place whoever else is present.
    Rng expert_spawn = make_rng(task_.episode_seed, kSpawnTag);
    Rng agent_spawn = make_rng(task_.episode_seed, kSpawnTag + 1);
    for (std::size_t i = 0; i < roster.size(); ++i) {
        PlayerState p;
        p.role = roster[i];
        p.pose = sample_spawn(*world_, p.role == Role::Expert ? expert_spawn : agent_spawn);
        p.inside = world_->goal_at(p.pose.position);
        if (p.role == Role::Expert) {
            if (expert_ >= 0) throw std::invalid_argument("at most one expert per episode");
            expert_ = static_cast<int>(i);
            p.speed = task_.expert.speed;
        }
        players_.push_back(p);
    }
    int dir = task_.expert_direction;
    if (dir == 0) {
        Rng r = make_rng(task_.episode_seed, kDirectionTag);
        dir = bernoulli(r, 0.5) ? 1 : -1;
    }
    expert_order_ = dir > 0 ? task_.order : task_.order.inverse();
    dropout_rng_ = make_rng(task_.episode_seed, kDropoutTag);
    visible_ = expert::initial_visibility(task_.dropout);
}

Observation Episode::observe(int player) const {
    std::vector<CoPlayer> others;
    others.reserve(players_.size());
    for (int j = 0; j < num_players(); ++j) {
        if (j == player) continue;
        others.push_back(CoPlayer{players_[static_cast<std::size_t>(j)].pose, j == expert_});
    }
    const auto& self = players_[static_cast<std::size_t>(player)];
    return sense(*world_, self.pose, others, visible_, static_cast<double>(self.last_reward), task_.num_rays);
}

Pose Episode::move(const Pose& pose, Action action, double speed) const {
    Pose out = pose;
    double sign = 0.0;
    switch (action) {
        case Action::RotateLeft: out.heading = wrap_angle(pose.heading + kRotationStep); return out;
        case Action::RotateRight: out.heading = wrap_angle(pose.heading - kRotationStep); return out;
        case Action::Noop: return out;
        case Action::Forward: sign = 1.0; break;
        case Action::Backward: sign = -1.0; break;
    }
    double mult = world_->terrain.speed_multiplier(pose.position);
    for (const auto& z : world_->slow_zones) {
        if (z.contains(pose.position)) {
            mult *= kSlowZoneFactor;
            break;
        }
    }
    const Vec2 d = sign * base_speed(world_->size) * speed * mult * Vec2(std::cos(pose.heading), std::sin(pose.heading));
    out.position = sweep(*world_, pose.position, d);
    return out;
}

StepResult Episode::step(std::span<const Command> commands) {
    if (done()) throw ContractViolation("step on a finished episode");
    if (commands.size() != players_.size()) throw ContractViolation("one command per player required");
    StepResult result;
    result.rewards.assign(players_.size(), 0);
    for (std::size_t i = 0; i < players_.size(); ++i) {
        auto& p = players_[i];
        if (const auto* a = std::get_if<Action>(&commands[i])) {
            p.pose = move(p.pose, *a, p.speed);
        } else {
            p.pose = std::get<Pose>(commands[i]);
            p.pose.heading = wrap_angle(p.pose.heading);
        }
        const int inside = world_->goal_at(p.pose.position);
        int reward = 0;
        if (inside >= 0 && inside != p.inside) {
            const auto outcome = game::reward_for_entry(p.context, inside, task_.order);
            p.context = outcome.context;
            reward = outcome.reward;
            p.score += reward;
            result.entries.push_back(GoalEntry{static_cast<int>(i), inside, reward});
        }
        p.inside = inside;
        p.last_reward = reward;
        result.rewards[i] = reward;
    }
    ++t_;
    visible_ = expert::dropout_advance(task_.dropout, visible_, t_, task_.episode_length, dropout_rng_);
    return result;
}

EpisodeLog run_episode(Episode& episode, std::span<Policy* const> policies, bool record_poses,
                       const std::function<void(const Episode&, const StepResult&)>& observer) {
    const int n = episode.num_players();
    if (static_cast<int>(policies.size()) != n) throw ContractViolation("one policy per player required");
    for (int i = 0; i < n; ++i) policies[static_cast<std::size_t>(i)]->begin_episode(episode, i);
    EpisodeLog log;
    log.rewards.resize(static_cast<std::size_t>(n));
    std::vector<Command> commands(static_cast<std::size_t>(n));
    while (!episode.done()) {
        log.visibility.push_back(episode.expert_visible() ? 1 : 0);
        for (int i = 0; i < n; ++i) commands[static_cast<std::size_t>(i)] = policies[static_cast<std::size_t>(i)]->act(episode, i);
        const int t = episode.t();
        StepResult r = episode.step(commands);
        for (int i = 0; i < n; ++i) log.rewards[static_cast<std::size_t>(i)].push_back(r.rewards[static_cast<std::size_t>(i)]);
        for (const auto& e : r.entries) {
            log.entries.push_back(e);
            log.entry_steps.push_back(t);
        }
        if (record_poses) {
            std::vector<Pose> poses;
            for (int i = 0; i < n; ++i) poses.push_back(episode.player(i).pose);
            log.poses.push_back(std::move(poses));
        }
        for (int i = 0; i < n; ++i) policies[static_cast<std::size_t>(i)]->after_step(episode, i, r);
        if (observer) observer(episode, r);
    }
    for (int i = 0; i < n; ++i) log.scores.push_back(episode.player(i).score);
    return log;
}

}  // namespace goalcycle::env
