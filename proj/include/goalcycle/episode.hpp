// Task specification, episode stepping, and the policy driver loop.
#pragma once

#include "goalcycle/dropout.hpp"
#include "goalcycle/game.hpp"
#include "goalcycle/sensor.hpp"
#include "goalcycle/world.hpp"

#include <functional>
#include <memory>
#include <variant>
#include <vector>

namespace goalcycle::env {

enum class Action : std::uint8_t { Forward = 0, Backward = 1, RotateLeft = 2, RotateRight = 3, Noop = 4 };
inline constexpr int kNumActions = 5;
inline constexpr double kRotationStep = kPi / 12.0;

/// A pose command bypasses kinematics (recorded demonstrations, mirror stubs).
using Command = std::variant<Action, Pose>;

inline double base_speed(double world_size) { return world_size / 80.0; }

enum class Role : std::uint8_t { Agent = 0, Expert = 1 };

struct TaskSpec {
    WorldParams world;
    std::vector<Vec2> goal_centres;  // empty: placed from world.seed
    game::CyclicOrder order;
    expert::ExpertConfig expert;
    int expert_direction = 0;  // +1 demonstrates `order`, -1 its inverse, 0 drawn per episode
    expert::DropoutScheme dropout;
    int episode_length = 1800;
    int num_rays = 64;
    std::uint64_t episode_seed = 0;
};

void validate(const TaskSpec& task);

World build_world(const TaskSpec& task);

/// Flat world params + uniformly drawn order; goal layout from params.seed.
TaskSpec make_task(const WorldParams& params, Rng& rng);

struct PlayerState {
    Role role = Role::Agent;
    Pose pose;
    double speed = 1.0;
    int score = 0;
    int inside = -1;  // goal containing the avatar centre
    int last_reward = 0;
    game::RewardContext context;
};

struct GoalEntry {
    int player;
    int goal;
    int reward;
};

struct StepResult {
    std::vector<int> rewards;
    std::vector<GoalEntry> entries;
};

class Episode {
public:
    Episode(TaskSpec task, std::vector<Role> roster);
    /// Reuses a prebuilt world; it must equal build_world(task).
    Episode(TaskSpec task, std::shared_ptr<const World> world, std::vector<Role> roster);

    const TaskSpec& task() const { return task_; }
    const World& world() const { return *world_; }
    std::shared_ptr<const World> world_ptr() const { return world_; }
    int num_players() const { return static_cast<int>(players_.size()); }
    const PlayerState& player(int i) const { return players_[static_cast<std::size_t>(i)]; }
    int expert_index() const { return expert_; }  // -1 when absent
    /// Direction the expert demonstrates this episode.
    const game::CyclicOrder& expert_order() const { return expert_order_; }
    int t() const { return t_; }
    int length() const { return task_.episode_length; }
    bool done() const { return t_ >= task_.episode_length; }
    bool expert_visible() const { return visible_; }

    Observation observe(int player) const;

    /// Applies one command per player, resolves goal entries, then advances dropout.
    /// Throws ContractViolation once the episode is done.
    StepResult step(std::span<const Command> commands);

    /// Kinematic update for one avatar; exposed for tests.
    Pose move(const Pose& pose, Action action, double speed) const;

private:
    void init(std::vector<Role> roster);

    TaskSpec task_;
    std::shared_ptr<const World> world_;
    std::vector<PlayerState> players_;
    int expert_ = -1;
    game::CyclicOrder expert_order_;
    int t_ = 0;
    bool visible_ = true;
    Rng dropout_rng_;
};

class Policy {
public:
    virtual ~Policy() = default;
    virtual void begin_episode(const Episode& /*episode*/, int /*self*/) {}
    virtual Command act(const Episode& episode, int self) = 0;
    virtual void after_step(const Episode& /*episode*/, int /*self*/, const StepResult& /*result*/) {}
};

using PolicyFactory = std::function<std::unique_ptr<Policy>(std::uint64_t seed)>;

struct EpisodeLog {
    std::vector<int> scores;
    std::vector<std::vector<int>> rewards;  // per player, per step
    std::vector<GoalEntry> entries;
    std::vector<int> entry_steps;  // step index of each entry
    std::vector<std::uint8_t> visibility;  // e_t observed at each step
    std::vector<std::vector<Pose>> poses;  // per step, per player; filled when requested
};

/// Drives `episode` to completion. `observer` runs after every step.
EpisodeLog run_episode(Episode& episode, std::span<Policy* const> policies, bool record_poses = false,
                       const std::function<void(const Episode&, const StepResult&)>& observer = {});

}  // namespace goalcycle::env
