// Scripted co-players: grid path planner and the goal-cycling bot.
#pragma once

#include "goalcycle/episode.hpp"
#include "goalcycle/grid.hpp"

#include <optional>
#include <vector>

namespace goalcycle::expert {

/// Planner clearance beyond the avatar radius for grid cells and shortcut segments.
inline constexpr double kGridMargin = 0.25;
inline constexpr double kShortcutMargin = 0.1;
inline constexpr double kMaxSegment = 1.5;

/// Shortest obstacle-free polyline from `from` to `to` (first point is `from`).
/// Grid A* over cells of goal_radius/4, string-pulled, then split into segments of at most
/// kMaxSegment. Throws PlanningError when `to` is unreachable.
std::vector<Vec2> plan_path(const env::World& world, const Vec2& from, const Vec2& to,
                            std::span<const env::Keepout> keepouts = {});

double path_length(std::span<const Vec2> path);

/// Heading-error steering toward `waypoint`: rotate when off by more than half a turn step.
env::Action steer(const env::Pose& pose, const Vec2& waypoint);

/// Goal-cycling bot. By default it cycles the episode's demonstrated direction, starting
/// at the nearest goal and resynchronising after stray entries. With a fixed route it
/// visits the listed goals in turn, forever (subcycles, wrong demonstrations).
class ExpertBot : public env::Policy {
public:
    ExpertBot(std::uint64_t seed, double noise);
    ExpertBot(std::uint64_t seed, double noise, std::vector<int> route);

    void begin_episode(const env::Episode& episode, int self) override;
    env::Command act(const env::Episode& episode, int self) override;
    void after_step(const env::Episode& episode, int self, const env::StepResult& result) override;

    /// Switches the route mid-episode (wrong-halfway scripts, replay stubs).
    void set_route(std::vector<int> route, bool resync);
    int target() const { return route_.empty() || cursor_ < 0 ? -1 : route_[static_cast<std::size_t>(cursor_)]; }

private:
    void replan(const env::Episode& episode, const env::Pose& pose);
    void pick_start(const env::Episode& episode, const env::Pose& pose);

    Rng rng_;
    double noise_ = 0.0;
    bool fixed_ = false;
    bool resync_ = true;
    std::vector<int> route_;
    int cursor_ = 0;
    std::vector<Vec2> plan_;
    std::size_t next_ = 0;
    int planned_for_ = -1;
    bool dirty_ = true;
    Vec2 last_pos_ = Vec2::Zero();
    int stalled_ = 0;
};

}  // namespace goalcycle::expert
