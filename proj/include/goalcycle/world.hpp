// Procedural 2D world: square arena, pillar and slow-zone obstacles, terrain field, goals.
#pragma once

#include "goalcycle/core.hpp"

#include <optional>
#include <span>
#include <vector>

namespace goalcycle::env {

inline constexpr double kAvatarRadius = 0.5;
inline constexpr double kMinPillarDiameter = 0.75;
inline constexpr double kMaxPillarDiameter = 2.25;
inline constexpr double kSlowZoneWidth = 1.0;
inline constexpr double kSlowZoneFactor = 0.5;
inline constexpr int kNumColours = 8;
inline constexpr int kGoalPlacementBudget = 10000;
// Extra spacing between goal rims so an avatar can always pass between two goals.
inline constexpr double kGoalGap = 2.0 * kAvatarRadius + 0.6;

struct WorldParams {
    double world_size = 16.0;
    double v_obstacle_density = 0.0;  // pillars per unit^2
    double h_obstacle_density = 0.0;  // slow zones per unit^2
    double terrain_amplitude = 0.0;
    double terrain_frequency = 0.0;
    int num_goals = 4;
    std::uint64_t seed = 0;
};

/// Throws std::invalid_argument naming the first violated field.
void validate(const WorldParams& params);

double goal_diameter(double world_size);

/// Vertical obstacle: impassable and opaque.
struct Pillar {
    Vec2 centre;
    double radius;
};

/// Horizontal obstacle as an oriented rectangle; traversable at reduced speed, opaque to rays.
struct SlowZone {
    Vec2 centre;
    double angle;
    double half_length;
    double half_width;

    bool contains(const Vec2& p) const;
};

struct Goal {
    Vec2 centre;
    double radius;
    int colour;

    bool contains(const Vec2& p) const { return (p - centre).squaredNorm() < radius * radius; }
};

/// Seeded value-noise field; multiplier = 1 / (1 + amplitude * noise(f x, f y)), noise in [0, 1].
class Terrain {
public:
    Terrain() = default;
    Terrain(double amplitude, double frequency, std::uint64_t seed)
        : amplitude_(amplitude), frequency_(frequency), seed_(seed) {}

    double noise(const Vec2& p) const;
    double speed_multiplier(const Vec2& p) const;
    double amplitude() const { return amplitude_; }
    double frequency() const { return frequency_; }

private:
    double lattice(long ix, long iy) const;
    double amplitude_ = 0.0;
    double frequency_ = 0.0;
    std::uint64_t seed_ = 0;
};

struct World {
    double size = 16.0;
    std::vector<Pillar> pillars;
    std::vector<SlowZone> slow_zones;
    Terrain terrain;
    std::vector<Goal> goals;

    int goal_at(const Vec2& p) const;  // -1 when outside every goal
    bool in_bounds(const Vec2& p, double margin = 0.0) const {
        return p.x() >= margin && p.y() >= margin && p.x() <= size - margin && p.y() <= size - margin;
    }
    /// Free for an avatar centre: inside the arena and clear of every pillar.
    bool free_for_avatar(const Vec2& p) const;
    double max_view_range() const { return size * std::sqrt(2.0); }
};

/// Rejection-samples non-overlapping goal centres (rim gap kGoalGap).
/// Throws GenerationError after kGoalPlacementBudget draws.
std::vector<Vec2> place_goals(const WorldParams& params, Rng& rng);

/// Deterministic in `params`. Goals are placed by `place_goals` unless `goal_centres` is given.
/// Obstacles avoid goal discs; layouts that cut a goal off from the others are redrawn.
World generate_world(const WorldParams& params,
                     std::optional<std::span<const Vec2>> goal_centres = std::nullopt);

/// Uniform spawn position outside every goal and clear of obstacles, heading uniform.
struct Pose {
    Vec2 position = Vec2::Zero();
    double heading = 0.0;
    friend bool operator==(const Pose&, const Pose&) = default;
};

Pose sample_spawn(const World& world, Rng& rng);

}  // namespace goalcycle::env
