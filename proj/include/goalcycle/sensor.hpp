// Planar ray-fan sensor and the avatar-position regression target.
#pragma once

#include "goalcycle/world.hpp"

#include <Eigen/Core>

#include <optional>
#include <span>
#include <vector>

namespace goalcycle::env {

enum class RayKind : std::uint8_t { None = 0, Pillar = 1, SlowZone = 2, Goal = 3, Avatar = 4 };
inline constexpr int kNumRayKinds = 5;
inline constexpr int kNoColour = -1;
/// kind one-hot, normalised distance, goal colour one-hot.
inline constexpr int kRayFeatures = kNumRayKinds + 1 + kNumColours;

struct RayHit {
    RayKind kind = RayKind::None;
    double distance = 1.0;  // normalised by the view range; 1 when nothing is hit
    int colour = kNoColour;
    friend bool operator==(const RayHit&, const RayHit&) = default;
};

struct Observation {
    std::vector<RayHit> rays;
    double prev_reward = 0.0;
    /// Egocentric (forward, left) offset of the nearest visible co-player. Training target only.
    std::optional<Vec2> avatar_target;
    friend bool operator==(const Observation&, const Observation&) = default;
};

struct CoPlayer {
    Pose pose;
    bool is_expert = false;
};

/// Rays are cast at heading + 2*pi*k/R. Objects containing the ray origin are skipped;
/// the arena wall is not reported. When `expert_visible` is false, expert co-players are
/// transparent and never become the avatar target.
Observation sense(const World& world, const Pose& self, std::span<const CoPlayer> others, bool expert_visible,
                  double prev_reward, int num_rays);

/// Nearest hit along one ray; `distance` in world units (infinity when nothing is hit).
struct RawHit {
    RayKind kind = RayKind::None;
    double distance = std::numeric_limits<double>::infinity();
    int colour = kNoColour;
};
RawHit cast_ray(const World& world, const Vec2& origin, double angle, std::span<const Vec2> avatars);

/// Flattened network features: kRayFeatures per ray followed by the previous reward.
void encode_observation(const Observation& obs, Eigen::Ref<Eigen::VectorXd> out);
inline int encoded_size(int num_rays) { return num_rays * kRayFeatures + 1; }

/// Egocentric offset scaled to [0,1]^2: (d / world_size + 1) / 2 per axis, clamped.
Eigen::Vector2d scale_avatar_target(const Vec2& egocentric, double world_size);

}  // namespace goalcycle::env
