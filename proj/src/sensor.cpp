#include "goalcycle/sensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace goalcycle::env {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Smallest t > 0 with |o + t d - c| = r, for unit d; infinity if missed or origin inside.
double ray_disc(const Vec2& o, const Vec2& d, const Vec2& c, double r) {
    const Vec2 oc = o - c;
    const double cc = oc.squaredNorm() - r * r;
    if (cc < 0.0) return kInf;
    const double b = oc.dot(d);
    const double disc = b * b - cc;
    if (disc < 0.0) return kInf;
    const double t = -b - std::sqrt(disc);
    return t >= 0.0 ? t : kInf;
}

double ray_box(const Vec2& o, const Vec2& d, const SlowZone& z) {
    if (z.contains(o)) return kInf;
    const double c = std::cos(z.angle), s = std::sin(z.angle);
    const Vec2 rel = o - z.centre;
    const double lo[2] = {c * rel.x() + s * rel.y(), -s * rel.x() + c * rel.y()};
    const double ld[2] = {c * d.x() + s * d.y(), -s * d.x() + c * d.y()};
    const double half[2] = {z.half_length, z.half_width};
    double tmin = 0.0, tmax = kInf;
    for (int k = 0; k < 2; ++k) {
        if (std::abs(ld[k]) < 1e-15) {
            if (std::abs(lo[k]) > half[k]) return kInf;
            continue;
        }
        double t1 = (-half[k] - lo[k]) / ld[k];
        double t2 = (half[k] - lo[k]) / ld[k];
        if (t1 > t2) std::swap(t1, t2);
        tmin = std::max(tmin, t1);
        tmax = std::min(tmax, t2);
        if (tmin > tmax) return kInf;
    }
    return tmin;
}

}  // namespace

RawHit cast_ray(const World& world, const Vec2& origin, double angle, std::span<const Vec2> avatars) {
    const Vec2 d(std::cos(angle), std::sin(angle));
    RawHit best;
    auto consider = [&](double t, RayKind kind, int colour) {
        if (t < best.distance) best = RawHit{kind, t, colour};
    };
    for (const auto& p : world.pillars) consider(ray_disc(origin, d, p.centre, p.radius), RayKind::Pillar, kNoColour);
    for (const auto& z : world.slow_zones) consider(ray_box(origin, d, z), RayKind::SlowZone, kNoColour);
    for (const auto& g : world.goals) consider(ray_disc(origin, d, g.centre, g.radius), RayKind::Goal, g.colour);
    for (const auto& a : avatars) consider(ray_disc(origin, d, a, kAvatarRadius), RayKind::Avatar, kNoColour);
    return best;
}

Observation sense(const World& world, const Pose& self, std::span<const CoPlayer> others, bool expert_visible,
                  double prev_reward, int num_rays) {
    std::vector<Vec2> visible;
    visible.reserve(others.size());
    for (const auto& o : others) {
        if (o.is_expert && !expert_visible) continue;
        visible.push_back(o.pose.position);
    }
    Observation obs;
    obs.prev_reward = prev_reward;
    obs.rays.resize(static_cast<std::size_t>(num_rays));
    const double range = world.max_view_range();
    for (int k = 0; k < num_rays; ++k) {
        const double angle = self.heading + kTwoPi * k / num_rays;
        const RawHit hit = cast_ray(world, self.position, angle, visible);
        auto& ray = obs.rays[static_cast<std::size_t>(k)];
        if (hit.distance <= range) ray = RayHit{hit.kind, hit.distance / range, hit.colour};
    }
    double best = kInf;
    const double c = std::cos(self.heading), s = std::sin(self.heading);
    for (const auto& v : visible) {
        const Vec2 rel = v - self.position;
        const double dist = rel.norm();
        if (dist < best) {
            best = dist;
            obs.avatar_target = Vec2(c * rel.x() + s * rel.y(), -s * rel.x() + c * rel.y());
        }
    }
    return obs;
}

void encode_observation(const Observation& obs, Eigen::Ref<Eigen::VectorXd> out) {
    out.setZero();
    Eigen::Index i = 0;
    for (const auto& ray : obs.rays) {
        out[i + static_cast<int>(ray.kind)] = 1.0;
        out[i + kNumRayKinds] = ray.distance;
        if (ray.colour >= 0) out[i + kNumRayKinds + 1 + ray.colour] = 1.0;
        i += kRayFeatures;
    }
    out[i] = obs.prev_reward;
}

Eigen::Vector2d scale_avatar_target(const Vec2& egocentric, double world_size) {
    Eigen::Vector2d s = (egocentric / world_size).array() + 1.0;
    return (s / 2.0).cwiseMax(0.0).cwiseMin(1.0);
}

}  // namespace goalcycle::env
