#include "goalcycle/grid.hpp"
#include "goalcycle/world.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace goalcycle::env {

namespace {

constexpr double kSlowZoneHalfLength = 4.0;
constexpr int kObstacleLayoutAttempts = 16;
constexpr int kSpawnBudget = 10000;

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

double reach_cell(double world_size) { return goal_diameter(world_size) / 8.0; }

}  // namespace

void validate(const WorldParams& p) {
    if (!(p.world_size > 0.0)) throw std::invalid_argument("world_size must be positive");
    if (p.v_obstacle_density < 0.0) throw std::invalid_argument("v_obstacle_density must be >= 0");
    if (p.h_obstacle_density < 0.0) throw std::invalid_argument("h_obstacle_density must be >= 0");
    if (p.terrain_amplitude < 0.0) throw std::invalid_argument("terrain_amplitude must be >= 0");
    if (p.terrain_frequency < 0.0) throw std::invalid_argument("terrain_frequency must be >= 0");
    if (p.num_goals < 1 || p.num_goals > kNumColours) {
        throw std::invalid_argument("num_goals must be in [1, 8]");
    }
}

double goal_diameter(double world_size) { return world_size / 8.0 + 2.0; }

bool SlowZone::contains(const Vec2& p) const {
    const Vec2 d = p - centre;
    const double c = std::cos(angle), s = std::sin(angle);
    const double u = c * d.x() + s * d.y();
    const double v = -s * d.x() + c * d.y();
    return std::abs(u) <= half_length && std::abs(v) <= half_width;
}

double Terrain::lattice(long ix, long iy) const {
    const std::uint64_t h = derive_seed(seed_, (static_cast<std::uint64_t>(ix) * 0x9E3779B1ULL) ^
                                                   (static_cast<std::uint64_t>(iy) << 32));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double Terrain::noise(const Vec2& p) const {
    const double x = frequency_ * p.x();
    const double y = frequency_ * p.y();
    const double fx = std::floor(x), fy = std::floor(y);
    const long ix = static_cast<long>(fx), iy = static_cast<long>(fy);
    const double tx = smoothstep(x - fx), ty = smoothstep(y - fy);
    const double v00 = lattice(ix, iy), v10 = lattice(ix + 1, iy);
    const double v01 = lattice(ix, iy + 1), v11 = lattice(ix + 1, iy + 1);
    const double a = v00 + (v10 - v00) * tx;
    const double b = v01 + (v11 - v01) * tx;
    return a + (b - a) * ty;
}

double Terrain::speed_multiplier(const Vec2& p) const {
    if (amplitude_ == 0.0) return 1.0;
    return 1.0 / (1.0 + amplitude_ * noise(p));
}

int World::goal_at(const Vec2& p) const {
    for (std::size_t i = 0; i < goals.size(); ++i) {
        if (goals[i].contains(p)) return static_cast<int>(i);
    }
    return -1;
}

bool World::free_for_avatar(const Vec2& p) const {
    if (!in_bounds(p, kAvatarRadius)) return false;
    for (const auto& pl : pillars) {
        const double r = pl.radius + kAvatarRadius;
        if ((p - pl.centre).squaredNorm() < r * r) return false;
    }
    return true;
}

std::vector<Vec2> place_goals(const WorldParams& params, Rng& rng) {
    validate(params);
    const double w = params.world_size;
    const double r = goal_diameter(w) / 2.0;
    if (2.0 * r > w) throw GenerationError("goal placement: goal diameter exceeds world size");
    const double min_dist = 2.0 * r + kGoalGap;
    std::vector<Vec2> centres;
    int draws = 0;
    // Restart from scratch whenever a goal cannot be fitted after a few tries.
    while (static_cast<int>(centres.size()) < params.num_goals) {
        bool placed = false;
        for (int k = 0; k < 64 && draws < kGoalPlacementBudget; ++k, ++draws) {
            const Vec2 c(uniform(rng, r, w - r), uniform(rng, r, w - r));
            const bool ok = std::all_of(centres.begin(), centres.end(),
                                        [&](const Vec2& o) { return (o - c).norm() >= min_dist; });
            if (ok) {
                centres.push_back(c);
                placed = true;
                break;
            }
        }
        if (draws >= kGoalPlacementBudget) {
            throw GenerationError("goal placement: could not place " + std::to_string(params.num_goals) +
                                  " non-overlapping goals of diameter " + std::to_string(2.0 * r) +
                                  " in a world of size " + std::to_string(w) + " within " +
                                  std::to_string(kGoalPlacementBudget) + " attempts");
        }
        if (!placed) centres.clear();
    }
    return centres;
}

namespace {

bool goals_connected(const World& world) {
    if (world.goals.size() < 2) return true;
    const OccupancyGrid grid(world, reach_cell(world.size), 0.0);
    const auto comp = grid.components();
    int label = -2;
    for (const auto& g : world.goals) {
        const auto [ix, iy] = grid.cell_of(g.centre);
        const int l = grid.free(ix, iy) ? comp[static_cast<std::size_t>(grid.index(ix, iy))] : -1;
        if (l < 0) return false;
        if (label == -2) label = l;
        if (l != label) return false;
    }
    return true;
}

void populate_obstacles(World& world, const WorldParams& params, Rng& rng) {
    const double w = params.world_size;
    const double area = w * w;
    const int n_pillars = poisson(rng, params.v_obstacle_density * area);
    const int n_zones = poisson(rng, params.h_obstacle_density * area);
    for (int i = 0; i < n_pillars; ++i) {
        for (int attempt = 0; attempt < 20; ++attempt) {
            const double rad = uniform(rng, kMinPillarDiameter, kMaxPillarDiameter) / 2.0;
            const Vec2 c(uniform(rng, rad, w - rad), uniform(rng, rad, w - rad));
            const bool clear_of_goals = std::all_of(world.goals.begin(), world.goals.end(), [&](const Goal& g) {
                return (g.centre - c).norm() >= g.radius + rad + 2.0 * kAvatarRadius;
            });
            if (clear_of_goals) {
                world.pillars.push_back(Pillar{c, rad});
                break;
            }
        }
    }
    for (int i = 0; i < n_zones; ++i) {
        const double angle = uniform(rng, 0.0, kPi);
        const double hw = kSlowZoneWidth / 2.0;
        const double ex = std::abs(kSlowZoneHalfLength * std::cos(angle)) + std::abs(hw * std::sin(angle));
        const double ey = std::abs(kSlowZoneHalfLength * std::sin(angle)) + std::abs(hw * std::cos(angle));
        const double ux = uniform01(rng), uy = uniform01(rng);
        if (2.0 * ex > w || 2.0 * ey > w) continue;
        const Vec2 c(ex + ux * (w - 2.0 * ex), ey + uy * (w - 2.0 * ey));
        world.slow_zones.push_back(SlowZone{c, angle, kSlowZoneHalfLength, hw});
    }
}

}  // namespace

World generate_world(const WorldParams& params, std::optional<std::span<const Vec2>> goal_centres) {
    validate(params);
    World world;
    world.size = params.world_size;
    world.terrain = Terrain(params.terrain_amplitude, params.terrain_frequency, derive_seed(params.seed, 3));

    Rng goal_rng = make_rng(params.seed, 1);
    std::vector<Vec2> centres;
    if (goal_centres) {
        centres.assign(goal_centres->begin(), goal_centres->end());
    } else {
        centres = place_goals(params, goal_rng);
    }
    const double r = goal_diameter(params.world_size) / 2.0;
    // Colours: n of 8 without replacement.
    std::vector<int> colours(kNumColours);
    for (int i = 0; i < kNumColours; ++i) colours[static_cast<std::size_t>(i)] = i;
    for (int i = 0; i < static_cast<int>(centres.size()); ++i) {
        const int j = i + uniform_int(goal_rng, kNumColours - i);
        std::swap(colours[static_cast<std::size_t>(i)], colours[static_cast<std::size_t>(j)]);
        world.goals.push_back(Goal{centres[static_cast<std::size_t>(i)], r, colours[static_cast<std::size_t>(i)]});
    }

    Rng obstacle_rng = make_rng(params.seed, 2);
    for (int attempt = 0; attempt < kObstacleLayoutAttempts; ++attempt) {
        world.pillars.clear();
        world.slow_zones.clear();
        populate_obstacles(world, params, obstacle_rng);
        if (goals_connected(world)) return world;
    }
    throw GenerationError("world generation: obstacle layouts kept cutting goals off from each other (" +
                          std::to_string(kObstacleLayoutAttempts) + " layouts tried)");
}

Pose sample_spawn(const World& world, Rng& rng) {
    const OccupancyGrid grid(world, reach_cell(world.size), 0.0);
    const auto comp = grid.components();
    int goal_label = -1;
    if (!world.goals.empty()) {
        const auto [gx, gy] = grid.cell_of(world.goals.front().centre);
        if (grid.free(gx, gy)) goal_label = comp[static_cast<std::size_t>(grid.index(gx, gy))];
    }
    for (int i = 0; i < kSpawnBudget; ++i) {
        const Vec2 p(uniform(rng, kAvatarRadius, world.size - kAvatarRadius),
                     uniform(rng, kAvatarRadius, world.size - kAvatarRadius));
        const double heading = uniform(rng, 0.0, kTwoPi);
        if (!world.free_for_avatar(p)) continue;
        if (world.goal_at(p) >= 0) continue;
        const auto [ix, iy] = grid.cell_of(p);
        if (goal_label >= 0 && (!grid.free(ix, iy) || comp[static_cast<std::size_t>(grid.index(ix, iy))] != goal_label)) {
            continue;
        }
        return Pose{p, wrap_angle(heading)};
    }
    throw GenerationError("spawn: no free position outside goals within budget");
}

// ---------------------------------------------------------------------------

OccupancyGrid::OccupancyGrid(const World& world, double cell, double margin, std::span<const Keepout> keepouts)
    : cell_(cell) {
    width_ = std::max(1, static_cast<int>(std::ceil(world.size / cell)));
    height_ = width_;
    free_.assign(static_cast<std::size_t>(width_ * height_), 1);
    for (int iy = 0; iy < height_; ++iy) {
        for (int ix = 0; ix < width_; ++ix) {
            const Vec2 c = centre(ix, iy);
            bool ok = world.in_bounds(c, kAvatarRadius + margin);
            for (std::size_t k = 0; ok && k < world.pillars.size(); ++k) {
                const auto& pl = world.pillars[k];
                ok = (c - pl.centre).norm() >= pl.radius + kAvatarRadius + margin;
            }
            for (std::size_t k = 0; ok && k < keepouts.size(); ++k) {
                ok = (c - keepouts[k].centre).norm() >= keepouts[k].radius + margin;
            }
            free_[static_cast<std::size_t>(index(ix, iy))] = ok ? 1 : 0;
        }
    }
}

std::pair<int, int> OccupancyGrid::cell_of(const Vec2& p) const {
    const int ix = std::clamp(static_cast<int>(std::floor(p.x() / cell_)), 0, width_ - 1);
    const int iy = std::clamp(static_cast<int>(std::floor(p.y() / cell_)), 0, height_ - 1);
    return {ix, iy};
}

std::vector<int> OccupancyGrid::components() const {
    std::vector<int> label(free_.size(), -1);
    int next = 0;
    std::vector<int> stack;
    for (int start = 0; start < static_cast<int>(free_.size()); ++start) {
        if (!free_[static_cast<std::size_t>(start)] || label[static_cast<std::size_t>(start)] >= 0) continue;
        label[static_cast<std::size_t>(start)] = next;
        stack.push_back(start);
        while (!stack.empty()) {
            const int cur = stack.back();
            stack.pop_back();
            const int cx = cur % width_, cy = cur / width_;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const int nx = cx + dx, ny = cy + dy;
                    if (!free(nx, ny)) continue;
                    if (dx != 0 && dy != 0 && (!free(cx + dx, cy) || !free(cx, cy + dy))) continue;
                    const auto ni = static_cast<std::size_t>(index(nx, ny));
                    if (label[ni] >= 0) continue;
                    label[ni] = next;
                    stack.push_back(static_cast<int>(ni));
                }
            }
        }
        ++next;
    }
    return label;
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double len2 = ab.squaredNorm();
    double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return (a + t * ab - p).norm();
}

bool segment_clear(const World& world, const Vec2& a, const Vec2& b, double margin,
                   std::span<const Keepout> keepouts) {
    if (!world.in_bounds(a, kAvatarRadius) || !world.in_bounds(b, kAvatarRadius)) return false;
    for (const auto& pl : world.pillars) {
        if (point_segment_distance(pl.centre, a, b) < pl.radius + kAvatarRadius + margin) return false;
    }
    for (const auto& k : keepouts) {
        if (point_segment_distance(k.centre, a, b) < k.radius + margin) return false;
    }
    return true;
}

}  // namespace goalcycle::env
