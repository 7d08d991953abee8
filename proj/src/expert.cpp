#include "goalcycle/expert.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace goalcycle::expert {

using env::Action;
using env::Keepout;
using env::OccupancyGrid;
using env::World;

namespace {

constexpr double kKeepoutPad = 0.1;
constexpr int kSnapRadius = 6;
constexpr int kStallLimit = 3;

// Nearest free cell to p, searching a square window; lowest index wins ties.
std::optional<int> snap(const OccupancyGrid& grid, const Vec2& p) {
    const auto [cx, cy] = grid.cell_of(p);
    if (grid.free(cx, cy)) return grid.index(cx, cy);
    std::optional<int> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (int dy = -kSnapRadius; dy <= kSnapRadius; ++dy) {
        for (int dx = -kSnapRadius; dx <= kSnapRadius; ++dx) {
            const int x = cx + dx, y = cy + dy;
            if (!grid.free(x, y)) continue;
            const double d = (grid.centre(x, y) - p).squaredNorm();
            const int idx = grid.index(x, y);
            if (d < best_d || (d == best_d && best && idx < *best)) {
                best_d = d;
                best = idx;
            }
        }
    }
    return best;
}

std::vector<int> astar(const OccupancyGrid& grid, int start, int goal) {
    const int w = grid.width();
    const std::size_t n = static_cast<std::size_t>(w * grid.height());
    std::vector<double> g(n, std::numeric_limits<double>::infinity());
    std::vector<int> parent(n, -1);
    std::vector<std::uint8_t> closed(n, 0);
    const Vec2 goal_c = grid.centre(goal % w, goal / w);
    auto h = [&](int idx) { return (grid.centre(idx % w, idx / w) - goal_c).norm(); };
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
    g[static_cast<std::size_t>(start)] = 0.0;
    open.emplace(h(start), start);
    while (!open.empty()) {
        const int cur = open.top().second;
        open.pop();
        if (closed[static_cast<std::size_t>(cur)]) continue;
        closed[static_cast<std::size_t>(cur)] = 1;
        if (cur == goal) break;
        const int cx = cur % w, cy = cur / w;
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                if (dx == 0 && dy == 0) continue;
                const int nx = cx + dx, ny = cy + dy;
                if (!grid.free(nx, ny)) continue;
                if (dx != 0 && dy != 0 && (!grid.free(cx + dx, cy) || !grid.free(cx, cy + dy))) continue;
                const int ni = grid.index(nx, ny);
                const double cand = g[static_cast<std::size_t>(cur)] + grid.cell() * std::hypot(dx, dy);
                if (cand < g[static_cast<std::size_t>(ni)]) {
                    g[static_cast<std::size_t>(ni)] = cand;
                    parent[static_cast<std::size_t>(ni)] = cur;
                    open.emplace(cand + h(ni), ni);
                }
            }
        }
    }
    if (!closed[static_cast<std::size_t>(goal)]) return {};
    std::vector<int> cells;
    for (int c = goal; c != -1; c = parent[static_cast<std::size_t>(c)]) cells.push_back(c);
    std::reverse(cells.begin(), cells.end());
    return cells;
}

}  // namespace

std::vector<Vec2> plan_path(const World& world, const Vec2& from, const Vec2& to, std::span<const Keepout> keepouts) {
    if (segment_clear(world, from, to, kShortcutMargin, keepouts)) {
        std::vector<Vec2> direct{from};
        const double len = (to - from).norm();
        const int pieces = std::max(1, static_cast<int>(std::ceil(len / kMaxSegment)));
        for (int k = 1; k <= pieces; ++k) direct.push_back(from + (to - from) * (static_cast<double>(k) / pieces));
        return direct;
    }
    const double cell = env::goal_diameter(world.size) / 8.0;
    const OccupancyGrid grid(world, cell, kGridMargin, keepouts);
    const auto s = snap(grid, from);
    const auto t = snap(grid, to);
    if (!s || !t) throw PlanningError("plan_path: endpoint has no free cell nearby");
    const std::vector<int> cells = astar(grid, *s, *t);
    if (cells.empty()) throw PlanningError("plan_path: target unreachable");

    std::vector<Vec2> raw{from};
    for (int c : cells) raw.push_back(grid.centre(c % grid.width(), c / grid.width()));
    raw.push_back(to);

    std::vector<Vec2> pulled{raw.front()};
    std::size_t i = 0;
    while (i + 1 < raw.size()) {
        std::size_t j = raw.size() - 1;
        while (j > i + 1 && !segment_clear(world, raw[i], raw[j], kShortcutMargin, keepouts)) --j;
        pulled.push_back(raw[j]);
        i = j;
    }

    std::vector<Vec2> out{pulled.front()};
    for (std::size_t k = 1; k < pulled.size(); ++k) {
        const Vec2 a = pulled[k - 1], b = pulled[k];
        const int pieces = std::max(1, static_cast<int>(std::ceil((b - a).norm() / kMaxSegment)));
        for (int q = 1; q <= pieces; ++q) out.push_back(a + (b - a) * (static_cast<double>(q) / pieces));
    }
    return out;
}

double path_length(std::span<const Vec2> path) {
    double len = 0.0;
    for (std::size_t k = 1; k < path.size(); ++k) len += (path[k] - path[k - 1]).norm();
    return len;
}

Action steer(const env::Pose& pose, const Vec2& waypoint) {
    const Vec2 d = waypoint - pose.position;
    const double err = angle_diff(pose.heading, std::atan2(d.y(), d.x()));
    if (std::abs(err) > env::kRotationStep / 2.0) return err > 0.0 ? Action::RotateLeft : Action::RotateRight;
    return Action::Forward;
}

ExpertBot::ExpertBot(std::uint64_t seed, double noise) : rng_(seed), noise_(noise) {}

ExpertBot::ExpertBot(std::uint64_t seed, double noise, std::vector<int> route)
    : rng_(seed), noise_(noise), fixed_(true), resync_(false), route_(std::move(route)) {}

void ExpertBot::begin_episode(const env::Episode& episode, int self) {
    if (!fixed_) {
        route_ = episode.expert_order().sequence();
        resync_ = true;
    }
    plan_.clear();
    next_ = 0;
    planned_for_ = -1;
    dirty_ = true;
    stalled_ = 0;
    last_pos_ = episode.player(self).pose.position;
    pick_start(episode, episode.player(self).pose);
}

void ExpertBot::set_route(std::vector<int> route, bool resync) {
    fixed_ = true;
    resync_ = resync;
    route_ = std::move(route);
    cursor_ = -1;
    dirty_ = true;
}

void ExpertBot::pick_start(const env::Episode& episode, const env::Pose& pose) {
    const auto& goals = episode.world().goals;
    cursor_ = 0;
    if (route_.empty()) return;
    const int n = static_cast<int>(route_.size());
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < n; ++k) {
        const double d = (goals[static_cast<std::size_t>(route_[static_cast<std::size_t>(k)])].centre - pose.position).norm();
        if (d < best) {
            best = d;
            cursor_ = k;
        }
    }
}

void ExpertBot::replan(const env::Episode& episode, const env::Pose& pose) {
    const World& world = episode.world();
    const int tgt = target();
    std::vector<Keepout> keepouts;
    const int inside = world.goal_at(pose.position);
    for (int g = 0; g < static_cast<int>(world.goals.size()); ++g) {
        if (g == tgt || g == inside) continue;
        keepouts.push_back(Keepout{world.goals[static_cast<std::size_t>(g)].centre,
                                   world.goals[static_cast<std::size_t>(g)].radius + kKeepoutPad});
    }
    const Vec2 goal = world.goals[static_cast<std::size_t>(tgt)].centre;
    try {
        plan_ = plan_path(world, pose.position, goal, keepouts);
    } catch (const PlanningError&) {
        // Boxed in by keepouts (e.g. after noise); fall back to ignoring them.
        plan_ = plan_path(world, pose.position, goal);
    }
    next_ = 1;
    planned_for_ = tgt;
    dirty_ = false;
    stalled_ = 0;
}

env::Command ExpertBot::act(const env::Episode& episode, int self) {
    const env::Pose& pose = episode.player(self).pose;
    if (route_.empty()) return Action::Noop;
    if (cursor_ < 0) {
        // New route: continue after the last goal entered when it is on the route.
        const auto& last = episode.player(self).context.last;
        const auto it = last ? std::find(route_.begin(), route_.end(), *last) : route_.end();
        if (it != route_.end()) {
            cursor_ = static_cast<int>((it - route_.begin() + 1) % static_cast<long>(route_.size()));
        } else {
            pick_start(episode, pose);
        }
    }
    const double moved = (pose.position - last_pos_).norm();
    last_pos_ = pose.position;
    if (noise_ > 0.0 && bernoulli(rng_, noise_)) {
        dirty_ = true;
        return static_cast<Action>(uniform_int(rng_, env::kNumActions));
    }
    if (dirty_ || planned_for_ != target()) replan(episode, pose);
    const double reach = std::max(0.15, 0.75 * env::base_speed(episode.world().size) * episode.player(self).speed);
    while (next_ + 1 < plan_.size() && (plan_[next_] - pose.position).norm() < reach) ++next_;
    const Action a = steer(pose, plan_[std::min(next_, plan_.size() - 1)]);
    if (a == Action::Forward && moved < 1e-9) {
        if (++stalled_ >= kStallLimit) dirty_ = true;
    } else if (a == Action::Forward) {
        stalled_ = 0;
    }
    return a;
}

void ExpertBot::after_step(const env::Episode& /*episode*/, int self, const env::StepResult& result) {
    for (const auto& e : result.entries) {
        if (e.player != self) continue;
        const int n = static_cast<int>(route_.size());
        if (n == 0) continue;
        if (e.goal == target()) {
            cursor_ = (cursor_ + 1) % n;
        } else if (resync_) {
            const auto it = std::find(route_.begin(), route_.end(), e.goal);
            if (it != route_.end()) cursor_ = static_cast<int>((it - route_.begin() + 1) % n);
        }
        dirty_ = true;
    }
}

}  // namespace goalcycle::expert
