#include "goalcycle/game.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <stdexcept>

namespace goalcycle::game {

CyclicOrder::CyclicOrder(std::vector<int> sequence) : seq_(std::move(sequence)) {
    const int n = size();
    std::vector<int> sorted = seq_;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < n; ++i) {
        if (sorted[static_cast<std::size_t>(i)] != i) {
            throw std::invalid_argument("CyclicOrder: not a permutation of 0..n-1");
        }
    }
    if (n > 0) {
        const auto zero = std::find(seq_.begin(), seq_.end(), 0);
        std::rotate(seq_.begin(), zero, seq_.end());
    }
    build_index();
}

void CyclicOrder::build_index() {
    pos_.assign(seq_.size(), 0);
    for (std::size_t i = 0; i < seq_.size(); ++i) pos_[static_cast<std::size_t>(seq_[i])] = static_cast<int>(i);
}

int CyclicOrder::successor(int goal) const {
    const int n = size();
    return seq_[static_cast<std::size_t>((pos_[static_cast<std::size_t>(goal)] + 1) % n)];
}

int CyclicOrder::predecessor(int goal) const {
    const int n = size();
    return seq_[static_cast<std::size_t>((pos_[static_cast<std::size_t>(goal)] + n - 1) % n)];
}

CyclicOrder CyclicOrder::inverse() const {
    std::vector<int> rev(seq_.rbegin(), seq_.rend());
    return CyclicOrder(std::move(rev));
}

bool CyclicOrder::same_cycle(const CyclicOrder& other) const {
    return *this == other || *this == other.inverse();
}

std::vector<int> CyclicOrder::undirected_key() const {
    return std::min(seq_, inverse().seq_);
}

bool CyclicOrder::matches_rotation(std::span<const int> entries) const {
    const int n = size();
    if (static_cast<int>(entries.size()) != n || n == 0) return false;
    int g = entries[0];
    if (g < 0 || g >= n) return false;
    for (int i = 1; i < n; ++i) {
        g = successor(g);
        if (entries[static_cast<std::size_t>(i)] != g) return false;
    }
    return true;
}

CyclicOrder sample_order(int n, Rng& rng) {
    std::vector<int> seq(static_cast<std::size_t>(n));
    std::iota(seq.begin(), seq.end(), 0);
    // Fisher-Yates over positions 1..n-1; goal 0 stays first.
    for (int i = n - 1; i > 1; --i) {
        const int j = 1 + uniform_int(rng, i);
        std::swap(seq[static_cast<std::size_t>(i)], seq[static_cast<std::size_t>(j)]);
    }
    return CyclicOrder(std::move(seq));
}

std::vector<CyclicOrder> enumerate_orders(int n) {
    std::vector<int> tail(static_cast<std::size_t>(std::max(0, n - 1)));
    std::iota(tail.begin(), tail.end(), 1);
    std::vector<CyclicOrder> out;
    do {
        std::vector<int> seq{0};
        seq.insert(seq.end(), tail.begin(), tail.end());
        out.emplace_back(std::move(seq));
    } while (std::next_permutation(tail.begin(), tail.end()));
    return out;
}

EntryOutcome reward_for_entry(const RewardContext& ctx, int entered, const CyclicOrder& order) {
    if (ctx.last && *ctx.last == entered) return {0, ctx};
    if (!ctx.last) return {+1, RewardContext{std::nullopt, entered}};
    const int last = *ctx.last;
    if (!ctx.prev) {
        if (order.adjacent(last, entered)) return {+1, RewardContext{last, entered}};
        return {-1, RewardContext{std::nullopt, entered}};
    }
    // Direction pinned by prev -> last.
    const int expected = order.successor(*ctx.prev) == last ? order.successor(last)
                                                             : order.predecessor(last);
    if (entered == expected) return {+1, RewardContext{last, entered}};
    return {-1, RewardContext{std::nullopt, entered}};
}

std::vector<int> rewards_for_sequence(std::span<const int> entries, const CyclicOrder& order) {
    std::vector<int> out;
    out.reserve(entries.size());
    RewardContext ctx;
    for (int e : entries) {
        const auto r = reward_for_entry(ctx, e, order);
        out.push_back(r.reward);
        ctx = r.context;
    }
    return out;
}

namespace {

int orientation(const Vec2& a, const Vec2& b, const Vec2& c, double tol) {
    const double v = (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
    if (v > tol) return 1;
    if (v < -tol) return -1;
    return 0;
}

bool within_box(const Vec2& a, const Vec2& b, const Vec2& p) {
    return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) &&
           std::min(a.y(), b.y()) <= p.y() && p.y() <= std::max(a.y(), b.y());
}

}  // namespace

int classify_crossings(std::span<const Vec2> positions, const CyclicOrder& order) {
    const int n = order.size();
    if (static_cast<int>(positions.size()) != n) {
        throw std::invalid_argument("classify_crossings: position count does not match order");
    }
    double scale = 1.0;
    for (const auto& p : positions) scale = std::max(scale, p.cwiseAbs().maxCoeff());
    const double tol = 1e-12 * scale * scale;

    auto seg = [&](int i) {
        const Vec2& a = positions[static_cast<std::size_t>(order.at(i))];
        const Vec2& b = positions[static_cast<std::size_t>(order.at((i + 1) % n))];
        return std::pair<const Vec2&, const Vec2&>(a, b);
    };
    int crossings = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (j == i + 1 || (i == 0 && j == n - 1)) continue;  // share a goal
            const auto [a, b] = seg(i);
            const auto [c, d] = seg(j);
            const int o1 = orientation(a, b, c, tol);
            const int o2 = orientation(a, b, d, tol);
            const int o3 = orientation(c, d, a, tol);
            const int o4 = orientation(c, d, b, tol);
            if (o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0) {
                if (o1 != o2 && o3 != o4) ++crossings;
                continue;
            }
            const bool touches = (o1 == 0 && within_box(a, b, c)) || (o2 == 0 && within_box(a, b, d)) ||
                                 (o3 == 0 && within_box(c, d, a)) || (o4 == 0 && within_box(c, d, b));
            if (touches) {
                throw ClassificationError("classify_crossings: degenerate (collinear or touching) segments " +
                                          std::to_string(i) + " and " + std::to_string(j));
            }
        }
    }
    return crossings;
}

const std::vector<int>& achievable_crossings(int n) {
    static std::mutex mutex;
    static std::map<int, std::vector<int>> cache;
    std::lock_guard lock(mutex);
    if (auto it = cache.find(n); it != cache.end()) return it->second;

    std::set<int> found;
    std::vector<CyclicOrder> orders;
    for (auto& o : enumerate_orders(n)) {
        if (o.sequence() == o.undirected_key()) orders.push_back(std::move(o));
    }
    Rng rng = make_rng(0xC0FFEEULL, static_cast<std::uint64_t>(n));
    const int sets = n <= 6 ? 600 : 150;
    std::vector<Vec2> pts(static_cast<std::size_t>(n));
    for (int s = 0; s < sets; ++s) {
        const bool convex = (s % 2) == 1;
        for (auto& p : pts) {
            if (convex) {
                const double a = uniform(rng, 0.0, kTwoPi);
                p = Vec2(std::cos(a), std::sin(a));
            } else {
                p = Vec2(uniform01(rng), uniform01(rng));
            }
        }
        for (const auto& o : orders) {
            try {
                found.insert(classify_crossings(pts, o));
            } catch (const ClassificationError&) {
            }
        }
    }
    return cache[n] = std::vector<int>(found.begin(), found.end());
}

std::vector<int> complete_cycles(std::span<const int> goals, std::span<const int> rewards, const CyclicOrder& order) {
    if (goals.size() != rewards.size()) throw std::invalid_argument("complete_cycles: length mismatch");
    const auto n = static_cast<std::size_t>(order.size());
    const CyclicOrder inv = order.inverse();
    std::vector<int> run, out;
    for (std::size_t k = 0; k < goals.size(); ++k) {
        if (rewards[k] == 0) continue;
        if (rewards[k] < 0) {
            run.clear();
            continue;
        }
        run.push_back(goals[k]);
        if (run.size() == n) {
            if (order.matches_rotation(run)) {
                out.push_back(1);
            } else if (inv.matches_rotation(run)) {
                out.push_back(-1);
            }
            run.clear();
        }
    }
    return out;
}

}  // namespace goalcycle::game
