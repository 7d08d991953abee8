// Cyclic-order game: rewarding orders, reward semantics, topology classes.
#pragma once

#include "goalcycle/core.hpp"

#include <optional>
#include <span>
#include <vector>

namespace goalcycle::game {

/// A directed Hamiltonian cycle over goals 0..n-1, stored rotated so it starts at goal 0.
/// The two rewarding orders of a game are an order and its inverse.
class CyclicOrder {
public:
    CyclicOrder() = default;
    /// Accepts any rotation of a permutation of 0..n-1; throws std::invalid_argument otherwise.
    explicit CyclicOrder(std::vector<int> sequence);

    int size() const { return static_cast<int>(seq_.size()); }
    const std::vector<int>& sequence() const { return seq_; }
    int at(int i) const { return seq_[static_cast<std::size_t>(i)]; }

    int successor(int goal) const;
    int predecessor(int goal) const;
    bool adjacent(int a, int b) const { return successor(a) == b || predecessor(a) == b; }

    CyclicOrder inverse() const;

    /// Same unordered cycle, either direction.
    bool same_cycle(const CyclicOrder& other) const;

    /// Canonical key of the unordered cycle: the lexicographically smaller of the
    /// two directions, each rotated to start at goal 0.
    std::vector<int> undirected_key() const;

    /// Does `entries` (length n) read as a rotation of this order?
    bool matches_rotation(std::span<const int> entries) const;

    friend bool operator==(const CyclicOrder&, const CyclicOrder&) = default;

private:
    void build_index();
    std::vector<int> seq_;
    std::vector<int> pos_;
};

/// Uniform over the (n-1)! directed cycles.
CyclicOrder sample_order(int n, Rng& rng);

/// All (n-1)! directed cycles in canonical form, lexicographic order.
std::vector<CyclicOrder> enumerate_orders(int n);

struct RewardContext {
    std::optional<int> prev;
    std::optional<int> last;
    friend bool operator==(const RewardContext&, const RewardContext&) = default;
};

struct EntryOutcome {
    int reward;
    RewardContext context;
};

/// Reward for entering `entered` given the player's context:
///   re-entering the last goal scores 0; the first goal scores +1; with no pinned
///   direction any neighbour of the last goal scores +1; with a pinned direction
///   only the successor along prev->last scores +1; anything else scores -1 and
///   resets the context as if `entered` were the first goal.
EntryOutcome reward_for_entry(const RewardContext& ctx, int entered, const CyclicOrder& order);

/// Rewards for a whole entry sequence starting from an empty context.
std::vector<int> rewards_for_sequence(std::span<const int> entries, const CyclicOrder& order);

/// Number of interior self-intersections of the closed polyline visiting
/// `positions` in `order`. Segments sharing a goal are not compared.
/// Throws ClassificationError on collinear overlap or a vertex touching a segment.
int classify_crossings(std::span<const Vec2> positions, const CyclicOrder& order);

/// Crossing counts achievable by n goals, found by exhaustive search over orders on
/// randomly drawn point sets (seeded, cached per n).
const std::vector<int>& achievable_crossings(int n);

/// Complete correct cycles in a player's entry stream: n consecutive +1 entries (zero-reward
/// re-entries skipped), counted without overlap. Returns +1 per cycle matching `order`, -1 per
/// cycle matching its inverse.
std::vector<int> complete_cycles(std::span<const int> goals, std::span<const int> rewards, const CyclicOrder& order);

struct GameSpec {
    int n = 4;
    CyclicOrder order;
    int crossings = 0;
};

struct TopologySample {
    std::vector<Vec2> positions;
    GameSpec game;
};

/// Draws goal positions + order by rejection until the crossing count hits a class drawn
/// uniformly from `achievable_crossings(n)` (or `target_class` when given).
/// `place_goals` is called once per attempt; throws SamplingError when the budget runs out.
template <typename PlaceGoals>
TopologySample sample_game_uniform_topology(PlaceGoals&& place_goals, int n, Rng& rng,
                                            int budget = 10000,
                                            std::optional<int> target_class = std::nullopt) {
    int target = 0;
    if (target_class) {
        target = *target_class;
    } else {
        const auto& classes = achievable_crossings(n);
        target = classes[static_cast<std::size_t>(uniform_int(rng, static_cast<int>(classes.size())))];
    }
    for (int attempt = 0; attempt < budget; ++attempt) {
        std::vector<Vec2> positions = place_goals(rng);
        CyclicOrder order = sample_order(n, rng);
        int crossings = 0;
        try {
            crossings = classify_crossings(positions, order);
        } catch (const ClassificationError&) {
            continue;
        }
        if (crossings == target) {
            return TopologySample{std::move(positions), GameSpec{n, std::move(order), crossings}};
        }
    }
    throw SamplingError("topology sampling: no placement with " + std::to_string(target) +
                        " crossings for n=" + std::to_string(n) + " within " +
                        std::to_string(budget) + " attempts");
}

}  // namespace goalcycle::game
