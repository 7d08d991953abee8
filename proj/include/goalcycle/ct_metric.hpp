// Cultural-transmission metric, normalised score, and calibration stub agents.
#pragma once

#include "goalcycle/expert.hpp"

#include <memory>
#include <optional>

namespace goalcycle::ct {

struct CTMeasurement {
    double E = 0.0;
    double A_full = 0.0;
    double A_solo = 0.0;
    double A_half = 0.0;
    double ct = 0.0;
};

/// 0.5 (A_full - A_solo) / E + 0.5 (A_half - A_solo) / E. Throws UndefinedMetric when E == 0.
double ct(double E, double A_full, double A_solo, double A_half);

/// agent / expert. Throws UndefinedMetric when expert <= 0.
double normalised_score(double agent_full_episode, double expert_half_episode);

/// Expert solo plus agent episodes under No, Full and Half dropout, all on one world,
/// one expert direction and one spawn set. The agent is rebuilt from `agent` per episode.
CTMeasurement run_ct_eval(const env::PolicyFactory& agent, const env::TaskSpec& task, std::uint64_t seed);

/// Uniform mean of per-task values.
double mean_ct(std::span<const CTMeasurement> measurements);

struct NormalisedResult {
    int agent_score = 0;
    int expert_half_score = 0;
    double score = 0.0;
};

/// Expert visible for the first half of the episode, then gone; agent score over the whole
/// episode divided by the expert's first-half score.
NormalisedResult run_normalised(const env::PolicyFactory& agent, const env::TaskSpec& task, std::uint64_t seed);

// Calibration stubs ---------------------------------------------------------

class RandomPolicy : public env::Policy {
public:
    explicit RandomPolicy(std::uint64_t seed) : rng_(seed) {}
    env::Command act(const env::Episode& episode, int self) override;

private:
    Rng rng_;
};

/// Copies the expert's pose one step late while it is visible, random actions otherwise.
class FollowerPolicy : public env::Policy {
public:
    explicit FollowerPolicy(std::uint64_t seed) : rng_(seed) {}
    env::Command act(const env::Episode& episode, int self) override;

private:
    Rng rng_;
};

/// Follows like FollowerPolicy and, once alone, navigates the last n goals it entered, in
/// entry order (so it replays wrong demonstrations too).
class ReplayPolicy : public env::Policy {
public:
    explicit ReplayPolicy(std::uint64_t seed);
    void begin_episode(const env::Episode& episode, int self) override;
    env::Command act(const env::Episode& episode, int self) override;
    void after_step(const env::Episode& episode, int self, const env::StepResult& result) override;

private:
    FollowerPolicy follow_;
    expert::ExpertBot bot_;
    std::vector<int> entered_;
    bool replaying_ = false;
    Rng rng_;
};

/// Watches the expert for one full cycle, then cycles the opposite direction. Idle until then.
class AntiFollowerPolicy : public env::Policy {
public:
    explicit AntiFollowerPolicy(std::uint64_t seed) : bot_(seed, 0.0, {}) {}
    void begin_episode(const env::Episode& episode, int self) override;
    env::Command act(const env::Episode& episode, int self) override;
    void after_step(const env::Episode& episode, int self, const env::StepResult& result) override;

private:
    expert::ExpertBot bot_;
    std::vector<int> seen_;
    bool active_ = false;
};

/// Knows the rewarding cycle and picks its direction by coin flip at the start of every cycle.
class RandomEntryPolicy : public env::Policy {
public:
    explicit RandomEntryPolicy(std::uint64_t seed) : rng_(derive_seed(seed, 1)), bot_(seed, 0.0, {}) {}
    void begin_episode(const env::Episode& episode, int self) override;
    env::Command act(const env::Episode& episode, int self) override;
    void after_step(const env::Episode& episode, int self, const env::StepResult& result) override;

private:
    void flip(const env::Episode& episode);
    Rng rng_;
    expert::ExpertBot bot_;
    int streak_ = 0;
};

template <typename P>
env::PolicyFactory factory_of() {
    return [](std::uint64_t seed) -> std::unique_ptr<env::Policy> { return std::make_unique<P>(seed); };
}

/// Default-noise scripted expert for the expert slot.
std::unique_ptr<env::Policy> make_expert(const env::TaskSpec& task, std::uint64_t seed);

}  // namespace goalcycle::ct
