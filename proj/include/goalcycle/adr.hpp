// Automatic domain randomisation: uniform product distribution over task parameters whose
// boundaries move with boundary-pinned CT measurements.
#pragma once

#include "goalcycle/episode.hpp"

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace goalcycle::adr {

enum class Side { Low = 0, High = 1 };

struct ADRParam {
    std::string name;
    double hard_min = 0.0;
    double hard_max = 0.0;
    double lo = 0.0;  // phi_L
    double hi = 0.0;  // phi_H
    double step = 1.0;
    bool frozen_low = false;
    bool frozen_high = false;

    bool frozen(Side s) const { return s == Side::Low ? frozen_low : frozen_high; }
    double boundary(Side s) const { return s == Side::Low ? lo : hi; }
};

struct Pin {
    int index = 0;
    Side side = Side::Low;
    friend bool operator==(const Pin&, const Pin&) = default;
};

struct ADRConfig {
    double boundary_prob = 0.5;  // p_b
    double th_low = 0.75;
    double th_high = 0.85;
    int min_queue = 1;
    int update_every = 32;  // tasks between update_boundaries calls
};

struct ADRState {
    std::vector<ADRParam> params;
    std::vector<std::array<std::vector<double>, 2>> queues;  // per parameter, per side
    ADRConfig config;

    std::vector<double>& queue(Pin p) { return queues[static_cast<std::size_t>(p.index)][static_cast<std::size_t>(p.side)]; }
    const std::vector<double>& queue(Pin p) const {
        return queues[static_cast<std::size_t>(p.index)][static_cast<std::size_t>(p.side)];
    }
};

/// Throws std::invalid_argument on broken ordering, steps or thresholds.
void validate(const ADRState& state);

/// Builds a state from params; a side whose initial value equals its hard limit is frozen.
ADRState make_state(std::vector<ADRParam> params, ADRConfig config = {});

/// The seven-parameter reference configuration.
ADRState reference_config(ADRConfig config = {});

struct Sample {
    std::vector<double> lambda;
    std::optional<Pin> pinned;
};

Sample sample_task_params(const ADRState& state, Rng& rng);

/// Throws ContractViolation for an unknown parameter or a frozen side.
void push_metric(ADRState& state, Pin pinned, double ct);

struct UpdateReport {
    int acted = 0;  // sides whose queue was long enough to be evaluated
    int moved = 0;
    std::vector<Pin> acting;
};

/// Mean above th_high expands that side by one step, below th_low contracts it; hard limits
/// and lo <= hi are enforced. Evaluated queues are drained.
UpdateReport update_boundaries(ADRState& state);

struct TraceEntry {
    std::vector<std::pair<double, double>> bounds;
    UpdateReport report;
};

/// Closed loop: `tasks_per_update` samples per round; every pinned sample pushes
/// `metric(state, sample)`; then one update. Returns the bounds after every update.
std::vector<TraceEntry> simulate_adr(ADRState state, const std::function<double(const ADRState&, const Sample&)>& metric,
                                     int updates, int tasks_per_update, Rng& rng);

/// Writes a sampled parameter vector into a task (by parameter name; unknown names throw).
void apply_params(const ADRState& state, std::span<const double> lambda, env::TaskSpec& task);

/// Text round trip for checkpoints.
std::string serialize(const ADRState& state);
ADRState deserialize(const std::string& text);

}  // namespace goalcycle::adr
