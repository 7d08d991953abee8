// Experiment configuration: sectioned key-value files, presets and the resolved echo.
#pragma once

#include "goalcycle/train.hpp"

#include <string>

namespace goalcycle::harness {

struct ExperimentConfig {
    train::TrainConfig train;

    // Single-task runs (gen, eval-ct, record, serve, analyses).
    int crossings = -1;  // -1: any achievable class
    std::string dropout = "half";
    int episode_length = 1800;
    int expert_direction = 0;

    std::string agent = "follower";  // random|follower|replay|anti|random-entry|checkpoint
    std::string checkpoint;
    int tasks = 20;  // tasks per analysis / evaluation

    // Analysis knobs.
    int recall_trials = 4;
    int episodes_per_direction = 5;
    std::string sweep_axis = "world";
    std::string script = "correct";
    int probe_episodes = 200;
    int probe_steps = 2000;

    // Live play.
    int port = 7878;
    double tick_rate = 15.0;
    int client_timeout_ms = 10000;

    std::string out = "out";
    int threads = 0;
    std::uint64_t seed = 1;
    std::string preset = "none";  // none|desk
};

/// Parses sectioned key-value text. Unknown sections or keys and malformed values throw ConfigError.
/// `[run] preset = desk` is applied before any other key, so explicit keys override the preset.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Syncs derived fields (train.seed, actor threads) and validates; call after command-line overrides.
void finalize(ExperimentConfig& cfg);

/// Every key with its effective value, in schema order; parse_config(resolved_config(c)) == c.
std::string resolved_config(const ExperimentConfig& cfg);

/// The single task described by the [world], [game] and [episode] keys, drawn from `seed`.
env::TaskSpec task_from_config(const ExperimentConfig& cfg, std::uint64_t seed);

}  // namespace goalcycle::harness
