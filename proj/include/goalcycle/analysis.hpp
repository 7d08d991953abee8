// Behavioural and neural analyses of trained (or stub) agents.
#pragma once

#include "goalcycle/adr.hpp"
#include "goalcycle/agent.hpp"
#include "goalcycle/ct_metric.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace goalcycle::analysis {

// Recall ---------------------------------------------------------------------

struct RecallReport {
    int trial_length = 900;
    std::vector<int> trial_scores;
    int expert_score = 0;  // expert reward during trial 1
};

/// One episode of n_trials * trial_length steps with the expert visible in trial 1 only.
/// Nothing is reset at trial boundaries. Throws std::invalid_argument when n_trials < 2.
RecallReport recall_trials(const env::PolicyFactory& agent, const env::TaskSpec& task, int n_trials, std::uint64_t seed,
                           int trial_length = 900);

// Two-option preference ------------------------------------------------------------

struct PreferenceReport {
    int matched = 0;  // complete correct cycles in the demonstrated direction
    int total = 0;    // complete correct cycles in either direction
    /// matched / total; empty when no cycle was completed (undefined).
    std::optional<double> fraction() const {
        if (total == 0) return std::nullopt;
        return static_cast<double>(matched) / total;
    }
};

/// Every task is played with the expert demonstrating sigma and then sigma^-1,
/// `episodes_per_direction` times each, under `dropout` (Half by default).
PreferenceReport two_option_preference(const env::PolicyFactory& agent, std::span<const env::TaskSpec> tasks,
                                       int episodes_per_direction, std::uint64_t seed,
                                       expert::DropoutScheme dropout = expert::DropoutScheme::half());

// Generalisation sweeps ------------------------------------------------------------

enum class Axis { World, Game, Expert };
Axis parse_axis(const std::string& s);
std::string to_string(Axis a);

/// One grid cell: named overrides. Names: world_size, v_obstacle_density, h_obstacle_density,
/// terrain_amplitude, terrain_frequency (world); num_goals, crossings (game);
/// bot_speed (units), expert_speed (multiplier), expert_noise (expert).
struct SweepCell {
    std::vector<std::pair<std::string, double>> values;
};

/// Inclusive training range per parameter name, e.g. the final ADR boundaries.
using Ranges = std::map<std::string, std::pair<double, double>>;

/// Ranges from a (final) ADR state, keyed by parameter name.
Ranges ranges_from_adr(const adr::ADRState& state);

/// True when v lies outside [lo, hi].
bool out_of_distribution(double v, std::pair<double, double> range);

/// `n_inside` evenly spaced values over [lo, hi] plus lo - 20% and hi + 20% of the range
/// endpoints (|lo| * 0.2 and |hi| * 0.2 beyond them; a zero endpoint extends by 20% of the width).
std::vector<double> sweep_values(double lo, double hi, int n_inside);

struct SweepRow {
    SweepCell cell;
    bool ood = false;
    double mean_score = 0.0;  // mean normalised score over the cell's valid tasks
    int tasks = 0;            // tasks with a defined normalised score
    int undefined = 0;        // tasks whose expert scored nothing in the first half
};

/// Normalised score per cell: expert present for the first half of a 2 * half_length episode,
/// then gone. The base task supplies everything the cell does not override.
std::vector<SweepRow> generalisation_sweep(const env::PolicyFactory& agent, Axis axis, std::span<const SweepCell> grid,
                                           const env::TaskSpec& base, const Ranges& ranges, int tasks_per_cell,
                                           std::uint64_t seed, int half_length = 900);

/// Applies one override to a task; game overrides re-sample goal layout and order with the
/// requested crossing class. Throws std::invalid_argument for unknown names.
void apply_override(env::TaskSpec& task, const std::string& name, double value, Rng& rng);

// Belief datasets and probing -------------------------------------------------------

struct BeliefDataset {
    Eigen::MatrixXd beliefs;         // samples x neurons
    std::vector<int> expert_visible;  // label per sample
    std::vector<int> inside_goal;     // agent inside any goal
    std::vector<int> episode;         // episode index per sample
};

/// Runs a trained agent with the expert under `dropout` and records the belief after every act.
BeliefDataset collect_beliefs(std::shared_ptr<const agent::Params<float>> params, std::span<const env::TaskSpec> tasks,
                              expert::DropoutScheme dropout, std::uint64_t seed);

struct ProbeConfig {
    int steps = 2000;
    double lr = 0.05;
    double train_fraction = 0.7;
    double threshold = 0.05;
    std::uint64_t seed = 1;
};

struct ProbeResult {
    Eigen::VectorXd attention;  // softmax weights over neurons
    double test_accuracy = 0.0;
    std::vector<int> social;  // neurons with attention > threshold
    double social_mass = 0.0;
    double acc_randomise_social = 0.0;
    double acc_randomise_complement = 0.0;
    double acc_randomise_all = 0.0;
};

/// Attention-weighted linear classifier of `labels` from standardised beliefs; seeded disjoint
/// train/test split, test-set accuracies. Interventions replace neurons with normal draws matching
/// their training-set mean and standard deviation. Throws ProbingError on a single-class dataset.
ProbeResult probe_social_neurons(const Eigen::MatrixXd& beliefs, std::span<const int> labels, const ProbeConfig& cfg = {});

struct NeuronScore {
    int neuron = 0;
    double correlation = 0.0;  // point-biserial with the inside-goal indicator
    double variance = 0.0;
    double mean_inside = 0.0;
    double mean_outside = 0.0;
};

/// Neurons ranked by |correlation| (descending); the first `top_k` (all when top_k <= 0).
std::vector<NeuronScore> goal_neuron_rank(const Eigen::MatrixXd& beliefs, std::span<const int> inside_goal, int top_k = 0);

// Trajectory comparison -------------------------------------------------------------

enum class Script { Correct, WrongHalfway, DropoutHalfway, WrongThenDropout, Absent };
Script parse_script(const std::string& s);
std::string to_string(Script s);

/// A Hamiltonian route over the goals that is neither sigma nor sigma^-1 (for n >= 4).
std::vector<int> wrong_route(const game::CyclicOrder& order);

struct TrajectoryComparison {
    Script script = Script::Correct;
    std::vector<env::Pose> agent;
    std::vector<env::Pose> expert;  // empty when the expert is absent
    std::vector<std::uint8_t> visibility;
    std::vector<env::GoalEntry> entries;
    std::vector<int> entry_steps;
    std::vector<int> scores;
    game::CyclicOrder demonstrated;

    /// Goal sequence entered by `player` within [from, to).
    std::vector<int> goals_entered(int player, int from, int to) const;
};

/// Scripts: correct demonstration; correct then a wrong route from the halfway point; correct then
/// dropout at halfway; wrong route then dropout at halfway; no expert at all.
TrajectoryComparison trajectory_compare(const env::TaskSpec& task, const env::PolicyFactory& agent, Script script,
                                        std::uint64_t seed);

}  // namespace goalcycle::analysis
