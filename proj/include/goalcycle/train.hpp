// Advantage actor-critic training: actor streams, a bounded trajectory queue, the learner loop,
// periodic CT evaluation and checkpoints.
#pragma once

#include "goalcycle/adr.hpp"
#include "goalcycle/agent.hpp"
#include "goalcycle/ct_metric.hpp"

#include <condition_variable>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace goalcycle::train {

enum class Distribution { Fixed, ADR, DR };

/// Ablation switches. Tags follow the M/E/D/AL letters with '-' for a removed component,
/// plus an optional suffix for the task distribution: "MEDAL", "M----", "-EDAL", "MEDAL-ADR",
/// "MEDAL--DR", "MEDAL---".
struct Ablation {
    bool memory = true;
    bool expert = true;
    bool dropout = true;
    bool attention = true;
    Distribution distribution = Distribution::Fixed;

    std::string tag() const;
    /// Accepts ASCII '-' or the en dash. Throws ConfigError.
    static Ablation parse(const std::string& tag);
};

struct TrainConfig {
    agent::NetConfig net;
    agent::LossConfig loss;
    agent::AdamConfig adam;
    Ablation ablation;
    env::WorldParams world;  // Fixed distribution; the layout seed is drawn per episode
    expert::ExpertConfig expert;
    double dropout_p = 20.0 / 1800.0;
    int episode_length = 600;
    int num_envs = 16;
    int unroll = 64;
    long total_steps = 2'000'000;
    int attention_offset = 0;
    double target_noise = 0.0;
    bool normalise_advantages = true;
    long eval_every = 100'000;
    int eval_tasks = 16;
    int eval_episode_length = 600;
    bool eval_greedy = false;
    long log_every = 20'000;
    int actor_threads = 0;  // 0: single inline actor, bit-reproducible
    int queue_capacity = 4;
    std::uint64_t seed = 1;
    adr::ADRConfig adr;
};

/// Throws ConfigError.
void validate(const TrainConfig& cfg);

/// Settings that train a following agent on the size-16 empty 4-goal world within 2e6 steps
/// on one core: faster optimiser, smaller entropy bonus, a slower expert and rare dropout.
TrainConfig desk_scale_config(std::uint64_t seed = 1);

struct EvalPoint {
    long step = 0;
    double ct = 0.0;
    double E = 0.0;
    double A_full = 0.0;
    double A_solo = 0.0;
    double A_half = 0.0;
};

struct MetricsRow {
    long step = 0;
    long updates = 0;
    long episodes = 0;
    double agent_score = 0.0;   // mean over episodes finished since the previous row
    double expert_score = 0.0;
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
    double attention_loss = 0.0;
    double grad_norm = 0.0;
};

struct EpisodeStat {
    double agent_score = 0.0;
    double expert_score = 0.0;
    env::TaskSpec task;
    std::optional<adr::Pin> pinned;
};

/// Fixed-capacity FIFO; push blocks while full, pop blocks while empty. close() wakes everyone:
/// push then returns false and pop returns nullopt once drained.
template <typename T>
class BoundedQueue {
public:
    explicit BoundedQueue(std::size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {}

    bool push(T item) {
        std::unique_lock lock(m_);
        not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
        if (closed_) return false;
        items_.push_back(std::move(item));
        not_empty_.notify_one();
        return true;
    }

    std::optional<T> pop() {
        std::unique_lock lock(m_);
        not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
        if (items_.empty()) return std::nullopt;
        T item = std::move(items_.front());
        items_.pop_front();
        not_full_.notify_one();
        return item;
    }

    void close() {
        std::lock_guard lock(m_);
        closed_ = true;
        not_full_.notify_all();
        not_empty_.notify_all();
    }

    std::size_t size() const {
        std::lock_guard lock(m_);
        return items_.size();
    }
    std::size_t capacity() const { return capacity_; }

private:
    mutable std::mutex m_;
    std::condition_variable not_full_, not_empty_;
    std::deque<T> items_;
    std::size_t capacity_;
    bool closed_ = false;
};

/// Draws training tasks from the configured distribution. Thread-safe.
class TaskSource {
public:
    TaskSource(const TrainConfig& cfg, std::optional<adr::ADRState> adr_state);
    struct Draw {
        env::TaskSpec task;
        std::optional<adr::Pin> pinned;
    };
    Draw draw(Rng& rng);
    /// Pushes a pinned measurement; runs update_boundaries every `update_every` reports.
    void report(const EpisodeStat& stat, std::optional<double> ct);
    std::optional<adr::ADRState> adr_state() const;

private:
    env::TaskSpec base_task(Rng& rng) const;

    const TrainConfig cfg_;
    mutable std::mutex m_;
    std::optional<adr::ADRState> adr_;
    std::optional<adr::ADRState> dr_;
    long reports_ = 0;
};

/// A set of environment streams stepped in lockstep by one parameter snapshot.
class ActorGroup {
public:
    ActorGroup(const TrainConfig& cfg, std::uint64_t seed, TaskSource& source);
    ~ActorGroup();
    ActorGroup(ActorGroup&&) noexcept;

    /// Fills `out` with cfg.unroll steps per stream; finished episodes are appended to `finished`.
    void collect(const agent::Params<float>& params, agent::Unroll<float>& out, std::vector<EpisodeStat>& finished);

private:
    struct Stream;
    void start_episode(Stream& s);

    TrainConfig cfg_;
    TaskSource* source_;
    Rng rng_;
    std::vector<Stream> streams_;
    agent::Belief<float> belief_;
};

/// Fixed held-out tasks for periodic CT evaluation.
std::vector<env::TaskSpec> eval_tasks(const TrainConfig& cfg);

EvalPoint evaluate(const agent::Params<float>& params, std::span<const env::TaskSpec> tasks, std::uint64_t seed,
                   bool greedy, long step);

struct Checkpoint {
    std::string config_json;
    agent::Params<float> params;
    long step = 0;
    long adam_steps = 0;
    Eigen::VectorXf adam_m, adam_v;
    std::string rng_state;
    std::optional<adr::ADRState> adr;
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);
/// Throws IoError on unreadable or malformed files.
Checkpoint load_checkpoint(const std::string& path);

std::string config_to_json(const TrainConfig& cfg);

struct TrainHooks {
    std::function<void(const MetricsRow&)> on_log;
    std::function<void(const EvalPoint&)> on_eval;
    std::string checkpoint_path;  // written at the end and on divergence when non-empty
};

struct TrainResult {
    agent::Params<float> params;
    std::vector<MetricsRow> log;
    std::vector<EvalPoint> evals;
    std::optional<adr::ADRState> adr;
    long steps = 0;
    long updates = 0;
};

/// Runs the learner until cfg.total_steps environment steps (evaluation steps excluded).
/// Throws NumericError after writing a checkpoint when the parameters diverge.
TrainResult train(const TrainConfig& cfg, const TrainHooks& hooks = {}, const Checkpoint* resume = nullptr);

}  // namespace goalcycle::train
