// Trajectory files: a text header, length-prefixed little-endian step records and a checksummed
// footer. Recording, loading, replay co-players and replay verification.
#pragma once

#include "goalcycle/episode.hpp"

#include <map>
#include <string>
#include <vector>

namespace goalcycle::harness {

inline constexpr int kTrajectoryVersion = 1;
inline constexpr int kPoseCommand = 5;  // action id recorded for a pose command

std::string task_to_json(const env::TaskSpec& task);
/// Throws ConfigError on missing or malformed fields.
env::TaskSpec task_from_json(const std::string& text);

struct PlayerInfo {
    env::Role role = env::Role::Agent;
    std::string policy;
};

struct StepRecord {
    int t = 0;
    bool visible = true;  // e_t when the commands were chosen
    std::vector<env::Pose> poses;  // after the step
    std::vector<int> actions;      // 0..4, or kPoseCommand
    std::vector<int> rewards;
    std::vector<env::GoalEntry> entries;
};

struct Trajectory {
    int version = kTrajectoryVersion;
    env::TaskSpec task;
    std::map<std::string, std::uint64_t> seeds;
    std::vector<PlayerInfo> players;
    std::vector<StepRecord> steps;
    std::vector<int> final_scores;
    bool complete = true;
};

std::string encode(const Trajectory& traj);
/// Throws IoError on a bad magic, version, truncated record or checksum mismatch.
Trajectory decode(const std::string& bytes);

/// Throws IoError naming the path.
void write_trajectory(const std::string& path, const Trajectory& traj);
Trajectory read_trajectory(const std::string& path);

/// Collects step records while an episode runs.
class TrajectoryRecorder {
public:
    TrajectoryRecorder(const env::Episode& episode, std::vector<PlayerInfo> players,
                       std::map<std::string, std::uint64_t> seeds);
    /// Call with the e_t and commands used for the step and the step's result.
    void record(const env::Episode& episode, bool visible, std::span<const env::Command> commands,
                const env::StepResult& result);
    Trajectory finish(const env::Episode& episode, bool complete);

private:
    Trajectory traj_;
};

/// Plays the episode to the end and records it. Writes `path` when non-empty.
Trajectory record_episode(const env::TaskSpec& task, std::span<const PlayerInfo> players,
                          std::span<env::Policy* const> policies, const std::map<std::string, std::uint64_t>& seeds,
                          const std::string& path = {});

/// Emits one recorded player's poses verbatim (kinematics bypassed), then Noop past the end.
class ReplayCoPlayer : public env::Policy {
public:
    ReplayCoPlayer(std::vector<env::Pose> poses) : poses_(std::move(poses)) {}
    env::Command act(const env::Episode& episode, int self) override;

private:
    std::vector<env::Pose> poses_;
};

/// The recorded expert (or the only player) as a co-player for `task`. Throws ReplayError when the
/// task's world or goal layout differs from the recording's.
std::unique_ptr<env::Policy> replay_expert(const Trajectory& traj, const env::TaskSpec& task);

struct ReplayCheck {
    bool ok = true;
    int first_mismatch = -1;  // step index, -1 when ok
    std::vector<int> scores;
};

/// Re-simulates the recorded task with every player's poses replayed and compares rewards,
/// goal entries, expert visibility and final scores.
ReplayCheck verify_replay(const Trajectory& traj);

}  // namespace goalcycle::harness
