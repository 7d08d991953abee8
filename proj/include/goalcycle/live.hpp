// Live play: a session that takes the expert's actions one tick at a time, its newline-delimited
// JSON protocol, and a loopback TCP server/client pair.
#pragma once

#include "goalcycle/trajectory.hpp"

#include <chrono>
#include <functional>
#include <optional>
#include <string>

namespace goalcycle::harness {

inline constexpr int kProtocolVersion = 1;

/// "forward", "backward", "left", "right", "noop" (or the ids 0..4). Throws std::invalid_argument.
env::Action parse_action(const std::string& s);
std::string action_name(env::Action a);

/// Agent (player 0) run by a policy, expert (player 1) driven by external actions.
class LiveSession {
public:
    LiveSession(const env::TaskSpec& task, const env::PolicyFactory& agent, std::string agent_name, std::uint64_t seed);

    std::string hello_message(double tick_rate) const;
    std::string state_message() const;
    /// Advances one tick; returns the score messages for goal entries followed by the new state.
    std::vector<std::string> tick(env::Action expert_action);
    std::string end_message(bool complete, const std::string& reason) const;

    bool done() const { return episode_.done(); }
    const env::Episode& episode() const { return episode_; }
    Trajectory finish(bool complete) { return recorder_.finish(episode_, complete); }

private:
    env::Episode episode_;
    std::unique_ptr<env::Policy> agent_;
    TrajectoryRecorder recorder_;
};

/// The local equivalent of a scripted client: ticks a session through `actions` (Noop once they run out).
Trajectory run_scripted(const env::TaskSpec& task, const env::PolicyFactory& agent, const std::string& agent_name,
                        std::uint64_t seed, std::span<const env::Action> actions);

struct ServeOptions {
    std::string host = "127.0.0.1";
    int port = 7878;  // 0 picks a free port
    double tick_rate = 15.0;
    bool lockstep = false;  // wait for one client action per tick instead of the clock
    int client_timeout_ms = 10000;
    std::string trajectory_path;
    std::function<void(int port)> on_listening;
};

struct ServeResult {
    bool complete = false;
    std::string reason;
    int ticks = 0;
    double seconds = 0.0;
    Trajectory trajectory;
};

/// Accepts one client, streams hello/state/score/end frames and applies its actions to the expert.
/// Unknown message types or versions end the session (reported in the end frame). On timeout or
/// disconnect the partial trajectory is written with complete = false. Throws IoError on socket setup.
ServeResult serve_live(LiveSession& session, const ServeOptions& options);

/// Blocking line client for tests and scripted play.
class LineClient {
public:
    LineClient(const std::string& host, int port);  // throws IoError
    ~LineClient();
    LineClient(const LineClient&) = delete;
    LineClient& operator=(const LineClient&) = delete;

    void send_line(const std::string& line);
    /// Next line, or nullopt on close or timeout.
    std::optional<std::string> read_line(int timeout_ms = 5000);
    void close();

private:
    int fd_ = -1;
    std::string buffer_;
};

}  // namespace goalcycle::harness
