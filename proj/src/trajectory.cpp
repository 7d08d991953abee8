#include "goalcycle/trajectory.hpp"

#include <json.hpp>
#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace goalcycle::harness {

using nlohmann::json;

namespace {

constexpr const char* kMagic = "GCTRAJ";
constexpr std::uint8_t kStepRecord = 1;
constexpr std::uint8_t kFooterRecord = 2;

std::string role_name(env::Role r) { return r == env::Role::Expert ? "expert" : "agent"; }

env::Role parse_role(const std::string& s) {
    if (s == "expert") return env::Role::Expert;
    if (s == "agent") return env::Role::Agent;
    throw IoError("trajectory: unknown role '" + s + "'");
}

class Writer {
public:
    void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
    void i8(int v) {
        if (v < -128 || v > 127) throw IoError("trajectory: value out of range for a byte field");
        u8(static_cast<std::uint8_t>(static_cast<std::int8_t>(v)));
    }
    void u32(std::uint32_t v) {
        for (int k = 0; k < 4; ++k) u8(static_cast<std::uint8_t>(v >> (8 * k)));
    }
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void f64(double v) {
        const auto bits = std::bit_cast<std::uint64_t>(v);
        for (int k = 0; k < 8; ++k) u8(static_cast<std::uint8_t>(bits >> (8 * k)));
    }
    std::string& str() { return out_; }

private:
    std::string out_;
};

class Reader {
public:
    Reader(const std::string& s, std::size_t pos, std::size_t end) : s_(s), pos_(pos), end_(end) {}
    std::uint8_t u8() {
        if (pos_ >= end_) throw IoError("trajectory: truncated record");
        return static_cast<std::uint8_t>(s_[pos_++]);
    }
    int i8() { return static_cast<std::int8_t>(u8()); }
    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(u8()) << (8 * k);
        return v;
    }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    double f64() {
        std::uint64_t v = 0;
        for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(u8()) << (8 * k);
        return std::bit_cast<double>(v);
    }
    bool at_end() const { return pos_ == end_; }

private:
    const std::string& s_;
    std::size_t pos_, end_;
};

std::uint32_t crc(const std::string& bytes, std::size_t n) {
    return static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(n)));
}

bool same_world(const env::TaskSpec& a, const env::TaskSpec& b) {
    const auto& x = a.world;
    const auto& y = b.world;
    return x.world_size == y.world_size && x.v_obstacle_density == y.v_obstacle_density &&
           x.h_obstacle_density == y.h_obstacle_density && x.terrain_amplitude == y.terrain_amplitude &&
           x.terrain_frequency == y.terrain_frequency && x.num_goals == y.num_goals && x.seed == y.seed &&
           a.goal_centres == b.goal_centres;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string task_to_json(const env::TaskSpec& t) {
    json j;
    j["world"] = {{"world_size", t.world.world_size},
                  {"v_obstacle_density", t.world.v_obstacle_density},
                  {"h_obstacle_density", t.world.h_obstacle_density},
                  {"terrain_amplitude", t.world.terrain_amplitude},
                  {"terrain_frequency", t.world.terrain_frequency},
                  {"num_goals", t.world.num_goals},
                  {"seed", t.world.seed}};
    json centres = json::array();
    for (const auto& c : t.goal_centres) centres.push_back({c.x(), c.y()});
    j["goal_centres"] = centres;
    j["order"] = t.order.sequence();
    j["expert"] = {{"speed", t.expert.speed}, {"noise", t.expert.noise}};
    j["expert_direction"] = t.expert_direction;
    j["dropout"] = expert::to_string(t.dropout);
    j["episode_length"] = t.episode_length;
    j["num_rays"] = t.num_rays;
    j["episode_seed"] = t.episode_seed;
    return j.dump();
}

env::TaskSpec task_from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        env::TaskSpec t;
        const auto& w = j.at("world");
        t.world.world_size = w.at("world_size").get<double>();
        t.world.v_obstacle_density = w.at("v_obstacle_density").get<double>();
        t.world.h_obstacle_density = w.at("h_obstacle_density").get<double>();
        t.world.terrain_amplitude = w.at("terrain_amplitude").get<double>();
        t.world.terrain_frequency = w.at("terrain_frequency").get<double>();
        t.world.num_goals = w.at("num_goals").get<int>();
        t.world.seed = w.at("seed").get<std::uint64_t>();
        for (const auto& c : j.at("goal_centres")) t.goal_centres.emplace_back(c.at(0).get<double>(), c.at(1).get<double>());
        t.order = game::CyclicOrder(j.at("order").get<std::vector<int>>());
        t.expert.speed = j.at("expert").at("speed").get<double>();
        t.expert.noise = j.at("expert").at("noise").get<double>();
        t.expert_direction = j.at("expert_direction").get<int>();
        t.dropout = expert::parse_dropout(j.at("dropout").get<std::string>());
        t.episode_length = j.at("episode_length").get<int>();
        t.num_rays = j.at("num_rays").get<int>();
        t.episode_seed = j.at("episode_seed").get<std::uint64_t>();
        env::validate(t);
        return t;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("task: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("task: ") + e.what());
    }
}

// ---------------------------------------------------------------------------

std::string encode(const Trajectory& traj) {
    json h;
    h["format"] = "goalcycle-trajectory";
    h["version"] = traj.version;
    h["task"] = json::parse(task_to_json(traj.task));
    h["seeds"] = traj.seeds;
    json players = json::array();
    for (const auto& p : traj.players) players.push_back({{"role", role_name(p.role)}, {"policy", p.policy}});
    h["players"] = players;

    Writer w;
    w.str() = std::string(kMagic) + " " + std::to_string(traj.version) + "\n" + h.dump() + "\n";
    const std::size_t n = traj.players.size();
    for (const auto& s : traj.steps) {
        if (s.poses.size() != n || s.actions.size() != n || s.rewards.size() != n) {
            throw ContractViolation("trajectory: step record does not match the roster");
        }
        Writer r;
        r.u8(kStepRecord);
        r.u32(static_cast<std::uint32_t>(s.t));
        r.u8(s.visible ? 1 : 0);
        for (std::size_t i = 0; i < n; ++i) {
            r.f64(s.poses[i].position.x());
            r.f64(s.poses[i].position.y());
            r.f64(s.poses[i].heading);
            r.u8(static_cast<std::uint8_t>(s.actions[i]));
            r.i8(s.rewards[i]);
        }
        r.u8(static_cast<std::uint8_t>(s.entries.size()));
        for (const auto& e : s.entries) {
            r.u8(static_cast<std::uint8_t>(e.player));
            r.u8(static_cast<std::uint8_t>(e.goal));
            r.i8(e.reward);
        }
        w.u32(static_cast<std::uint32_t>(r.str().size()));
        w.str() += r.str();
    }
    Writer f;
    f.u8(kFooterRecord);
    f.u32(static_cast<std::uint32_t>(traj.steps.size()));
    f.u8(traj.complete ? 1 : 0);
    f.u8(static_cast<std::uint8_t>(traj.final_scores.size()));
    for (int s : traj.final_scores) f.i32(s);
    w.u32(static_cast<std::uint32_t>(f.str().size() + 4));
    w.str() += f.str();
    w.u32(crc(w.str(), w.str().size()));
    return w.str();
}

Trajectory decode(const std::string& bytes) {
    const auto nl1 = bytes.find('\n');
    if (nl1 == std::string::npos || bytes.compare(0, std::strlen(kMagic), kMagic) != 0) {
        throw IoError("trajectory: not a trajectory file");
    }
    Trajectory traj;
    try {
        traj.version = std::stoi(bytes.substr(std::strlen(kMagic) + 1, nl1 - std::strlen(kMagic) - 1));
    } catch (const std::logic_error&) {
        throw IoError("trajectory: bad version line");
    }
    if (traj.version != kTrajectoryVersion) throw IoError("trajectory: unsupported version " + std::to_string(traj.version));
    const auto nl2 = bytes.find('\n', nl1 + 1);
    if (nl2 == std::string::npos) throw IoError("trajectory: truncated header");
    if (bytes.size() < nl2 + 1 + 4) throw IoError("trajectory: truncated file");
    const std::uint32_t stored = Reader(bytes, bytes.size() - 4, bytes.size()).u32();
    if (stored != crc(bytes, bytes.size() - 4)) throw IoError("trajectory: checksum mismatch");
    try {
        const json h = json::parse(bytes.substr(nl1 + 1, nl2 - nl1 - 1));
        traj.task = task_from_json(h.at("task").dump());
        traj.seeds = h.at("seeds").get<std::map<std::string, std::uint64_t>>();
        for (const auto& p : h.at("players")) {
            traj.players.push_back({parse_role(p.at("role").get<std::string>()), p.at("policy").get<std::string>()});
        }
    } catch (const json::exception& e) {
        throw IoError(std::string("trajectory: bad header: ") + e.what());
    } catch (const ConfigError& e) {
        throw IoError(std::string("trajectory: bad header: ") + e.what());
    }
    const std::size_t n = traj.players.size();
    std::size_t pos = nl2 + 1;
    bool footer = false;
    while (!footer) {
        const std::uint32_t len = Reader(bytes, pos, bytes.size()).u32();
        pos += 4;
        if (pos + len > bytes.size()) throw IoError("trajectory: truncated record");
        Reader r(bytes, pos, pos + len);
        const auto kind = r.u8();
        if (kind == kStepRecord) {
            StepRecord s;
            s.t = static_cast<int>(r.u32());
            s.visible = r.u8() != 0;
            for (std::size_t i = 0; i < n; ++i) {
                env::Pose p;
                p.position.x() = r.f64();
                p.position.y() = r.f64();
                p.heading = r.f64();
                s.poses.push_back(p);
                s.actions.push_back(r.u8());
                s.rewards.push_back(r.i8());
            }
            const int ne = r.u8();
            for (int k = 0; k < ne; ++k) {
                env::GoalEntry e;
                e.player = r.u8();
                e.goal = r.u8();
                e.reward = r.i8();
                s.entries.push_back(e);
            }
            if (!r.at_end()) throw IoError("trajectory: oversized step record");
            traj.steps.push_back(std::move(s));
        } else if (kind == kFooterRecord) {
            const auto count = r.u32();
            if (count != traj.steps.size()) throw IoError("trajectory: footer step count mismatch");
            traj.complete = r.u8() != 0;
            const int ns = r.u8();
            for (int k = 0; k < ns; ++k) traj.final_scores.push_back(r.i32());
            r.u32();  // checksum, verified above
            if (!r.at_end()) throw IoError("trajectory: oversized footer");
            footer = true;
        } else {
            throw IoError("trajectory: unknown record kind " + std::to_string(kind));
        }
        pos += len;
    }
    if (pos != bytes.size()) throw IoError("trajectory: trailing bytes after footer");
    if (static_cast<int>(traj.steps.size()) > traj.task.episode_length) throw IoError("trajectory: more steps than the episode length");
    return traj;
}

void write_trajectory(const std::string& path, const Trajectory& traj) {
    const std::string bytes = encode(traj);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("trajectory: cannot write " + path);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("trajectory: write failed for " + path);
}

Trajectory read_trajectory(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("trajectory: cannot read " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    try {
        return decode(ss.str());
    } catch (const IoError& e) {
        throw IoError(path + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------

TrajectoryRecorder::TrajectoryRecorder(const env::Episode& episode, std::vector<PlayerInfo> players,
                                       std::map<std::string, std::uint64_t> seeds) {
    if (static_cast<int>(players.size()) != episode.num_players()) {
        throw ContractViolation("recorder: one player description per player required");
    }
    traj_.task = episode.task();
    traj_.players = std::move(players);
    traj_.seeds = std::move(seeds);
}

void TrajectoryRecorder::record(const env::Episode& episode, bool visible, std::span<const env::Command> commands,
                                const env::StepResult& result) {
    StepRecord s;
    s.t = episode.t() - 1;
    s.visible = visible;
    for (int i = 0; i < episode.num_players(); ++i) {
        s.poses.push_back(episode.player(i).pose);
        const auto& c = commands[static_cast<std::size_t>(i)];
        s.actions.push_back(std::holds_alternative<env::Action>(c) ? static_cast<int>(std::get<env::Action>(c)) : kPoseCommand);
    }
    s.rewards = result.rewards;
    s.entries = result.entries;
    traj_.steps.push_back(std::move(s));
}

Trajectory TrajectoryRecorder::finish(const env::Episode& episode, bool complete) {
    traj_.final_scores.clear();
    for (int i = 0; i < episode.num_players(); ++i) traj_.final_scores.push_back(episode.player(i).score);
    traj_.complete = complete;
    return traj_;
}

Trajectory record_episode(const env::TaskSpec& task, std::span<const PlayerInfo> players,
                          std::span<env::Policy* const> policies, const std::map<std::string, std::uint64_t>& seeds,
                          const std::string& path) {
    std::vector<env::Role> roster;
    for (const auto& p : players) roster.push_back(p.role);
    env::Episode ep(task, roster);
    if (policies.size() != players.size()) throw ContractViolation("record_episode: one policy per player required");
    TrajectoryRecorder rec(ep, {players.begin(), players.end()}, seeds);
    const int n = ep.num_players();
    for (int i = 0; i < n; ++i) policies[static_cast<std::size_t>(i)]->begin_episode(ep, i);
    std::vector<env::Command> commands(static_cast<std::size_t>(n));
    while (!ep.done()) {
        const bool visible = ep.expert_visible();
        for (int i = 0; i < n; ++i) commands[static_cast<std::size_t>(i)] = policies[static_cast<std::size_t>(i)]->act(ep, i);
        const auto r = ep.step(commands);
        rec.record(ep, visible, commands, r);
        for (int i = 0; i < n; ++i) policies[static_cast<std::size_t>(i)]->after_step(ep, i, r);
    }
    auto traj = rec.finish(ep, true);
    if (!path.empty()) write_trajectory(path, traj);
    return traj;
}

// ---------------------------------------------------------------------------

env::Command ReplayCoPlayer::act(const env::Episode& episode, int) {
    const auto t = static_cast<std::size_t>(episode.t());
    if (t < poses_.size()) return poses_[t];
    return env::Action::Noop;
}

std::unique_ptr<env::Policy> replay_expert(const Trajectory& traj, const env::TaskSpec& task) {
    if (!same_world(traj.task, task)) throw ReplayError("replay: task world does not match the recorded world");
    if (traj.players.empty()) throw ReplayError("replay: trajectory has no players");
    std::size_t who = 0;
    for (std::size_t i = 0; i < traj.players.size(); ++i) {
        if (traj.players[i].role == env::Role::Expert) {
            who = i;
            break;
        }
    }
    std::vector<env::Pose> poses;
    for (const auto& s : traj.steps) poses.push_back(s.poses[who]);
    return std::make_unique<ReplayCoPlayer>(std::move(poses));
}

ReplayCheck verify_replay(const Trajectory& traj) {
    std::vector<env::Role> roster;
    for (const auto& p : traj.players) roster.push_back(p.role);
    env::Episode ep(traj.task, roster);
    ReplayCheck out;
    const std::size_t n = traj.players.size();
    std::vector<env::Command> commands(n);
    for (std::size_t k = 0; k < traj.steps.size(); ++k) {
        const auto& s = traj.steps[k];
        const bool visible = ep.expert_visible();
        for (std::size_t i = 0; i < n; ++i) commands[i] = s.poses[i];
        const auto r = ep.step(commands);
        bool same = visible == s.visible && r.rewards == s.rewards && r.entries.size() == s.entries.size();
        for (std::size_t e = 0; same && e < r.entries.size(); ++e) {
            same = r.entries[e].player == s.entries[e].player && r.entries[e].goal == s.entries[e].goal &&
                   r.entries[e].reward == s.entries[e].reward;
        }
        if (!same && out.ok) {
            out.ok = false;
            out.first_mismatch = static_cast<int>(k);
        }
    }
    for (std::size_t i = 0; i < n; ++i) out.scores.push_back(ep.player(static_cast<int>(i)).score);
    if (out.scores != traj.final_scores && out.ok) {
        out.ok = false;
        out.first_mismatch = static_cast<int>(traj.steps.size());
    }
    return out;
}

}  // namespace goalcycle::harness
