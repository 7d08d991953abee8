#include "goalcycle/live.hpp"

#include <json.hpp>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace goalcycle::harness {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

env::Action parse_action(const std::string& s) {
    if (s == "forward" || s == "0") return env::Action::Forward;
    if (s == "backward" || s == "1") return env::Action::Backward;
    if (s == "left" || s == "2") return env::Action::RotateLeft;
    if (s == "right" || s == "3") return env::Action::RotateRight;
    if (s == "noop" || s == "4") return env::Action::Noop;
    throw std::invalid_argument("unknown action '" + s + "'");
}

std::string action_name(env::Action a) {
    switch (a) {
        case env::Action::Forward: return "forward";
        case env::Action::Backward: return "backward";
        case env::Action::RotateLeft: return "left";
        case env::Action::RotateRight: return "right";
        case env::Action::Noop: return "noop";
    }
    return "noop";
}

// ---------------------------------------------------------------------------

LiveSession::LiveSession(const env::TaskSpec& task, const env::PolicyFactory& agent, std::string agent_name,
                         std::uint64_t seed)
    : episode_(task, {env::Role::Agent, env::Role::Expert}),
      agent_(agent(derive_seed(seed, 3))),
      recorder_(episode_, {{env::Role::Agent, std::move(agent_name)}, {env::Role::Expert, "stream"}}, {{"session", seed}}) {
    agent_->begin_episode(episode_, 0);
}

std::string LiveSession::hello_message(double tick_rate) const {
    const auto& w = episode_.world();
    json goals = json::array(), pillars = json::array(), zones = json::array();
    for (const auto& g : w.goals) {
        goals.push_back({{"x", g.centre.x()}, {"y", g.centre.y()}, {"radius", g.radius}, {"colour", g.colour}});
    }
    for (const auto& p : w.pillars) pillars.push_back({{"x", p.centre.x()}, {"y", p.centre.y()}, {"radius", p.radius}});
    for (const auto& z : w.slow_zones) {
        zones.push_back({{"x", z.centre.x()},
                         {"y", z.centre.y()},
                         {"angle", z.angle},
                         {"half_length", z.half_length},
                         {"half_width", z.half_width}});
    }
    json j = {{"type", "hello"},
              {"version", kProtocolVersion},
              {"player", 1},
              {"roles", {"agent", "expert"}},
              {"tick_rate", tick_rate},
              {"episode_length", episode_.length()},
              {"world",
               {{"size", w.size},
                {"goals", goals},
                {"pillars", pillars},
                {"slow_zones", zones},
                {"terrain_amplitude", w.terrain.amplitude()},
                {"terrain_frequency", w.terrain.frequency()}}}};
    return j.dump();
}

std::string LiveSession::state_message() const {
    json players = json::array();
    for (int i = 0; i < episode_.num_players(); ++i) {
        const auto& p = episode_.player(i);
        players.push_back({{"x", p.pose.position.x()}, {"y", p.pose.position.y()}, {"heading", p.pose.heading}, {"score", p.score}});
    }
    json j = {{"type", "state"},
              {"version", kProtocolVersion},
              {"t", episode_.t()},
              {"visible", episode_.expert_visible()},
              {"players", players}};
    return j.dump();
}

std::vector<std::string> LiveSession::tick(env::Action expert_action) {
    if (done()) throw ContractViolation("tick on a finished session");
    const bool visible = episode_.expert_visible();
    const env::Command commands[2] = {agent_->act(episode_, 0), expert_action};
    const auto r = episode_.step(commands);
    recorder_.record(episode_, visible, commands, r);
    agent_->after_step(episode_, 0, r);
    std::vector<std::string> out;
    json scores = json::array();
    for (int i = 0; i < episode_.num_players(); ++i) scores.push_back(episode_.player(i).score);
    for (const auto& e : r.entries) {
        json j = {{"type", "score"}, {"version", kProtocolVersion}, {"t", episode_.t()},  {"player", e.player},
                  {"goal", e.goal},   {"reward", e.reward},          {"scores", scores}};
        out.push_back(j.dump());
    }
    out.push_back(state_message());
    return out;
}

std::string LiveSession::end_message(bool complete, const std::string& reason) const {
    json scores = json::array();
    for (int i = 0; i < episode_.num_players(); ++i) scores.push_back(episode_.player(i).score);
    json j = {{"type", "end"},       {"version", kProtocolVersion}, {"t", episode_.t()},
              {"scores", scores},    {"complete", complete},        {"reason", reason}};
    return j.dump();
}

Trajectory run_scripted(const env::TaskSpec& task, const env::PolicyFactory& agent, const std::string& agent_name,
                        std::uint64_t seed, std::span<const env::Action> actions) {
    LiveSession s(task, agent, agent_name, seed);
    for (std::size_t k = 0; !s.done(); ++k) s.tick(k < actions.size() ? actions[k] : env::Action::Noop);
    return s.finish(true);
}

// ---------------------------------------------------------------------------

namespace {

bool send_all(int fd, const std::string& line) {
    std::string data = line + "\n";
    std::size_t off = 0;
    while (off < data.size()) {
        const ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) return false;
        off += static_cast<std::size_t>(n);
    }
    return true;
}

struct Listener {
    int fd = -1;
    ~Listener() {
        if (fd >= 0) ::close(fd);
    }
};

int open_listener(const ServeOptions& o, int& bound_port) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw IoError(std::string("serve: socket: ") + std::strerror(errno));
    const int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(o.port));
    if (::inet_pton(AF_INET, o.host.c_str(), &addr.sin_addr) != 1) {
        ::close(fd);
        throw IoError("serve: bad host address " + o.host);
    }
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd, 1) != 0) {
        const std::string err = std::strerror(errno);
        ::close(fd);
        throw IoError("serve: cannot listen on " + o.host + ":" + std::to_string(o.port) + ": " + err);
    }
    socklen_t len = sizeof addr;
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    bound_port = ntohs(addr.sin_port);
    return fd;
}

struct Message {
    enum class Kind { Hello, Action, End, Invalid } kind = Kind::Invalid;
    env::Action action = env::Action::Noop;
    std::string error;
};

Message parse_message(const std::string& line) {
    Message m;
    try {
        const json j = json::parse(line);
        if (!j.is_object() || !j.contains("type") || !j.at("type").is_string()) {
            m.error = "message without a type";
            return m;
        }
        if (!j.contains("version") || j.at("version") != kProtocolVersion) {
            m.error = "unsupported protocol version";
            return m;
        }
        const auto type = j.at("type").get<std::string>();
        if (type == "hello") {
            m.kind = Message::Kind::Hello;
        } else if (type == "end") {
            m.kind = Message::Kind::End;
        } else if (type == "action") {
            const auto& a = j.at("action");
            m.action = parse_action(a.is_string() ? a.get<std::string>() : std::to_string(a.get<int>()));
            m.kind = Message::Kind::Action;
        } else {
            m.error = "unknown message type '" + type + "'";
        }
    } catch (const std::exception& e) {
        m.kind = Message::Kind::Invalid;
        m.error = std::string("malformed message: ") + e.what();
    }
    return m;
}

}  // namespace

ServeResult serve_live(LiveSession& session, const ServeOptions& o) {
    Listener listener;
    int port = 0;
    listener.fd = open_listener(o, port);
    if (o.on_listening) o.on_listening(port);

    ServeResult res;
    pollfd lp{listener.fd, POLLIN, 0};
    if (::poll(&lp, 1, o.client_timeout_ms) <= 0) {
        res.reason = "no client connected";
        res.trajectory = session.finish(false);
        if (!o.trajectory_path.empty()) write_trajectory(o.trajectory_path, res.trajectory);
        return res;
    }
    Listener client;
    client.fd = ::accept(listener.fd, nullptr, nullptr);
    if (client.fd < 0) throw IoError(std::string("serve: accept: ") + std::strerror(errno));
    const int one = 1;
    ::setsockopt(client.fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);

    const auto start = Clock::now();
    const auto period = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(1.0 / o.tick_rate));
    auto next_tick = start + period;
    auto last_rx = start;
    std::optional<env::Action> pending;
    std::string buffer;
    bool open = send_all(client.fd, session.hello_message(o.tick_rate)) && send_all(client.fd, session.state_message());
    std::string reason = open ? "" : "client disconnected";

    auto do_tick = [&](env::Action a) {
        for (const auto& m : session.tick(a)) {
            if (open && !send_all(client.fd, m)) {
                open = false;
                reason = "client disconnected";
            }
        }
        ++res.ticks;
    };

    while (open && reason.empty() && !session.done()) {
        const auto now = Clock::now();
        if (!o.lockstep && now >= next_tick) {
            do_tick(pending.value_or(env::Action::Noop));
            pending.reset();
            next_tick += period;
            continue;
        }
        if (now - last_rx > std::chrono::milliseconds(o.client_timeout_ms)) {
            reason = "client timeout";
            break;
        }
        auto wait = o.lockstep ? last_rx + std::chrono::milliseconds(o.client_timeout_ms) - now : next_tick - now;
        const int wait_ms = static_cast<int>(std::max<long>(0, std::chrono::duration_cast<std::chrono::milliseconds>(wait).count()));
        pollfd p{client.fd, POLLIN, 0};
        const int ready = ::poll(&p, 1, std::max(wait_ms, 1));
        if (ready <= 0) continue;
        char chunk[4096];
        const ssize_t n = ::recv(client.fd, chunk, sizeof chunk, 0);
        if (n <= 0) {
            open = false;
            reason = "client disconnected";
            break;
        }
        last_rx = Clock::now();
        buffer.append(chunk, static_cast<std::size_t>(n));
        std::size_t nl;
        while (reason.empty() && (nl = buffer.find('\n')) != std::string::npos) {
            std::string line = buffer.substr(0, nl);
            buffer.erase(0, nl + 1);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            const Message m = parse_message(line);
            switch (m.kind) {
                case Message::Kind::Hello: break;
                case Message::Kind::End:
                    reason = "client ended the session";
                    break;
                case Message::Kind::Invalid: reason = "protocol error: " + m.error; break;
                case Message::Kind::Action:
                    if (o.lockstep) {
                        do_tick(m.action);
                        if (session.done()) break;
                    } else {
                        pending = m.action;  // latest action within a tick wins
                    }
                    break;
            }
            if (session.done()) break;
        }
    }
    res.complete = session.done();
    res.reason = res.complete ? "episode finished" : reason;
    if (open) send_all(client.fd, session.end_message(res.complete, res.reason));
    res.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    res.trajectory = session.finish(res.complete);
    if (!o.trajectory_path.empty()) write_trajectory(o.trajectory_path, res.trajectory);
    return res;
}

// ---------------------------------------------------------------------------

LineClient::LineClient(const std::string& host, int port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw IoError(std::string("client: socket: ") + std::strerror(errno));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1 ||
        ::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
        const std::string err = std::strerror(errno);
        ::close(fd_);
        fd_ = -1;
        throw IoError("client: cannot connect to " + host + ":" + std::to_string(port) + ": " + err);
    }
    const int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

LineClient::~LineClient() { close(); }

void LineClient::close() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
}

void LineClient::send_line(const std::string& line) {
    if (fd_ < 0 || !send_all(fd_, line)) throw IoError("client: send failed");
}

std::optional<std::string> LineClient::read_line(int timeout_ms) {
    const auto deadline = Clock::now() + std::chrono::milliseconds(timeout_ms);
    while (true) {
        const auto nl = buffer_.find('\n');
        if (nl != std::string::npos) {
            std::string line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            return line;
        }
        if (fd_ < 0) return std::nullopt;
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
        if (left <= 0) return std::nullopt;
        pollfd p{fd_, POLLIN, 0};
        if (::poll(&p, 1, static_cast<int>(left)) <= 0) return std::nullopt;
        char chunk[4096];
        const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
        if (n <= 0) return std::nullopt;
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

}  // namespace goalcycle::harness
