#include "goalcycle/config.hpp"

#include "goalcycle/analysis.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace goalcycle::harness {

namespace {

struct Entry {
    const char* section;
    const char* key;
    std::function<std::string()> get;
    std::function<void(const std::string&)> set;
};

[[noreturn]] void bad_value(const std::string& v, const char* what) {
    throw ConfigError("expected " + std::string(what) + ", got '" + v + "'");
}

template <typename T>
T parse_number(const std::string& v) {
    T out{};
    const char* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end) bad_value(v, std::is_floating_point_v<T> ? "a number" : "an integer");
    return out;
}

template <typename T>
std::string format_number(T v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

template <typename T>
Entry bind(const char* section, const char* key, T& field) {
    Entry e{section, key, {}, {}};
    if constexpr (std::is_same_v<T, bool>) {
        e.get = [&field] { return std::string(field ? "true" : "false"); };
        e.set = [&field](const std::string& v) {
            if (v == "true" || v == "1") field = true;
            else if (v == "false" || v == "0") field = false;
            else bad_value(v, "true or false");
        };
    } else if constexpr (std::is_same_v<T, std::string>) {
        e.get = [&field] { return field; };
        e.set = [&field](const std::string& v) { field = v; };
    } else {
        e.get = [&field] { return format_number(field); };
        e.set = [&field](const std::string& v) { field = parse_number<T>(v); };
    }
    return e;
}

std::vector<Entry> schema(ExperimentConfig& c) {
    auto& t = c.train;
    std::vector<Entry> s = {
        bind("run", "preset", c.preset),
        bind("run", "seed", c.seed),
        bind("run", "out", c.out),
        bind("run", "threads", c.threads),
        bind("run", "agent", c.agent),
        bind("run", "checkpoint", c.checkpoint),
        bind("run", "tasks", c.tasks),

        bind("world", "size", t.world.world_size),
        bind("world", "v_obstacle_density", t.world.v_obstacle_density),
        bind("world", "h_obstacle_density", t.world.h_obstacle_density),
        bind("world", "terrain_amplitude", t.world.terrain_amplitude),
        bind("world", "terrain_frequency", t.world.terrain_frequency),
        bind("world", "num_goals", t.world.num_goals),

        bind("game", "crossings", c.crossings),

        bind("episode", "length", c.episode_length),
        bind("episode", "dropout", c.dropout),
        bind("episode", "expert_direction", c.expert_direction),

        bind("expert", "speed", t.expert.speed),
        bind("expert", "noise", t.expert.noise),

        bind("net", "rays", t.net.num_rays),
        bind("net", "enc1", t.net.enc1),
        bind("net", "enc2", t.net.enc2),
        bind("net", "belief", t.net.belief),
        bind("net", "pred1", t.net.pred1),
        bind("net", "pred2", t.net.pred2),

        {"train", "ablation", [&t] { return t.ablation.tag(); },
         [&t](const std::string& v) { t.ablation = train::Ablation::parse(v); }},
        bind("train", "lr", t.adam.lr),
        bind("train", "beta1", t.adam.beta1),
        bind("train", "beta2", t.adam.beta2),
        bind("train", "eps", t.adam.eps),
        bind("train", "max_grad_norm", t.adam.max_grad_norm),
        bind("train", "gamma", t.loss.gamma),
        bind("train", "gae_lambda", t.loss.gae_lambda),
        bind("train", "value_coef", t.loss.value_coef),
        bind("train", "entropy_coef", t.loss.entropy_coef),
        bind("train", "attention_weight", t.loss.attention_weight),
        bind("train", "dropout_p", t.dropout_p),
        bind("train", "episode_length", t.episode_length),
        bind("train", "num_envs", t.num_envs),
        bind("train", "unroll", t.unroll),
        bind("train", "total_steps", t.total_steps),
        bind("train", "attention_offset", t.attention_offset),
        bind("train", "target_noise", t.target_noise),
        bind("train", "normalise_advantages", t.normalise_advantages),
        bind("train", "eval_every", t.eval_every),
        bind("train", "eval_tasks", t.eval_tasks),
        bind("train", "eval_episode_length", t.eval_episode_length),
        bind("train", "eval_greedy", t.eval_greedy),
        bind("train", "log_every", t.log_every),
        bind("train", "actor_threads", t.actor_threads),
        bind("train", "queue_capacity", t.queue_capacity),

        bind("adr", "boundary_prob", t.adr.boundary_prob),
        bind("adr", "th_low", t.adr.th_low),
        bind("adr", "th_high", t.adr.th_high),
        bind("adr", "min_queue", t.adr.min_queue),
        bind("adr", "update_every", t.adr.update_every),

        bind("analysis", "recall_trials", c.recall_trials),
        bind("analysis", "episodes_per_direction", c.episodes_per_direction),
        bind("analysis", "sweep_axis", c.sweep_axis),
        bind("analysis", "script", c.script),
        bind("analysis", "probe_episodes", c.probe_episodes),
        bind("analysis", "probe_steps", c.probe_steps),

        bind("live", "port", c.port),
        bind("live", "tick_rate", c.tick_rate),
        bind("live", "client_timeout_ms", c.client_timeout_ms),
    };
    return s;
}

const std::set<std::string> kAgents = {"random", "follower", "replay", "anti", "random-entry", "checkpoint"};

}  // namespace

void finalize(ExperimentConfig& c) {
    c.train.seed = c.seed;
    if (c.threads > 0) c.train.actor_threads = c.threads;
    if (c.preset != "none" && c.preset != "desk") throw ConfigError("run.preset: unknown preset '" + c.preset + "'");
    if (!kAgents.contains(c.agent)) throw ConfigError("run.agent: unknown agent '" + c.agent + "'");
    if (c.agent == "checkpoint" && c.checkpoint.empty()) throw ConfigError("run.agent = checkpoint needs run.checkpoint");
    if (c.tasks < 1) throw ConfigError("run.tasks must be positive");
    if (c.threads < 0) throw ConfigError("run.threads must be >= 0");
    if (c.episode_length < 2) throw ConfigError("episode.length must be >= 2");
    if (c.expert_direction < -1 || c.expert_direction > 1) throw ConfigError("episode.expert_direction must be -1, 0 or 1");
    if (c.recall_trials < 2) throw ConfigError("analysis.recall_trials must be >= 2");
    if (c.episodes_per_direction < 1) throw ConfigError("analysis.episodes_per_direction must be positive");
    if (c.tick_rate <= 0.0) throw ConfigError("live.tick_rate must be positive");
    if (c.port < 0 || c.port > 65535) throw ConfigError("live.port out of range");
    try {
        expert::validate(expert::parse_dropout(c.dropout));
        analysis::parse_axis(c.sweep_axis);
        analysis::parse_script(c.script);
        env::validate(c.train.world);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    train::validate(c.train);
}

ExperimentConfig parse_config(const std::string& text) {
    boost::property_tree::ptree tree;
    std::istringstream in(text);
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.message() + " at line " + std::to_string(e.line()));
    }
    ExperimentConfig c;
    auto entries = schema(c);
    std::map<std::string, const Entry*> index;
    for (const auto& e : entries) index[std::string(e.section) + "." + e.key] = &e;

    std::vector<std::pair<std::string, std::string>> values;
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) throw ConfigError("config: key '" + section + "' outside a section");
        for (const auto& [key, value] : body) {
            const std::string name = section + "." + key;
            if (!index.contains(name)) throw ConfigError("config: unknown key '" + name + "'");
            values.emplace_back(name, value.data());
        }
    }
    for (const auto& [name, value] : values) {
        if (name == "run.preset" && value == "desk") c.train = train::desk_scale_config(c.seed);
    }
    for (const auto& [name, value] : values) {
        try {
            index.at(name)->set(value);
        } catch (const ConfigError& e) {
            throw ConfigError(name + ": " + e.what());
        }
    }
    finalize(c);
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("config: cannot read " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

std::string resolved_config(const ExperimentConfig& cfg) {
    ExperimentConfig copy = cfg;
    std::ostringstream os;
    std::string section;
    for (const auto& e : schema(copy)) {
        if (e.section != section) {
            if (!section.empty()) os << "\n";
            section = e.section;
            os << "[" << section << "]\n";
        }
        os << e.key << " = " << e.get() << "\n";
    }
    return os.str();
}

env::TaskSpec task_from_config(const ExperimentConfig& cfg, std::uint64_t seed) {
    Rng rng = make_rng(seed, 0x7A5C);
    env::WorldParams w = cfg.train.world;
    w.seed = rng() & kTrainSeedMask;
    env::TaskSpec t = env::make_task(w, rng);
    if (cfg.crossings >= 0) {
        const auto s = game::sample_game_uniform_topology([&](Rng& r) { return env::place_goals(w, r); }, w.num_goals, rng,
                                                          10000, cfg.crossings);
        t.goal_centres = s.positions;
        t.order = s.game.order;
    }
    t.expert = cfg.train.expert;
    t.dropout = expert::parse_dropout(cfg.dropout);
    t.episode_length = cfg.episode_length;
    t.expert_direction = cfg.expert_direction;
    t.num_rays = cfg.train.net.num_rays;
    return t;
}

}  // namespace goalcycle::harness
