#include "goalcycle/adr.hpp"

#include <json.hpp>

#include <cmath>
#include <stdexcept>

namespace goalcycle::adr {

namespace {

ADRParam param(std::string name, double lo, double init, double hi, double step) {
    ADRParam p;
    p.name = std::move(name);
    p.hard_min = lo;
    p.hard_max = hi;
    p.lo = init;
    p.hi = init;
    p.step = step;
    return p;
}

// Moves v by delta, clamps into [floor, ceil] and snaps onto a limit within rounding noise.
double shift(double v, double delta, double floor, double ceil, double step) {
    double out = v + delta;
    const double eps = 1e-6 * step;
    if (std::abs(out - floor) < eps) out = floor;
    if (std::abs(out - ceil) < eps) out = ceil;
    return std::clamp(out, floor, ceil);
}

}  // namespace

void validate(const ADRState& s) {
    const auto& c = s.config;
    if (!(c.boundary_prob >= 0.0 && c.boundary_prob <= 1.0)) throw std::invalid_argument("adr: boundary_prob out of [0,1]");
    if (!(0.0 <= c.th_low && c.th_low < c.th_high && c.th_high <= 1.0)) {
        throw std::invalid_argument("adr: thresholds must satisfy 0 <= th_low < th_high <= 1");
    }
    if (c.min_queue < 1) throw std::invalid_argument("adr: min_queue must be >= 1");
    if (c.update_every < 1) throw std::invalid_argument("adr: update_every must be >= 1");
    if (s.queues.size() != s.params.size()) throw std::invalid_argument("adr: queue count mismatch");
    for (const auto& p : s.params) {
        if (!(p.step > 0.0)) throw std::invalid_argument("adr: step of " + p.name + " must be positive");
        if (!(p.hard_min <= p.lo && p.lo <= p.hi && p.hi <= p.hard_max)) {
            throw std::invalid_argument("adr: boundaries of " + p.name + " violate hard_min <= lo <= hi <= hard_max");
        }
    }
}

ADRState make_state(std::vector<ADRParam> params, ADRConfig config) {
    ADRState s;
    for (auto& p : params) {
        p.frozen_low = p.frozen_low || p.lo == p.hard_min;
        p.frozen_high = p.frozen_high || p.hi == p.hard_max;
    }
    s.params = std::move(params);
    s.queues.resize(s.params.size());
    s.config = config;
    validate(s);
    return s;
}

ADRState reference_config(ADRConfig config) {
    return make_state({param("world_size", 20.0, 20.0, 32.0, 1.0),
                       param("h_obstacle_density", 0.0001, 0.0001, 0.01, 0.0001),
                       param("v_obstacle_density", 0.0, 0.0, 0.2, 0.0005),
                       param("terrain_amplitude", 10.0, 10.0, 15.0, 0.1),
                       param("terrain_frequency", 0.01, 0.01, 0.1, 0.002),
                       param("bot_speed", 7.0, 11.0, 14.0, 0.1),
                       param("dropout_p", 2.0 / 1800.0, 20.0 / 1800.0, 40.0 / 1800.0, 2.0 / 1800.0)},
                      config);
}

Sample sample_task_params(const ADRState& state, Rng& rng) {
    Sample s;
    std::vector<Pin> open;
    for (int i = 0; i < static_cast<int>(state.params.size()); ++i) {
        for (Side side : {Side::Low, Side::High}) {
            if (!state.params[static_cast<std::size_t>(i)].frozen(side)) open.push_back(Pin{i, side});
        }
    }
    if (!open.empty() && bernoulli(rng, state.config.boundary_prob)) {
        s.pinned = open[static_cast<std::size_t>(uniform_int(rng, static_cast<int>(open.size())))];
    }
    for (int i = 0; i < static_cast<int>(state.params.size()); ++i) {
        const auto& p = state.params[static_cast<std::size_t>(i)];
        if (s.pinned && s.pinned->index == i) {
            s.lambda.push_back(p.boundary(s.pinned->side));
        } else {
            s.lambda.push_back(uniform(rng, p.lo, p.hi));
        }
    }
    return s;
}

void push_metric(ADRState& state, Pin pinned, double ct) {
    if (pinned.index < 0 || pinned.index >= static_cast<int>(state.params.size())) {
        throw ContractViolation("adr: push to unknown parameter " + std::to_string(pinned.index));
    }
    if (state.params[static_cast<std::size_t>(pinned.index)].frozen(pinned.side)) {
        throw ContractViolation("adr: push to a frozen boundary of " + state.params[static_cast<std::size_t>(pinned.index)].name);
    }
    state.queue(pinned).push_back(ct);
}

UpdateReport update_boundaries(ADRState& state) {
    UpdateReport report;
    const auto& cfg = state.config;
    for (int i = 0; i < static_cast<int>(state.params.size()); ++i) {
        auto& p = state.params[static_cast<std::size_t>(i)];
        for (Side side : {Side::Low, Side::High}) {
            auto& q = state.queue(Pin{i, side});
            if (static_cast<int>(q.size()) < cfg.min_queue || q.empty()) continue;
            double mean = 0.0;
            for (double v : q) mean += v;
            mean /= static_cast<double>(q.size());
            q.clear();
            ++report.acted;
            report.acting.push_back(Pin{i, side});
            int dir = 0;  // +1 outward
            if (mean > cfg.th_high) dir = 1;
            if (mean < cfg.th_low) dir = -1;
            if (dir == 0) continue;
            const double before = p.boundary(side);
            if (side == Side::Low) {
                p.lo = shift(p.lo, -dir * p.step, p.hard_min, p.hi, p.step);
            } else {
                p.hi = shift(p.hi, dir * p.step, p.lo, p.hard_max, p.step);
            }
            if (p.boundary(side) != before) ++report.moved;
        }
    }
    return report;
}

std::vector<TraceEntry> simulate_adr(ADRState state, const std::function<double(const ADRState&, const Sample&)>& metric,
                                     int updates, int tasks_per_update, Rng& rng) {
    std::vector<TraceEntry> trace;
    for (int u = 0; u < updates; ++u) {
        for (int k = 0; k < tasks_per_update; ++k) {
            const Sample s = sample_task_params(state, rng);
            if (s.pinned) push_metric(state, *s.pinned, metric(state, s));
        }
        TraceEntry e;
        e.report = update_boundaries(state);
        for (const auto& p : state.params) e.bounds.emplace_back(p.lo, p.hi);
        trace.push_back(std::move(e));
    }
    return trace;
}

void apply_params(const ADRState& state, std::span<const double> lambda, env::TaskSpec& task) {
    if (lambda.size() != state.params.size()) throw std::invalid_argument("adr: lambda size mismatch");
    for (std::size_t i = 0; i < lambda.size(); ++i) {
        const std::string& n = state.params[i].name;
        const double v = lambda[i];
        if (n == "world_size") {
            task.world.world_size = v;
        } else if (n == "h_obstacle_density") {
            task.world.h_obstacle_density = v;
        } else if (n == "v_obstacle_density") {
            task.world.v_obstacle_density = v;
        } else if (n == "terrain_amplitude") {
            task.world.terrain_amplitude = v;
        } else if (n == "terrain_frequency") {
            task.world.terrain_frequency = v;
        } else if (n == "bot_speed") {
            task.expert.speed = expert::speed_multiplier_from_units(v);
        } else if (n == "dropout_p") {
            task.dropout = expert::DropoutScheme::probabilistic(v);
        } else if (n == "expert_noise") {
            task.expert.noise = v;
        } else {
            throw std::invalid_argument("adr: unknown parameter '" + n + "'");
        }
    }
}

std::string serialize(const ADRState& state) {
    nlohmann::json j;
    j["version"] = 1;
    j["config"] = {{"boundary_prob", state.config.boundary_prob},
                   {"th_low", state.config.th_low},
                   {"th_high", state.config.th_high},
                   {"min_queue", state.config.min_queue},
                   {"update_every", state.config.update_every}};
    for (std::size_t i = 0; i < state.params.size(); ++i) {
        const auto& p = state.params[i];
        j["params"].push_back({{"name", p.name},
                               {"hard_min", p.hard_min},
                               {"hard_max", p.hard_max},
                               {"lo", p.lo},
                               {"hi", p.hi},
                               {"step", p.step},
                               {"frozen_low", p.frozen_low},
                               {"frozen_high", p.frozen_high},
                               {"queue_low", state.queues[i][0]},
                               {"queue_high", state.queues[i][1]}});
    }
    return j.dump();
}

ADRState deserialize(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        if (j.at("version").get<int>() != 1) throw std::invalid_argument("adr: unsupported version");
        ADRState s;
        const auto& c = j.at("config");
        s.config.boundary_prob = c.at("boundary_prob");
        s.config.th_low = c.at("th_low");
        s.config.th_high = c.at("th_high");
        s.config.min_queue = c.at("min_queue");
        s.config.update_every = c.at("update_every");
        for (const auto& pj : j.at("params")) {
            ADRParam p;
            p.name = pj.at("name");
            p.hard_min = pj.at("hard_min");
            p.hard_max = pj.at("hard_max");
            p.lo = pj.at("lo");
            p.hi = pj.at("hi");
            p.step = pj.at("step");
            p.frozen_low = pj.at("frozen_low");
            p.frozen_high = pj.at("frozen_high");
            s.params.push_back(p);
            s.queues.push_back({pj.at("queue_low").get<std::vector<double>>(), pj.at("queue_high").get<std::vector<double>>()});
        }
        validate(s);
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("adr: malformed state: ") + e.what());
    }
}

}  // namespace goalcycle::adr
