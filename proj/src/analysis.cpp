#include "goalcycle/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace goalcycle::analysis {

using env::Episode;
using env::Policy;
using env::Role;
using env::TaskSpec;

namespace {

TaskSpec pin_direction(TaskSpec task, std::uint64_t seed) {
    if (task.expert_direction == 0) {
        Rng r = make_rng(seed, 5);
        task.expert_direction = bernoulli(r, 0.5) ? 1 : -1;
    }
    return task;
}

struct Played {
    env::EpisodeLog log;
    game::CyclicOrder demonstrated;
};

// Agent (optional) at index 0, expert last; seeds match ct::run_ct_eval.
Played play(const TaskSpec& task, const std::shared_ptr<const env::World>& world, const env::PolicyFactory* agent,
            std::unique_ptr<Policy> expert_policy, std::uint64_t seed, bool record_poses = false,
            const std::function<void(const Episode&, const env::StepResult&)>& observer = {}) {
    std::vector<Role> roster;
    std::vector<std::unique_ptr<Policy>> owned;
    if (agent) {
        roster.push_back(Role::Agent);
        owned.push_back((*agent)(derive_seed(seed, 3)));
    }
    if (expert_policy) {
        roster.push_back(Role::Expert);
        owned.push_back(std::move(expert_policy));
    }
    Episode ep(task, world, roster);
    std::vector<Policy*> ptrs;
    for (auto& p : owned) ptrs.push_back(p.get());
    Played out;
    out.log = env::run_episode(ep, ptrs, record_poses, observer);
    out.demonstrated = ep.expert_order();
    return out;
}

std::unique_ptr<Policy> default_expert(const TaskSpec& task, std::uint64_t seed) {
    return std::make_unique<expert::ExpertBot>(derive_seed(seed, 2), task.expert.noise);
}

int sum_range(const std::vector<int>& v, std::size_t from, std::size_t to) {
    to = std::min(to, v.size());
    return from >= to ? 0 : std::accumulate(v.begin() + static_cast<long>(from), v.begin() + static_cast<long>(to), 0);
}

}  // namespace

// ---------------------------------------------------------------------------

RecallReport recall_trials(const env::PolicyFactory& agent, const TaskSpec& task_in, int n_trials, std::uint64_t seed,
                           int trial_length) {
    if (n_trials < 2) throw std::invalid_argument("recall_trials: need at least two trials");
    if (trial_length < 1) throw std::invalid_argument("recall_trials: trial length must be positive");
    TaskSpec task = pin_direction(task_in, seed);
    task.episode_length = n_trials * trial_length;
    task.dropout = expert::DropoutScheme::until(trial_length - 1);  // visible for t < trial_length
    const auto world = std::make_shared<const env::World>(env::build_world(task));
    const auto p = play(task, world, &agent, default_expert(task, seed), seed);
    RecallReport r;
    r.trial_length = trial_length;
    for (int k = 0; k < n_trials; ++k) {
        r.trial_scores.push_back(sum_range(p.log.rewards[0], static_cast<std::size_t>(k * trial_length),
                                           static_cast<std::size_t>((k + 1) * trial_length)));
    }
    r.expert_score = sum_range(p.log.rewards[1], 0, static_cast<std::size_t>(trial_length));
    return r;
}

// ---------------------------------------------------------------------------

PreferenceReport two_option_preference(const env::PolicyFactory& agent, std::span<const TaskSpec> tasks,
                                       int episodes_per_direction, std::uint64_t seed, expert::DropoutScheme dropout) {
    PreferenceReport r;
    for (std::size_t k = 0; k < tasks.size(); ++k) {
        for (int dir : {1, -1}) {
            TaskSpec t = tasks[k];
            t.expert_direction = dir;
            t.dropout = dropout;
            const auto world = std::make_shared<const env::World>(env::build_world(t));
            for (int e = 0; e < episodes_per_direction; ++e) {
                const std::uint64_t s = derive_seed(derive_seed(seed, k), static_cast<std::uint64_t>(2 * e + (dir > 0)));
                const auto p = play(t, world, &agent, default_expert(t, s), s);
                std::vector<int> goals, rewards;
                for (const auto& entry : p.log.entries) {
                    if (entry.player != 0) continue;
                    goals.push_back(entry.goal);
                    rewards.push_back(entry.reward);
                }
                for (int c : game::complete_cycles(goals, rewards, p.demonstrated)) {
                    ++r.total;
                    r.matched += c > 0;
                }
            }
        }
    }
    return r;
}

// ---------------------------------------------------------------------------

Axis parse_axis(const std::string& s) {
    if (s == "world") return Axis::World;
    if (s == "game") return Axis::Game;
    if (s == "expert") return Axis::Expert;
    throw std::invalid_argument("unknown sweep axis '" + s + "'");
}

std::string to_string(Axis a) {
    switch (a) {
        case Axis::World: return "world";
        case Axis::Game: return "game";
        case Axis::Expert: return "expert";
    }
    return "?";
}

Ranges ranges_from_adr(const adr::ADRState& state) {
    Ranges r;
    for (const auto& p : state.params) r[p.name] = {p.lo, p.hi};
    return r;
}

bool out_of_distribution(double v, std::pair<double, double> range) {
    const double tol = 1e-12 * std::max({1.0, std::abs(range.first), std::abs(range.second)});
    return v < range.first - tol || v > range.second + tol;
}

std::vector<double> sweep_values(double lo, double hi, int n_inside) {
    if (hi < lo || n_inside < 1) throw std::invalid_argument("sweep_values: need lo <= hi and n_inside >= 1");
    std::vector<double> v;
    const double width = hi - lo;
    const double below = lo != 0.0 ? lo - 0.2 * std::abs(lo) : lo - 0.2 * width;
    if (below >= 0.0 && below < lo) v.push_back(below);
    if (n_inside == 1 || width == 0.0) {
        v.push_back(lo);
        if (width > 0.0) v.push_back(hi);
    } else {
        for (int i = 0; i < n_inside; ++i) v.push_back(lo + width * i / (n_inside - 1));
    }
    v.push_back(hi != 0.0 ? hi + 0.2 * std::abs(hi) : hi + 0.2 * width);
    if (v.back() == v[v.size() - 2]) v.pop_back();
    return v;
}

void apply_override(TaskSpec& task, const std::string& name, double value, Rng& rng) {
    if (name == "world_size") {
        task.world.world_size = value;
    } else if (name == "v_obstacle_density") {
        task.world.v_obstacle_density = value;
    } else if (name == "h_obstacle_density") {
        task.world.h_obstacle_density = value;
    } else if (name == "terrain_amplitude") {
        task.world.terrain_amplitude = value;
    } else if (name == "terrain_frequency") {
        task.world.terrain_frequency = value;
    } else if (name == "num_goals") {
        task.world.num_goals = static_cast<int>(std::lround(value));
        task.goal_centres.clear();
        task.order = game::sample_order(task.world.num_goals, rng);
    } else if (name == "crossings") {
        const env::WorldParams w = task.world;
        const auto s = game::sample_game_uniform_topology([&](Rng& r) { return env::place_goals(w, r); }, w.num_goals, rng,
                                                          10000, static_cast<int>(std::lround(value)));
        task.goal_centres = s.positions;
        task.order = s.game.order;
    } else if (name == "bot_speed") {
        task.expert.speed = expert::speed_multiplier_from_units(value);
    } else if (name == "expert_speed") {
        task.expert.speed = value;
    } else if (name == "expert_noise") {
        task.expert.noise = value;
    } else {
        throw std::invalid_argument("unknown sweep parameter '" + name + "'");
    }
}

std::vector<SweepRow> generalisation_sweep(const env::PolicyFactory& agent, Axis axis, std::span<const SweepCell> grid,
                                           const TaskSpec& base, const Ranges& ranges, int tasks_per_cell,
                                           std::uint64_t seed, int half_length) {
    static const std::map<Axis, std::vector<std::string>> allowed = {
        {Axis::World, {"world_size", "v_obstacle_density", "h_obstacle_density", "terrain_amplitude", "terrain_frequency"}},
        {Axis::Game, {"num_goals", "crossings"}},
        {Axis::Expert, {"bot_speed", "expert_speed", "expert_noise"}}};
    std::vector<SweepRow> rows;
    for (std::size_t c = 0; c < grid.size(); ++c) {
        SweepRow row;
        row.cell = grid[c];
        for (const auto& [name, v] : grid[c].values) {
            const auto& names = allowed.at(axis);
            if (std::find(names.begin(), names.end(), name) == names.end()) {
                throw std::invalid_argument("parameter '" + name + "' is not on the " + to_string(axis) + " axis");
            }
            const auto it = ranges.find(name);
            if (it != ranges.end() && out_of_distribution(v, it->second)) row.ood = true;
        }
        // Goal count before crossing class.
        auto values = grid[c].values;
        std::stable_sort(values.begin(), values.end(), [](const auto& a, const auto& b) {
            return (a.first == "crossings") < (b.first == "crossings");
        });
        double total = 0.0;
        for (int k = 0; k < tasks_per_cell; ++k) {
            const std::uint64_t s = derive_seed(derive_seed(seed, c), static_cast<std::uint64_t>(k));
            Rng rng = make_rng(s, 1);
            TaskSpec t = base;
            t.world.seed = rng();
            t.goal_centres.clear();
            t.order = game::sample_order(t.world.num_goals, rng);
            try {
                for (const auto& [name, v] : values) apply_override(t, name, v, rng);
                t = pin_direction(t, s);
                t.episode_length = 2 * half_length;
                t.dropout = expert::DropoutScheme::half();
                const auto world = std::make_shared<const env::World>(env::build_world(t));
                const auto paired = play(t, world, &agent, default_expert(t, s), s);
                // Normaliser: a noise-free expert of the same speed on the same task.
                TaskSpec clean = t;
                clean.expert.noise = 0.0;
                const auto solo = play(clean, world, nullptr, default_expert(clean, s), s);
                const int expert_half = sum_range(solo.log.rewards[0], 0, static_cast<std::size_t>(half_length));
                if (expert_half <= 0) {
                    ++row.undefined;
                    continue;
                }
                total += static_cast<double>(paired.log.scores[0]) / expert_half;
                ++row.tasks;
            } catch (const GenerationError&) {
                ++row.undefined;
            } catch (const SamplingError&) {
                ++row.undefined;
            }
        }
        row.mean_score = row.tasks > 0 ? total / row.tasks : 0.0;
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---------------------------------------------------------------------------

BeliefDataset collect_beliefs(std::shared_ptr<const agent::Params<float>> params, std::span<const TaskSpec> tasks,
                              expert::DropoutScheme dropout, std::uint64_t seed) {
    BeliefDataset d;
    std::vector<Eigen::VectorXf> rows;
    for (std::size_t k = 0; k < tasks.size(); ++k) {
        TaskSpec t = tasks[k];
        t.dropout = dropout;
        t.episode_seed = derive_seed(seed, k);
        Episode ep(t, {Role::Agent, Role::Expert});
        agent::AgentPolicy pol(params, derive_seed(t.episode_seed, 3));
        expert::ExpertBot bot(derive_seed(t.episode_seed, 2), t.expert.noise);
        pol.begin_episode(ep, 0);
        bot.begin_episode(ep, 1);
        std::vector<env::Command> cmds(2);
        while (!ep.done()) {
            d.expert_visible.push_back(ep.expert_visible() ? 1 : 0);
            d.inside_goal.push_back(ep.player(0).inside >= 0 ? 1 : 0);
            d.episode.push_back(static_cast<int>(k));
            cmds[0] = pol.act(ep, 0);
            rows.push_back(pol.belief().h.col(0));
            try {
                cmds[1] = bot.act(ep, 1);
            } catch (const PlanningError&) {
                cmds[1] = env::Action::Noop;
            }
            const auto r = ep.step(cmds);
            pol.after_step(ep, 0, r);
            bot.after_step(ep, 1, r);
        }
    }
    const Eigen::Index H = rows.empty() ? 0 : rows.front().size();
    d.beliefs.resize(static_cast<Eigen::Index>(rows.size()), H);
    for (std::size_t i = 0; i < rows.size(); ++i) d.beliefs.row(static_cast<Eigen::Index>(i)) = rows[i].cast<double>().transpose();
    return d;
}

namespace {

struct Probe {
    Eigen::VectorXd s, w;
    double b = 0.0;

    Eigen::VectorXd attention() const {
        const Eigen::ArrayXd e = (s.array() - s.maxCoeff()).exp();
        return (e / e.sum()).matrix();
    }
    Eigen::VectorXd logits(const Eigen::MatrixXd& X) const {
        return (X * attention().cwiseProduct(w)).array() + b;
    }
};

double accuracy(const Probe& p, const Eigen::MatrixXd& X, const std::vector<int>& y) {
    const Eigen::VectorXd z = p.logits(X);
    int ok = 0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) ok += (z(i) > 0.0) == (y[static_cast<std::size_t>(i)] != 0);
    return X.rows() > 0 ? static_cast<double>(ok) / static_cast<double>(X.rows()) : 0.0;
}

}  // namespace

ProbeResult probe_social_neurons(const Eigen::MatrixXd& beliefs, std::span<const int> labels, const ProbeConfig& cfg) {
    const Eigen::Index N = beliefs.rows(), H = beliefs.cols();
    if (static_cast<Eigen::Index>(labels.size()) != N) throw std::invalid_argument("probe: label count mismatch");
    if (N < 10 || H < 1) throw ProbingError("probe: dataset too small");
    const auto positives = std::count_if(labels.begin(), labels.end(), [](int v) { return v != 0; });
    if (positives == 0 || positives == static_cast<long>(N)) throw ProbingError("probe: labels have a single class");

    Rng rng(cfg.seed);
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(N));
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_train = static_cast<Eigen::Index>(std::llround(cfg.train_fraction * static_cast<double>(N)));
    if (n_train < 1 || n_train >= N) throw ProbingError("probe: empty train or test split");
    Eigen::MatrixXd Xtr(n_train, H), Xte(N - n_train, H);
    std::vector<int> ytr, yte;
    for (Eigen::Index i = 0; i < N; ++i) {
        const Eigen::Index r = idx[static_cast<std::size_t>(i)];
        if (i < n_train) {
            Xtr.row(i) = beliefs.row(r);
            ytr.push_back(labels[static_cast<std::size_t>(r)] != 0);
        } else {
            Xte.row(i - n_train) = beliefs.row(r);
            yte.push_back(labels[static_cast<std::size_t>(r)] != 0);
        }
    }
    const Eigen::RowVectorXd mean = Xtr.colwise().mean();
    Eigen::RowVectorXd sd = ((Xtr.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(n_train)).sqrt();
    for (Eigen::Index j = 0; j < H; ++j) {
        if (sd(j) < 1e-12) sd(j) = 1.0;
    }
    Xtr = (Xtr.rowwise() - mean).array().rowwise() / sd.array();
    Xte = (Xte.rowwise() - mean).array().rowwise() / sd.array();
    Eigen::VectorXd y(n_train);
    for (Eigen::Index i = 0; i < n_train; ++i) y(i) = ytr[static_cast<std::size_t>(i)];

    // Full-batch Adam on binary cross-entropy. Small L2 penalties on the read-out weights and the
    // attention scores keep attention near uniform unless a neuron carries signal.
    Probe p;
    p.s = Eigen::VectorXd::Zero(H);
    p.w = Eigen::VectorXd::Zero(H);
    for (Eigen::Index j = 0; j < H; ++j) p.w(j) = 0.01 * standard_normal(rng);
    const double l2 = 1e-2, l2_scores = 1e-3;
    const Eigen::Index P = 2 * H + 1;
    Eigen::VectorXd m = Eigen::VectorXd::Zero(P), v = Eigen::VectorXd::Zero(P), g(P);
    for (int it = 1; it <= cfg.steps; ++it) {
        const Eigen::VectorXd a = p.attention();
        const Eigen::VectorXd z = p.logits(Xtr);
        const Eigen::VectorXd r = (z.array().unaryExpr([](double t) { return 1.0 / (1.0 + std::exp(-t)); }) - y.array()).matrix() /
                                  static_cast<double>(n_train);
        const Eigen::VectorXd xr = Xtr.transpose() * r;
        const Eigen::VectorXd u = p.w.cwiseProduct(xr);
        g.head(H) = a.cwiseProduct((u.array() - a.dot(u)).matrix()) + 2.0 * l2_scores * p.s;
        g.segment(H, H) = a.cwiseProduct(xr) + 2.0 * l2 * p.w;
        g(2 * H) = r.sum();
        m = 0.9 * m + 0.1 * g;
        v = 0.999 * v + 0.001 * g.cwiseAbs2();
        const double c1 = 1.0 - std::pow(0.9, it), c2 = 1.0 - std::pow(0.999, it);
        const Eigen::VectorXd step = cfg.lr * (m / c1).array() / ((v / c2).array().sqrt() + 1e-8);
        p.s -= step.head(H);
        p.w -= step.segment(H, H);
        p.b -= step(2 * H);
    }

    ProbeResult res;
    res.attention = p.attention();
    res.test_accuracy = accuracy(p, Xte, yte);
    std::vector<std::uint8_t> social(static_cast<std::size_t>(H), 0);
    for (Eigen::Index j = 0; j < H; ++j) {
        if (res.attention(j) > cfg.threshold) {
            res.social.push_back(static_cast<int>(j));
            res.social_mass += res.attention(j);
            social[static_cast<std::size_t>(j)] = 1;
        }
    }
    // Standardised space: the training distribution of every neuron is N(0, 1).
    Rng noise = make_rng(cfg.seed, 7);
    auto randomised = [&](auto pick) {
        Eigen::MatrixXd X = Xte;
        for (Eigen::Index j = 0; j < H; ++j) {
            if (!pick(social[static_cast<std::size_t>(j)])) continue;
            for (Eigen::Index i = 0; i < X.rows(); ++i) X(i, j) = standard_normal(noise);
        }
        return accuracy(p, X, yte);
    };
    res.acc_randomise_social = randomised([](bool s) { return s; });
    res.acc_randomise_complement = randomised([](bool s) { return !s; });
    res.acc_randomise_all = randomised([](bool) { return true; });
    return res;
}

std::vector<NeuronScore> goal_neuron_rank(const Eigen::MatrixXd& beliefs, std::span<const int> inside_goal, int top_k) {
    const Eigen::Index N = beliefs.rows(), H = beliefs.cols();
    if (static_cast<Eigen::Index>(inside_goal.size()) != N) throw std::invalid_argument("goal_neuron_rank: label count mismatch");
    Eigen::VectorXd ind(N);
    for (Eigen::Index i = 0; i < N; ++i) ind(i) = inside_goal[static_cast<std::size_t>(i)] != 0;
    const double n1 = ind.sum(), n0 = static_cast<double>(N) - n1;
    const Eigen::VectorXd ic = ind.array() - ind.mean();
    const double ind_norm = ic.norm();
    std::vector<NeuronScore> out;
    for (Eigen::Index j = 0; j < H; ++j) {
        NeuronScore s;
        s.neuron = static_cast<int>(j);
        const Eigen::VectorXd col = beliefs.col(j);
        const Eigen::VectorXd cc = col.array() - col.mean();
        const double cn = cc.norm();
        s.variance = N > 0 ? cc.squaredNorm() / static_cast<double>(N) : 0.0;
        s.correlation = (cn > 1e-12 && ind_norm > 1e-12) ? cc.dot(ic) / (cn * ind_norm) : 0.0;
        s.mean_inside = n1 > 0 ? col.dot(ind) / n1 : 0.0;
        s.mean_outside = n0 > 0 ? (col.sum() - col.dot(ind)) / n0 : 0.0;
        out.push_back(s);
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const NeuronScore& a, const NeuronScore& b) { return std::abs(a.correlation) > std::abs(b.correlation); });
    if (top_k > 0 && static_cast<std::size_t>(top_k) < out.size()) out.resize(static_cast<std::size_t>(top_k));
    return out;
}

// ---------------------------------------------------------------------------

Script parse_script(const std::string& s) {
    if (s == "correct") return Script::Correct;
    if (s == "wrong-halfway") return Script::WrongHalfway;
    if (s == "dropout-halfway") return Script::DropoutHalfway;
    if (s == "wrong-then-dropout") return Script::WrongThenDropout;
    if (s == "absent") return Script::Absent;
    throw std::invalid_argument("unknown expert script '" + s + "'");
}

std::string to_string(Script s) {
    switch (s) {
        case Script::Correct: return "correct";
        case Script::WrongHalfway: return "wrong-halfway";
        case Script::DropoutHalfway: return "dropout-halfway";
        case Script::WrongThenDropout: return "wrong-then-dropout";
        case Script::Absent: return "absent";
    }
    return "?";
}

std::vector<int> wrong_route(const game::CyclicOrder& order) {
    if (order.size() < 4) throw std::invalid_argument("wrong_route: every Hamiltonian cycle on < 4 goals is rewarding");
    auto seq = order.sequence();
    std::swap(seq[1], seq[2]);
    return seq;
}

std::vector<int> TrajectoryComparison::goals_entered(int player, int from, int to) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].player == player && entry_steps[i] >= from && entry_steps[i] < to) out.push_back(entries[i].goal);
    }
    return out;
}

TrajectoryComparison trajectory_compare(const TaskSpec& task_in, const env::PolicyFactory& agent, Script script,
                                        std::uint64_t seed) {
    TaskSpec task = pin_direction(task_in, seed);
    const bool dropout = script == Script::DropoutHalfway || script == Script::WrongThenDropout;
    task.dropout = script == Script::Absent ? expert::DropoutScheme::full()
                                            : (dropout ? expert::DropoutScheme::half() : expert::DropoutScheme::no());
    const auto world = std::make_shared<const env::World>(env::build_world(task));
    const int half = task.episode_length / 2;
    const game::CyclicOrder demonstrated = task.expert_direction > 0 ? task.order : task.order.inverse();

    std::unique_ptr<expert::ExpertBot> bot;
    if (script == Script::WrongThenDropout) {
        bot = std::make_unique<expert::ExpertBot>(derive_seed(seed, 2), task.expert.noise, wrong_route(demonstrated));
    } else if (script != Script::Absent) {
        bot = std::make_unique<expert::ExpertBot>(derive_seed(seed, 2), task.expert.noise);
    }
    expert::ExpertBot* raw = bot.get();
    std::function<void(const Episode&, const env::StepResult&)> observer;
    if (script == Script::WrongHalfway) {
        observer = [&](const Episode& ep, const env::StepResult&) {
            if (ep.t() == half) raw->set_route(wrong_route(demonstrated), false);
        };
    }
    const auto p = play(task, world, &agent, std::move(bot), seed, true, observer);

    TrajectoryComparison out;
    out.script = script;
    out.demonstrated = demonstrated;
    out.visibility = p.log.visibility;
    out.entries = p.log.entries;
    out.entry_steps = p.log.entry_steps;
    out.scores = p.log.scores;
    for (const auto& step : p.log.poses) {
        out.agent.push_back(step[0]);
        if (step.size() > 1) out.expert.push_back(step[1]);
    }
    return out;
}

}  // namespace goalcycle::analysis
