#include "goalcycle/train.hpp"

#include <json.hpp>

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

namespace goalcycle::train {

using agent::Params;
using agent::Unroll;
using nlohmann::json;

std::string Ablation::tag() const {
    std::string t;
    t += memory ? "M" : "-";
    t += expert ? "E" : "-";
    t += dropout ? "D" : "-";
    t += attention ? "AL" : "--";
    switch (distribution) {
        case Distribution::Fixed: break;
        case Distribution::ADR: t += "-ADR"; break;
        case Distribution::DR: t += "--DR"; break;
    }
    return t;
}

Ablation Ablation::parse(const std::string& raw) {
    std::string s;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw.compare(i, 3, "\xE2\x80\x93") == 0) {  // en dash
            s += '-';
            i += 2;
        } else {
            s += raw[i];
        }
    }
    auto bad = [&] { return ConfigError("unknown ablation tag '" + raw + "'"); };
    if (s.size() < 5) throw bad();
    const std::string head = s.substr(0, 5), tail = s.substr(5);
    Ablation a;
    auto flag = [&](std::size_t i, char on) {
        if (head[i] == on) return true;
        if (head[i] == '-') return false;
        throw bad();
    };
    a.memory = flag(0, 'M');
    a.expert = flag(1, 'E');
    a.dropout = flag(2, 'D');
    const std::string al = head.substr(3, 2);
    if (al == "AL") {
        a.attention = true;
    } else if (al == "--") {
        a.attention = false;
    } else {
        throw bad();
    }
    if (tail.empty() || tail == "---") {
        a.distribution = Distribution::Fixed;
    } else if (tail == "-ADR") {
        a.distribution = Distribution::ADR;
    } else if (tail == "--DR") {
        a.distribution = Distribution::DR;
    } else {
        throw bad();
    }
    return a;
}

void validate(const TrainConfig& c) {
    auto fail = [](const std::string& m) { throw ConfigError("train: " + m); };
    if (c.unroll < 1 || c.unroll > c.episode_length) fail("unroll must be in [1, episode_length]");
    if (!(c.loss.gamma > 0.0 && c.loss.gamma < 1.0)) fail("gamma must be in (0, 1)");
    if (!(c.loss.gae_lambda >= 0.0 && c.loss.gae_lambda <= 1.0)) fail("gae_lambda must be in [0, 1]");
    if (c.num_envs < 1) fail("num_envs must be >= 1");
    if (c.total_steps <= 0) fail("budget must be positive");
    if (c.attention_offset < 0) fail("attention_offset must be >= 0");
    if (c.target_noise < 0.0) fail("target_noise must be >= 0");
    if (!(c.dropout_p >= 0.0 && c.dropout_p <= 1.0)) fail("dropout_p must be in [0, 1]");
    if (!(c.adam.lr > 0.0)) fail("learning rate must be positive");
    if (c.eval_every <= 0 || c.eval_tasks < 0 || c.eval_episode_length < 2) fail("bad evaluation settings");
    if (c.actor_threads < 0 || c.queue_capacity < 1) fail("bad actor/queue settings");
    if (c.net.num_rays < 1 || c.net.belief < 1 || c.net.enc1 < 1 || c.net.enc2 < 1) fail("bad network widths");
    try {
        validate(c.world);
    } catch (const std::invalid_argument& e) {
        fail(e.what());
    }
}

TrainConfig desk_scale_config(std::uint64_t seed) {
    TrainConfig c;
    c.seed = seed;
    c.adam.lr = 1e-3;
    c.loss.entropy_coef = 0.003;
    c.expert.speed = 0.6;
    c.dropout_p = 0.003;
    c.episode_length = 600;
    c.eval_episode_length = 600;
    c.num_envs = 16;
    c.unroll = 64;
    c.total_steps = 2'000'000;
    c.eval_every = 250'000;
    c.eval_tasks = 12;
    return c;
}

// ---------------------------------------------------------------------------

TaskSource::TaskSource(const TrainConfig& cfg, std::optional<adr::ADRState> adr_state) : cfg_(cfg) {
    if (cfg.ablation.distribution == Distribution::ADR) {
        adr_ = adr_state ? std::move(adr_state) : std::optional(adr::reference_config(cfg.adr));
    } else if (cfg.ablation.distribution == Distribution::DR) {
        auto s = adr::reference_config(cfg.adr);
        for (auto& p : s.params) {
            p.lo = p.hard_min;
            p.hi = p.hard_max;
        }
        s.config.boundary_prob = 0.0;
        dr_ = std::move(s);
    }
}

env::TaskSpec TaskSource::base_task(Rng& rng) const {
    env::WorldParams w = cfg_.world;
    w.seed = rng() & kTrainSeedMask;
    env::TaskSpec t = env::make_task(w, rng);
    t.expert = cfg_.expert;
    t.dropout = cfg_.ablation.dropout ? expert::DropoutScheme::probabilistic(cfg_.dropout_p) : expert::DropoutScheme::no();
    t.episode_length = cfg_.episode_length;
    t.num_rays = cfg_.net.num_rays;
    return t;
}

TaskSource::Draw TaskSource::draw(Rng& rng) {
    Draw d;
    d.task = base_task(rng);
    std::lock_guard lock(m_);
    const adr::ADRState* s = adr_ ? &*adr_ : (dr_ ? &*dr_ : nullptr);
    if (s) {
        const auto smp = adr::sample_task_params(*s, rng);
        adr::apply_params(*s, smp.lambda, d.task);
        if (!cfg_.ablation.dropout) d.task.dropout = expert::DropoutScheme::no();
        if (adr_) d.pinned = smp.pinned;
    }
    return d;
}

void TaskSource::report(const EpisodeStat& stat, std::optional<double> ct) {
    std::lock_guard lock(m_);
    if (!adr_) return;
    if (stat.pinned && ct) adr::push_metric(*adr_, *stat.pinned, *ct);
    if (++reports_ % adr_->config.update_every == 0) adr::update_boundaries(*adr_);
}

std::optional<adr::ADRState> TaskSource::adr_state() const {
    std::lock_guard lock(m_);
    return adr_;
}

// ---------------------------------------------------------------------------

struct ActorGroup::Stream {
    std::unique_ptr<env::Episode> ep;
    std::unique_ptr<expert::ExpertBot> bot;
    std::optional<adr::Pin> pinned;
    int prev_action = -1;
    bool fresh = true;
};

ActorGroup::ActorGroup(const TrainConfig& cfg, std::uint64_t seed, TaskSource& source)
    : cfg_(cfg), source_(&source), rng_(seed), streams_(static_cast<std::size_t>(cfg.num_envs)) {
    belief_ = agent::Belief<float>::zeros(cfg.net, cfg.num_envs);
}

ActorGroup::~ActorGroup() = default;
ActorGroup::ActorGroup(ActorGroup&&) noexcept = default;

void ActorGroup::start_episode(Stream& s) {
    for (int attempt = 0;; ++attempt) {
        auto d = source_->draw(rng_);
        std::vector<env::Role> roster{env::Role::Agent};
        if (cfg_.ablation.expert) roster.push_back(env::Role::Expert);
        try {
            s.ep = std::make_unique<env::Episode>(d.task, roster);
        } catch (const GenerationError&) {
            if (attempt >= 20) throw;
            continue;
        }
        s.pinned = d.pinned;
        break;
    }
    s.bot = cfg_.ablation.expert ? std::make_unique<expert::ExpertBot>(rng_(), s.ep->task().expert.noise) : nullptr;
    for (int i = 0; i < s.ep->num_players(); ++i) {
        if (i == s.ep->expert_index()) s.bot->begin_episode(*s.ep, i);
    }
    s.prev_action = -1;
    s.fresh = true;
}

void ActorGroup::collect(const Params<float>& params, Unroll<float>& u, std::vector<EpisodeStat>& finished) {
    const int T = cfg_.unroll, B = cfg_.num_envs;
    if (u.T != T || u.B != B || u.X.rows() != cfg_.net.input_size()) u.allocate(cfg_.net, T, B);
    u.initial = belief_;
    const auto TB = static_cast<std::size_t>(T) * static_cast<std::size_t>(B);
    std::vector<std::uint8_t> raw_mask(TB, 0);
    Eigen::MatrixXf raw_target = Eigen::MatrixXf::Zero(2, static_cast<Eigen::Index>(TB));
    std::vector<int> prev(static_cast<std::size_t>(B));
    std::vector<env::Command> cmds;

    for (int t = 0; t <= T; ++t) {
        for (int b = 0; b < B; ++b) {
            auto& s = streams_[static_cast<std::size_t>(b)];
            if (!s.ep) start_episode(s);
            const auto col = static_cast<std::size_t>(t) * static_cast<std::size_t>(B) + static_cast<std::size_t>(b);
            const env::Observation obs = s.ep->observe(0);
            agent::build_input<float>(obs, s.prev_action, u.X.col(static_cast<Eigen::Index>(col)));
            u.prev_actions[col] = s.prev_action;
            u.resets[col] = s.fresh;
            prev[static_cast<std::size_t>(b)] = s.prev_action;
            if (t == T) continue;
            if (s.fresh) {
                belief_.h.col(b).setZero();
                belief_.c.col(b).setZero();
                s.fresh = false;
            }
            if (obs.avatar_target) {
                raw_mask[col] = 1;
                raw_target.col(static_cast<Eigen::Index>(col)) =
                    env::scale_avatar_target(*obs.avatar_target, s.ep->task().world.world_size).cast<float>();
            }
        }
        if (t == T) break;
        const auto out = agent::forward<float>(params, belief_, u.X.middleCols(static_cast<Eigen::Index>(t) * B, B), prev);
        for (int b = 0; b < B; ++b) {
            auto& s = streams_[static_cast<std::size_t>(b)];
            const auto col = static_cast<std::size_t>(t) * static_cast<std::size_t>(B) + static_cast<std::size_t>(b);
            const int a = agent::sample_action(out.logits.col(b), rng_);
            u.actions[col] = a;
            cmds.assign(1, static_cast<env::Action>(a));
            const int e = s.ep->expert_index();
            if (e >= 0) {
                try {
                    cmds.push_back(s.bot->act(*s.ep, e));
                } catch (const PlanningError&) {
                    cmds.push_back(env::Action::Noop);
                }
            }
            const auto result = s.ep->step(cmds);
            if (e >= 0) s.bot->after_step(*s.ep, e, result);
            u.rewards[col] = static_cast<float>(result.rewards[0]);
            s.prev_action = a;
            u.dones[col] = s.ep->done();
            if (s.ep->done()) {
                EpisodeStat st;
                st.agent_score = s.ep->player(0).score;
                st.expert_score = e >= 0 ? s.ep->player(e).score : 0.0;
                st.task = s.ep->task();
                st.pinned = s.pinned;
                finished.push_back(std::move(st));
                s.ep.reset();
            }
        }
    }

    // Attention targets, shifted by the prediction offset within one episode segment.
    const int n = cfg_.attention_offset;
    for (int t = 0; t < T; ++t) {
        for (int b = 0; b < B; ++b) {
            const auto col = static_cast<std::size_t>(t) * static_cast<std::size_t>(B) + static_cast<std::size_t>(b);
            u.att_mask[col] = 0;
            if (t + n >= T) continue;
            bool crosses = false;
            for (int k = t; k < t + n && !crosses; ++k) {
                crosses = u.dones[static_cast<std::size_t>(k) * static_cast<std::size_t>(B) + static_cast<std::size_t>(b)];
            }
            const auto src = col + static_cast<std::size_t>(n) * static_cast<std::size_t>(B);
            if (crosses || !raw_mask[src]) continue;
            u.att_mask[col] = 1;
            u.att_target.col(static_cast<Eigen::Index>(col)) = raw_target.col(static_cast<Eigen::Index>(src));
            if (cfg_.target_noise > 0.0) {
                for (int k = 0; k < 2; ++k) {
                    u.att_target(k, static_cast<Eigen::Index>(col)) += static_cast<float>(cfg_.target_noise * standard_normal(rng_));
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------

std::vector<env::TaskSpec> eval_tasks(const TrainConfig& cfg) {
    Rng rng = make_rng(cfg.seed, 0xE7A1);
    std::vector<env::TaskSpec> out;
    for (int k = 0; k < cfg.eval_tasks; ++k) {
        env::WorldParams w = cfg.world;
        w.seed = rng() & kTrainSeedMask;
        env::TaskSpec t = env::make_task(w, rng);
        t.expert = cfg.expert;
        t.episode_length = cfg.eval_episode_length;
        t.num_rays = cfg.net.num_rays;
        out.push_back(std::move(t));
    }
    return out;
}

EvalPoint evaluate(const Params<float>& params, std::span<const env::TaskSpec> tasks, std::uint64_t seed, bool greedy,
                   long step) {
    const auto snapshot = std::make_shared<const Params<float>>(params);
    const auto factory = agent::agent_factory(snapshot, greedy);
    EvalPoint p;
    p.step = step;
    int n = 0;
    for (std::size_t k = 0; k < tasks.size(); ++k) {
        ct::CTMeasurement m;
        try {
            m = ct::run_ct_eval(factory, tasks[k], derive_seed(seed, k));
        } catch (const UndefinedMetric&) {
            continue;
        }
        p.ct += m.ct;
        p.E += m.E;
        p.A_full += m.A_full;
        p.A_solo += m.A_solo;
        p.A_half += m.A_half;
        ++n;
    }
    if (n > 0) {
        p.ct /= n;
        p.E /= n;
        p.A_full /= n;
        p.A_solo /= n;
        p.A_half /= n;
    }
    return p;
}

// ---------------------------------------------------------------------------

std::string config_to_json(const TrainConfig& c) {
    json j;
    j["net"] = {{"num_rays", c.net.num_rays}, {"enc1", c.net.enc1},   {"enc2", c.net.enc2},
                {"belief", c.net.belief},     {"memory", c.net.memory}, {"pred1", c.net.pred1},
                {"pred2", c.net.pred2}};
    j["loss"] = {{"gamma", c.loss.gamma},
                 {"gae_lambda", c.loss.gae_lambda},
                 {"value_coef", c.loss.value_coef},
                 {"entropy_coef", c.loss.entropy_coef},
                 {"attention_weight", c.loss.attention_weight}};
    j["adam"] = {{"lr", c.adam.lr},
                 {"beta1", c.adam.beta1},
                 {"beta2", c.adam.beta2},
                 {"eps", c.adam.eps},
                 {"max_grad_norm", c.adam.max_grad_norm}};
    j["ablation"] = c.ablation.tag();
    j["world"] = {{"world_size", c.world.world_size},
                  {"v_obstacle_density", c.world.v_obstacle_density},
                  {"h_obstacle_density", c.world.h_obstacle_density},
                  {"terrain_amplitude", c.world.terrain_amplitude},
                  {"terrain_frequency", c.world.terrain_frequency},
                  {"num_goals", c.world.num_goals}};
    j["expert"] = {{"speed", c.expert.speed}, {"noise", c.expert.noise}};
    j["dropout_p"] = c.dropout_p;
    j["episode_length"] = c.episode_length;
    j["num_envs"] = c.num_envs;
    j["unroll"] = c.unroll;
    j["total_steps"] = c.total_steps;
    j["attention_offset"] = c.attention_offset;
    j["target_noise"] = c.target_noise;
    j["normalise_advantages"] = c.normalise_advantages;
    j["eval_every"] = c.eval_every;
    j["eval_tasks"] = c.eval_tasks;
    j["eval_episode_length"] = c.eval_episode_length;
    j["eval_greedy"] = c.eval_greedy;
    j["actor_threads"] = c.actor_threads;
    j["queue_capacity"] = c.queue_capacity;
    j["seed"] = c.seed;
    return j.dump();
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    json j;
    j["version"] = 1;
    j["config"] = json::parse(ck.config_json.empty() ? "{}" : ck.config_json);
    const auto& nc = ck.params.config();
    j["net"] = {{"num_rays", nc.num_rays}, {"enc1", nc.enc1},     {"enc2", nc.enc2}, {"belief", nc.belief},
                {"memory", nc.memory},     {"pred1", nc.pred1}, {"pred2", nc.pred2}};
    for (int id = 0; id < agent::kNumParamIds; ++id) {
        const auto m = ck.params.mat(id);
        std::vector<float> rows;
        rows.reserve(static_cast<std::size_t>(m.size()));
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) rows.push_back(m(r, c));
        }
        j["tensors"].push_back({{"name", agent::param_name(id)}, {"shape", {m.rows(), m.cols()}}, {"values", rows}});
    }
    j["step"] = ck.step;
    j["adam"] = {{"steps", ck.adam_steps},
                 {"m", std::vector<float>(ck.adam_m.data(), ck.adam_m.data() + ck.adam_m.size())},
                 {"v", std::vector<float>(ck.adam_v.data(), ck.adam_v.data() + ck.adam_v.size())}};
    j["rng"] = ck.rng_state;
    if (ck.adr) j["adr"] = json::parse(adr::serialize(*ck.adr));
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp);
        if (!f) throw IoError("checkpoint: cannot write " + path);
        f << j.dump();
        if (!f) throw IoError("checkpoint: write failed for " + path);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) throw IoError("checkpoint: cannot move into place " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("checkpoint: cannot read " + path);
    try {
        const json j = json::parse(f);
        if (j.at("version").get<int>() != 1) throw IoError("checkpoint: unsupported version");
        Checkpoint ck;
        ck.config_json = j.at("config").dump();
        const auto& n = j.at("net");
        agent::NetConfig nc;
        nc.num_rays = n.at("num_rays");
        nc.enc1 = n.at("enc1");
        nc.enc2 = n.at("enc2");
        nc.belief = n.at("belief");
        nc.memory = n.at("memory");
        nc.pred1 = n.at("pred1");
        nc.pred2 = n.at("pred2");
        ck.params = Params<float>(nc);
        const auto& ts = j.at("tensors");
        if (ts.size() != static_cast<std::size_t>(agent::kNumParamIds)) throw IoError("checkpoint: tensor count mismatch");
        for (int id = 0; id < agent::kNumParamIds; ++id) {
            const auto& t = ts[static_cast<std::size_t>(id)];
            auto m = ck.params.mat(id);
            if (t.at("name").get<std::string>() != agent::param_name(id) || t.at("shape")[0].get<Eigen::Index>() != m.rows() ||
                t.at("shape")[1].get<Eigen::Index>() != m.cols()) {
                throw IoError("checkpoint: tensor " + std::string(agent::param_name(id)) + " does not match the network");
            }
            const auto vals = t.at("values").get<std::vector<float>>();
            if (static_cast<Eigen::Index>(vals.size()) != m.size()) throw IoError("checkpoint: tensor size mismatch");
            std::size_t k = 0;
            for (Eigen::Index r = 0; r < m.rows(); ++r) {
                for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = vals[k++];
            }
        }
        ck.step = j.at("step");
        ck.adam_steps = j.at("adam").at("steps");
        const auto am = j.at("adam").at("m").get<std::vector<float>>();
        const auto av = j.at("adam").at("v").get<std::vector<float>>();
        ck.adam_m = Eigen::Map<const Eigen::VectorXf>(am.data(), static_cast<Eigen::Index>(am.size()));
        ck.adam_v = Eigen::Map<const Eigen::VectorXf>(av.data(), static_cast<Eigen::Index>(av.size()));
        ck.rng_state = j.at("rng");
        if (j.contains("adr")) ck.adr = adr::deserialize(j.at("adr").dump());
        return ck;
    } catch (const json::exception& e) {
        throw IoError(std::string("checkpoint: malformed file: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw IoError(std::string("checkpoint: ") + e.what());
    }
}

// ---------------------------------------------------------------------------

namespace {

struct Batch {
    Unroll<float> unroll;
    std::vector<EpisodeStat> finished;
};

struct Accum {
    double agent = 0, expert = 0, policy = 0, value = 0, entropy = 0, attention = 0, grad = 0;
    long episodes = 0, updates = 0;
};

void normalise(std::vector<float>& adv) {
    if (adv.size() < 2) return;
    double mean = 0, sq = 0;
    for (float a : adv) mean += a;
    mean /= static_cast<double>(adv.size());
    for (float a : adv) sq += (a - mean) * (a - mean);
    const double sd = std::sqrt(sq / static_cast<double>(adv.size())) + 1e-8;
    for (float& a : adv) a = static_cast<float>((a - mean) / sd);
}

}  // namespace

TrainResult train(const TrainConfig& cfg_in, const TrainHooks& hooks, const Checkpoint* resume) {
    TrainConfig cfg = cfg_in;
    cfg.net.memory = cfg.ablation.memory;
    if (!cfg.ablation.attention) cfg.loss.attention_weight = 0.0;
    validate(cfg);

    Rng init_rng = make_rng(cfg.seed, 1);
    TrainResult res;
    res.params = Params<float>(cfg.net);
    res.params.init(init_rng);
    agent::Adam<float> opt(res.params.size(), cfg.adam);
    long step = 0;
    std::optional<adr::ADRState> adr_init;
    if (resume) {
        if (!(resume->params.config() == cfg.net)) throw ConfigError("train: checkpoint network does not match config");
        res.params = resume->params;
        step = resume->step;
        opt.m() = resume->adam_m;
        opt.v() = resume->adam_v;
        opt.set_steps(resume->adam_steps);
        adr_init = resume->adr;
    }
    TaskSource source(cfg, adr_init);
    const auto tasks = eval_tasks(cfg);
    const std::uint64_t eval_seed = derive_seed(cfg.seed, 0xE7A2);
    Rng ct_rng = make_rng(cfg.seed, 4);
    if (resume && !resume->rng_state.empty()) {
        std::istringstream in(resume->rng_state);
        in >> ct_rng;
    }

    agent::Params<float> grad(cfg.net);
    Accum acc;
    long next_log = step + cfg.log_every;
    long next_eval = step + cfg.eval_every;

    auto write_checkpoint = [&] {
        if (hooks.checkpoint_path.empty()) return;
        Checkpoint ck;
        ck.config_json = config_to_json(cfg);
        ck.params = res.params;
        ck.step = step;
        ck.adam_steps = opt.steps();
        ck.adam_m = opt.m();
        ck.adam_v = opt.v();
        std::ostringstream os;
        os << ct_rng;
        ck.rng_state = os.str();
        ck.adr = source.adr_state();
        save_checkpoint(hooks.checkpoint_path, ck);
    };

    auto learn = [&](Batch& batch) {
        const auto& u = batch.unroll;
        try {
            auto tg = agent::compute_targets(res.params, u, cfg.loss);
            if (cfg.normalise_advantages) normalise(tg.advantages);
            const auto terms = agent::loss_and_gradients(res.params, u, tg, cfg.loss, grad);
            acc.grad += opt.step(res.params, grad);
            if (!res.params.data.allFinite()) throw NumericError("train: parameters became non-finite");
            acc.policy += terms.policy;
            acc.value += terms.value;
            acc.entropy += terms.entropy;
            acc.attention += terms.attention;
            ++acc.updates;
            ++res.updates;
        } catch (const NumericError&) {
            write_checkpoint();
            throw;
        }
        step += static_cast<long>(u.T) * u.B;
        for (const auto& st : batch.finished) {
            acc.agent += st.agent_score;
            acc.expert += st.expert_score;
            ++acc.episodes;
            std::optional<double> ct_value;
            if (st.pinned) {
                // Training CT for boundary-pinned tasks, measured with the current parameters.
                try {
                    env::TaskSpec t = st.task;
                    ct_value = evaluate(res.params, std::span(&t, 1), ct_rng(), cfg.eval_greedy, step).ct;
                } catch (const GenerationError&) {
                    ct_value = 0.0;
                }
            }
            source.report(st, ct_value);
        }
        if (step >= next_log) {
            MetricsRow row;
            row.step = step;
            row.updates = res.updates;
            row.episodes = acc.episodes;
            if (acc.episodes > 0) {
                row.agent_score = acc.agent / static_cast<double>(acc.episodes);
                row.expert_score = acc.expert / static_cast<double>(acc.episodes);
            }
            if (acc.updates > 0) {
                const double n = static_cast<double>(acc.updates);
                row.policy_loss = acc.policy / n;
                row.value_loss = acc.value / n;
                row.entropy = acc.entropy / n;
                row.attention_loss = acc.attention / n;
                row.grad_norm = acc.grad / n;
            }
            res.log.push_back(row);
            if (hooks.on_log) hooks.on_log(row);
            acc = Accum{};
            while (next_log <= step) next_log += cfg.log_every;
        }
        if (step >= next_eval || step >= cfg.total_steps) {
            const auto p = evaluate(res.params, tasks, eval_seed, cfg.eval_greedy, step);
            res.evals.push_back(p);
            if (hooks.on_eval) hooks.on_eval(p);
            while (next_eval <= step) next_eval += cfg.eval_every;
        }
    };

    if (cfg.actor_threads == 0) {
        ActorGroup actor(cfg, derive_seed(cfg.seed, 100), source);
        Batch batch;
        while (step < cfg.total_steps) {
            batch.finished.clear();
            actor.collect(res.params, batch.unroll, batch.finished);
            learn(batch);
        }
    } else {
        BoundedQueue<Batch> queue(static_cast<std::size_t>(cfg.queue_capacity));
        std::mutex snap_m;
        auto snapshot = std::make_shared<const Params<float>>(res.params);
        std::atomic<bool> stop{false};
        std::exception_ptr actor_error;
        std::mutex err_m;
        std::vector<std::thread> threads;
        for (int k = 0; k < cfg.actor_threads; ++k) {
            threads.emplace_back([&, k] {
                try {
                    ActorGroup actor(cfg, derive_seed(cfg.seed, 100 + static_cast<std::uint64_t>(k)), source);
                    while (!stop) {
                        std::shared_ptr<const Params<float>> p;
                        {
                            std::lock_guard lock(snap_m);
                            p = snapshot;
                        }
                        Batch b;
                        actor.collect(*p, b.unroll, b.finished);
                        if (!queue.push(std::move(b))) break;
                    }
                } catch (...) {
                    std::lock_guard lock(err_m);
                    if (!actor_error) actor_error = std::current_exception();
                    queue.close();
                }
            });
        }
        try {
            while (step < cfg.total_steps) {
                auto b = queue.pop();
                if (!b) break;
                learn(*b);
                auto fresh = std::make_shared<const Params<float>>(res.params);
                std::lock_guard lock(snap_m);
                snapshot = std::move(fresh);
            }
        } catch (...) {
            stop = true;
            queue.close();
            for (auto& t : threads) t.join();
            throw;
        }
        stop = true;
        queue.close();
        for (auto& t : threads) t.join();
        if (actor_error) std::rethrow_exception(actor_error);
    }
    res.steps = step;
    res.adr = source.adr_state();
    write_checkpoint();
    return res;
}

}  // namespace goalcycle::train
