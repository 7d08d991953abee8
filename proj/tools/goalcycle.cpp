// Command-line entry point. Exit codes: 0 success, 2 configuration error, 3 runtime error.
#include "goalcycle/harness.hpp"
#include "goalcycle/live.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

using namespace goalcycle;
using namespace goalcycle::harness;
namespace fs = std::filesystem;

namespace {

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> threads;
};

ExperimentConfig resolve(const Globals& g) {
    ExperimentConfig c = g.config.empty() ? ExperimentConfig{} : load_config(g.config);
    if (g.seed) c.seed = *g.seed;
    if (g.out) c.out = *g.out;
    if (g.threads) c.threads = *g.threads;
    finalize(c);
    return c;
}

std::string out_path(const ExperimentConfig& c, const std::string& name) { return (fs::path(c.out) / name).string(); }

/// Creates the output directory and writes resolved_config.ini.
void prepare(const ExperimentConfig& c, const std::string& command) {
    fs::create_directories(c.out);
    std::ofstream f(out_path(c, "resolved_config.ini"));
    if (!f) throw IoError("cannot write " + out_path(c, "resolved_config.ini"));
    f << "# command: " << command << "\n" << resolved_config(c);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path);
    f << text;
}

std::vector<env::TaskSpec> tasks_for(const ExperimentConfig& c, const std::string& suite) {
    if (!suite.empty()) {
        auto tasks = probe_suite(suite);
        for (auto& t : tasks) {
            t.expert = c.train.expert;
            t.num_rays = c.train.net.num_rays;
        }
        return tasks;
    }
    std::vector<env::TaskSpec> out;
    for (int k = 0; k < c.tasks; ++k) out.push_back(task_from_config(c, derive_seed(c.seed, 1000 + static_cast<std::uint64_t>(k))));
    return out;
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(3) << v;
    return os.str();
}

// Commands ---------------------------------------------------------------------------

int cmd_gen(const ExperimentConfig& c, const std::string& suite) {
    prepare(c, "gen");
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& t : suite.empty() ? std::vector<env::TaskSpec>{task_from_config(c, c.seed)} : tasks_for(c, suite)) {
        arr.push_back(nlohmann::json::parse(task_to_json(t)));
    }
    const std::string text = (suite.empty() ? arr[0] : arr).dump(2);
    write_text(out_path(c, "task.json"), text + "\n");
    std::ofstream m(out_path(c, "metrics.csv"));
    CsvWriter csv(m, {"task", "num_goals", "crossings", "world_seed"});
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const auto t = task_from_json(arr[i].dump());
        const env::World w = env::build_world(t);
        std::vector<Vec2> centres;
        for (const auto& g : w.goals) centres.push_back(g.centre);
        csv.values(static_cast<int>(i), t.world.num_goals, game::classify_crossings(centres, t.order), std::to_string(t.world.seed));
    }
    std::cout << text << "\n";
    return 0;
}

int cmd_train(const ExperimentConfig& c, const std::string& resume) {
    prepare(c, "train");
    std::ofstream mf(out_path(c, "metrics.csv")), ef(out_path(c, "eval.csv"));
    CsvWriter metrics(mf, metrics_header()), evals(ef, eval_header());
    train::TrainHooks hooks;
    hooks.checkpoint_path = out_path(c, "checkpoint.json");
    hooks.on_log = [&](const train::MetricsRow& r) {
        write_metrics_row(metrics, r);
        std::cout << "step " << r.step << " agent " << fmt(r.agent_score) << " expert " << fmt(r.expert_score) << " entropy "
                  << fmt(r.entropy) << "\n";
    };
    hooks.on_eval = [&](const train::EvalPoint& p) {
        write_eval_row(evals, p);
        std::cout << "eval " << p.step << " ct " << fmt(p.ct) << " (E " << fmt(p.E) << ", full " << fmt(p.A_full) << ", solo "
                  << fmt(p.A_solo) << ", half " << fmt(p.A_half) << ")\n";
    };
    std::optional<train::Checkpoint> ck;
    if (!resume.empty()) ck = train::load_checkpoint(resume);
    const auto r = train::train(c.train, hooks, ck ? &*ck : nullptr);
    if (r.adr) write_text(out_path(c, "adr_state.json"), adr::serialize(*r.adr));
    double best = -INFINITY;
    for (const auto& p : r.evals) best = std::max(best, p.ct);
    std::cout << "done: " << r.steps << " steps, " << r.updates << " updates";
    if (!r.evals.empty()) std::cout << ", max ct " << fmt(best) << ", final ct " << fmt(r.evals.back().ct);
    std::cout << "\n";
    return 0;
}

int cmd_eval_ct(const ExperimentConfig& c, const std::string& suite) {
    prepare(c, "eval-ct");
    const auto agent = make_agent(c);
    const auto tasks = tasks_for(c, suite);
    std::ofstream f(out_path(c, "metrics.csv"));
    CsvWriter csv(f, {"task", "E", "A_full", "A_solo", "A_half", "ct"});
    std::vector<ct::CTMeasurement> ms;
    for (std::size_t k = 0; k < tasks.size(); ++k) {
        const auto m = ct::run_ct_eval(agent, tasks[k], derive_seed(c.seed, k));
        csv.values(static_cast<int>(k), m.E, m.A_full, m.A_solo, m.A_half, m.ct);
        ms.push_back(m);
    }
    std::cout << "agent " << c.agent << ": mean ct " << fmt(ct::mean_ct(ms)) << " over " << ms.size() << " tasks\n";
    return 0;
}

int cmd_ablate(const ExperimentConfig& c, const std::vector<std::string>& tags) {
    prepare(c, "ablate");
    std::ofstream f(out_path(c, "metrics.csv"));
    CsvWriter csv(f, {"ablation", "step", "ct", "E", "A_full", "A_solo", "A_half"});
    std::ofstream sf(out_path(c, "summary.csv"));
    CsvWriter summary(sf, {"ablation", "max_ct", "final_ct", "final_A_full"});
    for (const auto& tag : tags) {
        auto cfg = c.train;
        cfg.ablation = train::Ablation::parse(tag);
        train::TrainHooks hooks;
        hooks.on_eval = [&](const train::EvalPoint& p) {
            csv.values(cfg.ablation.tag(), p.step, p.ct, p.E, p.A_full, p.A_solo, p.A_half);
            std::cout << cfg.ablation.tag() << " eval " << p.step << " ct " << fmt(p.ct) << "\n";
        };
        const auto r = train::train(cfg, hooks);
        double best = -INFINITY;
        for (const auto& p : r.evals) best = std::max(best, p.ct);
        if (!r.evals.empty()) summary.values(cfg.ablation.tag(), best, r.evals.back().ct, r.evals.back().A_full);
    }
    return 0;
}

int cmd_recall(const ExperimentConfig& c, const std::string& suite) {
    prepare(c, "recall");
    const auto agent = make_agent(c);
    std::ofstream f(out_path(c, "metrics.csv"));
    CsvWriter csv(f, {"task", "trial", "score", "expert_trial1"});
    std::vector<double> mean(static_cast<std::size_t>(c.recall_trials), 0.0);
    const auto tasks = tasks_for(c, suite);
    for (std::size_t k = 0; k < tasks.size(); ++k) {
        const auto r = analysis::recall_trials(agent, tasks[k], c.recall_trials, derive_seed(c.seed, k));
        for (std::size_t i = 0; i < r.trial_scores.size(); ++i) {
            csv.values(static_cast<int>(k), static_cast<int>(i + 1), r.trial_scores[i], r.expert_score);
            mean[i] += static_cast<double>(r.trial_scores[i]) / static_cast<double>(tasks.size());
        }
    }
    for (std::size_t i = 0; i < mean.size(); ++i) std::cout << "trial " << i + 1 << ": mean score " << fmt(mean[i]) << "\n";
    return 0;
}

int cmd_sweep(const ExperimentConfig& c, const std::string& param, double lo, double hi, int n, const std::string& adr_state) {
    prepare(c, "sweep");
    const auto agent = make_agent(c);
    const auto axis = analysis::parse_axis(c.sweep_axis);
    analysis::Ranges ranges = {{param, {lo, hi}}};
    if (!adr_state.empty()) {
        std::ifstream f(adr_state);
        if (!f) throw IoError("cannot read " + adr_state);
        std::stringstream ss;
        ss << f.rdbuf();
        ranges = analysis::ranges_from_adr(adr::deserialize(ss.str()));
        if (!ranges.contains(param)) ranges[param] = {lo, hi};
    }
    std::vector<analysis::SweepCell> grid;
    for (double v : analysis::sweep_values(lo, hi, n)) grid.push_back({{{param, v}}});
    env::TaskSpec base = task_from_config(c, c.seed);
    const auto rows = analysis::generalisation_sweep(agent, axis, grid, base, ranges, c.tasks, c.seed);
    std::ofstream f(out_path(c, "metrics.csv"));
    CsvWriter csv(f, {"param", "value", "ood", "mean_score", "tasks", "undefined"});
    for (const auto& r : rows) {
        csv.values(param, r.cell.values[0].second, r.ood, r.mean_score, r.tasks, r.undefined);
        std::cout << param << " = " << r.cell.values[0].second << (r.ood ? " (ood)" : "") << ": score " << fmt(r.mean_score) << " over "
                  << r.tasks << " tasks\n";
    }
    return 0;
}

int cmd_fidelity(const ExperimentConfig& c, const std::string& suite) {
    prepare(c, "fidelity");
    const auto agent = make_agent(c);
    const auto tasks = tasks_for(c, suite);
    const auto r = analysis::two_option_preference(agent, tasks, c.episodes_per_direction, c.seed);
    std::ofstream f(out_path(c, "metrics.csv"));
    CsvWriter csv(f, {"matched", "total", "fraction"});
    csv.values(r.matched, r.total, r.fraction() ? fmt(*r.fraction()) : std::string("undefined"));
    std::cout << "matched " << r.matched << " of " << r.total << " complete correct cycles: "
              << (r.fraction() ? fmt(100.0 * *r.fraction()) + "%" : std::string("undefined")) << "\n";
    return 0;
}

int cmd_probe(const ExperimentConfig& c, bool synthetic) {
    prepare(c, "probe-neurons");
    analysis::BeliefDataset d;
    if (synthetic) {
        Rng rng = make_rng(c.seed, 0xB0);
        const int N = 4000, H = 32;
        d.beliefs.resize(N, H);
        for (int i = 0; i < N; ++i) {
            const int label = bernoulli(rng, 0.5), inside = bernoulli(rng, 0.3);
            d.expert_visible.push_back(label);
            d.inside_goal.push_back(inside);
            for (int j = 0; j < H; ++j) d.beliefs(i, j) = standard_normal(rng);
            d.beliefs(i, 7) = label ? 1.0 : -1.0;
            d.beliefs(i, 11) = inside + 0.1 * standard_normal(rng);
        }
    } else {
        if (c.agent != "checkpoint") throw ConfigError("probe-neurons needs run.agent = checkpoint (or --synthetic)");
        const auto ck = train::load_checkpoint(c.checkpoint);
        auto params = std::make_shared<const agent::Params<float>>(ck.params);
        ExperimentConfig tc = c;
        tc.tasks = c.probe_episodes;
        d = analysis::collect_beliefs(params, tasks_for(tc, ""), expert::DropoutScheme::probabilistic(c.train.dropout_p), c.seed);
    }
    analysis::ProbeConfig pc;
    pc.steps = c.probe_steps;
    pc.seed = c.seed;
    const auto r = analysis::probe_social_neurons(d.beliefs, d.expert_visible, pc);
    std::ofstream f(out_path(c, "metrics.csv"));
    CsvWriter csv(f, {"neuron", "attention", "social"});
    for (Eigen::Index j = 0; j < r.attention.size(); ++j) {
        const bool social = std::find(r.social.begin(), r.social.end(), static_cast<int>(j)) != r.social.end();
        csv.values(static_cast<int>(j), r.attention(j), social);
    }
    std::ofstream g(out_path(c, "goal_neurons.csv"));
    CsvWriter gcsv(g, {"rank", "neuron", "correlation", "variance", "mean_inside", "mean_outside"});
    const auto ranked = analysis::goal_neuron_rank(d.beliefs, d.inside_goal, 10);
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        const auto& s = ranked[i];
        gcsv.values(static_cast<int>(i + 1), s.neuron, s.correlation, s.variance, s.mean_inside, s.mean_outside);
    }
    std::cout << "test accuracy " << fmt(r.test_accuracy) << "; social neurons";
    for (int j : r.social) std::cout << " " << j;
    std::cout << " (mass " << fmt(r.social_mass) << ")\nrandomise social " << fmt(r.acc_randomise_social) << ", complement "
              << fmt(r.acc_randomise_complement) << ", all " << fmt(r.acc_randomise_all) << "\n";
    if (!ranked.empty()) std::cout << "top goal neuron " << ranked[0].neuron << " (corr " << fmt(ranked[0].correlation) << ")\n";
    return 0;
}

int cmd_record(const ExperimentConfig& c, std::string file) {
    prepare(c, "record");
    if (file.empty()) file = out_path(c, "episode.traj");
    const auto task = task_from_config(c, c.seed);
    auto agent = make_agent(c)(derive_seed(c.seed, 3));
    expert::ExpertBot bot(derive_seed(c.seed, 2), task.expert.noise);
    const PlayerInfo players[] = {{env::Role::Agent, c.agent}, {env::Role::Expert, "expert"}};
    env::Policy* ps[] = {agent.get(), &bot};
    const auto traj = record_episode(task, players, ps, {{"run", c.seed}}, file);
    std::ofstream f(out_path(c, "metrics.csv"));
    CsvWriter csv(f, {"player", "policy", "score"});
    for (std::size_t i = 0; i < traj.players.size(); ++i) csv.values(static_cast<int>(i), traj.players[i].policy, traj.final_scores[i]);
    std::cout << "wrote " << file << " (" << traj.steps.size() << " steps, scores";
    for (int s : traj.final_scores) std::cout << " " << s;
    std::cout << ")\n";
    return 0;
}

int cmd_replay(const ExperimentConfig& c, const std::string& file, bool coplay) {
    prepare(c, "replay");
    const auto traj = read_trajectory(file);
    const auto check = verify_replay(traj);
    std::ofstream f(out_path(c, "metrics.csv"));
    CsvWriter csv(f, {"check", "ok", "first_mismatch"});
    csv.values(std::string("verify"), check.ok, check.first_mismatch);
    std::cout << (check.ok ? "replay matches the recorded reward stream" : "replay MISMATCH at step " + std::to_string(check.first_mismatch))
              << "\n";
    if (coplay) {
        env::TaskSpec task = traj.task;
        task.dropout = expert::parse_dropout(c.dropout);
        auto expert_player = replay_expert(traj, task);
        auto agent = make_agent(c)(derive_seed(c.seed, 3));
        env::Episode ep(task, {env::Role::Agent, env::Role::Expert});
        env::Policy* ps[] = {agent.get(), expert_player.get()};
        const auto log = env::run_episode(ep, ps);
        std::cout << "co-play (" << c.agent << " with the recorded expert, dropout " << c.dropout << "): agent " << log.scores[0]
                  << ", expert " << log.scores[1] << "\n";
    }
    return check.ok ? 0 : 3;
}

int cmd_serve(const ExperimentConfig& c, bool lockstep) {
    prepare(c, "serve");
    const auto task = task_from_config(c, c.seed);
    LiveSession session(task, make_agent(c), c.agent, c.seed);
    ServeOptions o;
    o.port = c.port;
    o.tick_rate = c.tick_rate;
    o.lockstep = lockstep;
    o.client_timeout_ms = c.client_timeout_ms;
    o.trajectory_path = out_path(c, "live.traj");
    o.on_listening = [](int port) { std::cout << "listening on 127.0.0.1:" << port << std::endl; };
    const auto r = serve_live(session, o);
    std::ofstream f(out_path(c, "metrics.csv"));
    CsvWriter csv(f, {"complete", "reason", "ticks", "seconds", "agent_score", "expert_score"});
    csv.values(r.complete, r.reason, r.ticks, r.seconds, r.trajectory.final_scores[0], r.trajectory.final_scores[1]);
    std::cout << "session ended (" << r.reason << ") after " << r.ticks << " ticks; trajectory " << o.trajectory_path << "\n";
    return 0;
}

int cmd_plot(const ExperimentConfig& c, const std::string& file, const std::string& column, const std::string& script) {
    prepare(c, "plot");
    std::string svg;
    if (!script.empty()) {
        const auto task = task_from_config(c, c.seed);
        const auto tc = analysis::trajectory_compare(task, make_agent(c), analysis::parse_script(script), c.seed);
        svg = trajectory_svg(task, tc);
    } else if (file.ends_with(".traj")) {
        svg = trajectory_svg(read_trajectory(file));
    } else if (file.ends_with(".csv")) {
        const auto t = read_csv(file);
        const int xs = t.column("step"), ys = t.column(column);
        if (xs < 0 || ys < 0) throw ConfigError("plot: " + file + " needs 'step' and '" + column + "' columns");
        const int group = t.column("ablation");
        std::map<std::string, Series> series;
        for (const auto& row : t.rows) {
            const std::string key = group >= 0 ? row[static_cast<std::size_t>(group)] : column;
            auto& s = series[key];
            s.name = key;
            s.x.push_back(std::stod(row[static_cast<std::size_t>(xs)]));
            s.y.push_back(std::stod(row[static_cast<std::size_t>(ys)]));
        }
        std::vector<Series> all;
        for (auto& [k, s] : series) all.push_back(std::move(s));
        svg = line_chart_svg(all, "environment steps", column, fs::path(file).filename().string());
    } else {
        throw ConfigError("plot: give --file <x.traj|x.csv> or --script <name>");
    }
    const std::string path = out_path(c, "plot.svg");
    write_text(path, svg);
    std::ofstream f(out_path(c, "metrics.csv"));
    CsvWriter csv(f, {"output", "bytes"});
    csv.values(path, static_cast<long>(svg.size()));
    std::cout << "wrote " << path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"goal-cycle cultural transmission simulator"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config, "configuration file (sectioned key = value)");
    app.add_option("--seed", g.seed, "run seed (u64)");
    app.add_option("--out", g.out, "output directory");
    app.add_option("--threads", g.threads, "actor threads (0: single inline actor)");

    std::string suite, resume, file, column = "ct", script, param = "world_size", adr_state;
    std::vector<std::string> tags = {"MEDAL", "M----"};
    double lo = 16, hi = 32;
    int n_inside = 3;
    bool coplay = false, lockstep = false, synthetic = false;

    auto* gen = app.add_subcommand("gen", "emit a task specification (or a probe suite)");
    gen->add_option("--suite", suite, "empty4 | empty5 | complex");
    auto* trn = app.add_subcommand("train", "train an agent");
    trn->add_option("--resume", resume, "checkpoint to resume from");
    auto* ect = app.add_subcommand("eval-ct", "CT metric of the configured agent");
    ect->add_option("--suite", suite, "evaluate on a probe suite instead of drawn tasks");
    auto* abl = app.add_subcommand("ablate", "train each ablation tag under the same budget");
    abl->add_option("--tags", tags, "ablation tags")->delimiter(',');
    auto* rec = app.add_subcommand("recall", "recall trials: expert present in trial 1 only");
    rec->add_option("--suite", suite, "probe suite");
    auto* swp = app.add_subcommand("sweep", "generalisation sweep over one parameter");
    swp->add_option("--param", param, "parameter name");
    swp->add_option("--lo", lo, "in-distribution lower bound");
    swp->add_option("--hi", hi, "in-distribution upper bound");
    swp->add_option("--n", n_inside, "values inside the range");
    swp->add_option("--adr-state", adr_state, "final ADR state file for the in-distribution ranges");
    auto* fid = app.add_subcommand("fidelity", "two-option preference for the demonstrated direction");
    fid->add_option("--suite", suite, "probe suite");
    auto* prb = app.add_subcommand("probe-neurons", "social-neuron probe and goal-neuron ranking");
    prb->add_flag("--synthetic", synthetic, "use the constructed belief dataset");
    auto* rcd = app.add_subcommand("record", "record an episode of the configured agent with the scripted expert");
    rcd->add_option("--file", file, "trajectory path (default <out>/episode.traj)");
    auto* rpl = app.add_subcommand("replay", "verify a trajectory file; optionally co-play its expert");
    rpl->add_option("--file", file, "trajectory path")->required();
    rpl->add_flag("--coplay", coplay, "run the configured agent with the recorded expert");
    auto* srv = app.add_subcommand("serve", "live session: one client drives the expert");
    srv->add_flag("--lockstep", lockstep, "advance one tick per client action");
    auto* plt = app.add_subcommand("plot", "SVG of a trajectory, a metrics CSV or a scripted comparison");
    plt->add_option("--file", file, "trajectory or CSV");
    plt->add_option("--column", column, "CSV column to plot against step");
    plt->add_option("--script", script, "correct | wrong-halfway | dropout-halfway | wrong-then-dropout | absent");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        const ExperimentConfig c = resolve(g);
        if (*gen) return cmd_gen(c, suite);
        if (*trn) return cmd_train(c, resume);
        if (*ect) return cmd_eval_ct(c, suite);
        if (*abl) return cmd_ablate(c, tags);
        if (*rec) return cmd_recall(c, suite);
        if (*swp) return cmd_sweep(c, param, lo, hi, n_inside, adr_state);
        if (*fid) return cmd_fidelity(c, suite);
        if (*prb) return cmd_probe(c, synthetic);
        if (*rcd) return cmd_record(c, file);
        if (*rpl) return cmd_replay(c, file, coplay);
        if (*srv) return cmd_serve(c, lockstep);
        if (*plt) return cmd_plot(c, file, column, script);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
