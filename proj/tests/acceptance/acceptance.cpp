// Acceptance run: one PASS/FAIL line per criterion. Optional arguments select criteria by number.
#include "goalcycle/adr.hpp"
#include "goalcycle/agent.hpp"
#include "goalcycle/analysis.hpp"
#include "goalcycle/ct_metric.hpp"
#include "goalcycle/train.hpp"
#include "goalcycle/trajectory.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include <unistd.h>

using namespace goalcycle;
using namespace goalcycle::env;
using namespace goalcycle::harness;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

// Collects sub-check results into one criterion verdict.
struct Checks {
    bool pass = true;
    std::ostringstream detail;
    void operator()(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << "[failed: " << what << "] ";
        }
    }
    Outcome done() { return {pass, detail.str()}; }
};

TaskSpec flat_task(std::uint64_t seed, int length = 1800) {
    TaskSpec t;
    t.world.world_size = 16;
    t.world.num_goals = 4;
    t.world.seed = seed;
    Rng rng(seed);
    t.order = game::sample_order(4, rng);
    t.episode_length = length;
    t.episode_seed = seed + 77;
    return t;
}

long factorial(int n) { return n <= 1 ? 1 : n * factorial(n - 1); }

// 1 ---------------------------------------------------------------------------------------

Outcome ct_exactness() {
    Checks c;
    for (double E : {1.0, 2.0, 4.0, 7.0, 10.0, 37.0, 1e6}) {
        for (double A : {-3.0, 0.0, 1.5, 5.0}) c(ct::ct(E, A, A, A) == 0.0, "ct(E,A,A,A) = 0");
        c(ct::ct(E, E, 0, E / 2) == 0.75, "ct(E,E,0,E/2) = 0.75");
        c(ct::ct(E, E, 0, E) == 1.0, "ct(E,E,0,E) = 1");
    }
    c.detail << "reference values exact for 7 scales";
    return c.done();
}

// 2 ---------------------------------------------------------------------------------------

Outcome dropout_machines() {
    using expert::DropoutScheme;
    Checks c;
    Rng rng(1);
    int bad_n = 0;
    for (int N = 2; N <= 4000; ++N) {
        bool e = expert::initial_visibility(DropoutScheme::half());
        bool ok = e;
        for (int t = 1; t < N; ++t) {
            e = expert::dropout_advance(DropoutScheme::half(), e, t, N, rng);
            ok = ok && e == (t <= N / 2);
        }
        bad_n += !ok;
    }
    c(bad_n == 0, std::to_string(bad_n) + " lengths switch at the wrong step");

    const double p = 20.0 / 1800.0;
    const int N = 1800, episodes = 10000;
    Rng prng(2);
    const auto scheme = DropoutScheme::probabilistic(p);
    long toggles = 0;
    for (int k = 0; k < episodes; ++k) {
        bool e = expert::initial_visibility(scheme);
        for (int t = 1; t < N; ++t) {
            const bool next = expert::dropout_advance(scheme, e, t, N, prng);
            toggles += next != e;
            e = next;
        }
    }
    const double mean = static_cast<double>(toggles) / episodes;
    const double sigma = std::sqrt((N - 1) * p * (1 - p) / episodes);
    c(std::abs(mean - p * N) <= 3 * sigma, "toggle mean outside 3 sigma");
    c.detail << "half exact for N=2..4000; mean toggles " << mean << " vs pN=" << p * N << " (3 sigma " << 3 * sigma << ")";
    return c.done();
}

// 3 ---------------------------------------------------------------------------------------

Outcome cycle_combinatorics() {
    Checks c;
    for (int n = 3; n <= 7; ++n) {
        std::set<std::vector<int>> distinct;
        for (const auto& o : game::enumerate_orders(n)) distinct.insert(o.sequence());
        c(static_cast<long>(distinct.size()) == factorial(n - 1), "(n-1)! distinct cycles for n=" + std::to_string(n));
    }
    Rng rng(3);
    const int draws = 40000;
    for (int n = 4; n <= 7; ++n) {
        const auto sigma = game::sample_order(n, rng);
        int hits = 0;
        for (int i = 0; i < draws; ++i) hits += game::sample_order(n, rng).same_cycle(sigma);
        const double q = 2.0 / static_cast<double>(factorial(n - 1));
        const double phat = static_cast<double>(hits) / draws;
        const double sd = std::sqrt(q * (1 - q) / draws);
        c(std::abs(phat - q) <= 3 * sd, "inclusion probability for n=" + std::to_string(n));
        c.detail << "n=" << n << ": " << phat << " vs " << q << "; ";
    }
    return c.done();
}

// 4 ---------------------------------------------------------------------------------------

int orient(const Vec2& a, const Vec2& b, const Vec2& r) {
    const double v = (b - a).x() * (r - a).y() - (b - a).y() * (r - a).x();
    return (v > 0) - (v < 0);
}

int brute_crossings(const std::vector<Vec2>& pts, const std::vector<int>& seq) {
    const int n = static_cast<int>(seq.size());
    int count = 0;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const int a0 = seq[i], a1 = seq[(i + 1) % n], b0 = seq[j], b1 = seq[(j + 1) % n];
            if (a0 == b0 || a0 == b1 || a1 == b0 || a1 == b1) continue;
            const Vec2 &p = pts[a0], &q = pts[a1], &r = pts[b0], &s = pts[b1];
            if (orient(p, q, r) * orient(p, q, s) < 0 && orient(r, s, p) * orient(r, s, q) < 0) ++count;
        }
    }
    return count;
}

Outcome crossings_oracle() {
    Checks c;
    Rng rng(4);
    int mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 4 + uniform_int(rng, 3);
        std::vector<Vec2> pts;
        for (int i = 0; i < n; ++i) pts.emplace_back(uniform(rng, 0, 16), uniform(rng, 0, 16));
        const auto order = game::sample_order(n, rng);
        mismatches += game::classify_crossings(pts, order) != brute_crossings(pts, order.sequence());
    }
    c(mismatches == 0, std::to_string(mismatches) + " mismatches");
    c.detail << "1000 instances, " << mismatches << " mismatches";
    return c.done();
}

// 5 ---------------------------------------------------------------------------------------

// Best total over all entry sequences of each length up to max_len, and whether every
// maximising sequence of length >= 3 walks the cycle in one direction.
struct SearchResult {
    std::vector<int> best;
    bool maximisers_are_walks = true;
};

void search(const game::CyclicOrder& order, const game::RewardContext& ctx, std::vector<int>& seq, int total, int max_len,
            SearchResult& out) {
    const int n = order.size();
    for (int g = 0; g < n; ++g) {
        const auto r = game::reward_for_entry(ctx, g, order);
        seq.push_back(g);
        const int t = total + r.reward;
        const std::size_t L = seq.size();
        out.best[L] = std::max(out.best[L], t);
        if (t == static_cast<int>(L) && L >= 3) {
            const bool fwd = order.successor(seq[0]) == seq[1];
            for (std::size_t i = 1; i < L; ++i) {
                const int want = fwd ? order.successor(seq[i - 1]) : order.predecessor(seq[i - 1]);
                if (seq[i] != want) out.maximisers_are_walks = false;
            }
        }
        if (static_cast<int>(L) < max_len) search(order, r.context, seq, t, max_len, out);
        seq.pop_back();
    }
}

int scripted_total(const std::vector<int>& route, std::uint64_t seed) {
    TaskSpec task = flat_task(seed, 900);
    task.order = game::CyclicOrder({0, 1, 2, 3});
    Episode ep(task, {Role::Expert});
    expert::ExpertBot bot(seed, 0.0, route);
    Policy* ps[] = {&bot};
    return run_episode(ep, ps).scores[0];
}

Outcome reward_semantics() {
    Checks c;
    const int max_len = 10;
    for (int n : {4, 5}) {
        std::vector<int> seq(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) seq[static_cast<std::size_t>(i)] = i;
        const game::CyclicOrder order(seq);
        SearchResult r;
        r.best.assign(max_len + 1, -1000);
        std::vector<int> buf;
        search(order, {}, buf, 0, max_len, r);
        bool all = true;
        for (int L = 1; L <= max_len; ++L) {
            std::vector<int> walk;
            for (int k = 0; k < L; ++k) walk.push_back(order.at(k % n));
            const auto rw = game::rewards_for_sequence(walk, order);
            int walk_total = 0;
            for (int v : rw) walk_total += v;
            all = all && walk_total == r.best[static_cast<std::size_t>(L)] && walk_total == L;
        }
        c(all, "full cycle is not reward-maximal for n=" + std::to_string(n));
        c(r.maximisers_are_walks, "a non-cycle sequence ties the maximum for n=" + std::to_string(n));
    }
    int two = 0, three = 0, full = 0;
    for (std::uint64_t s = 1; s <= 5; ++s) {
        two += scripted_total({0, 1}, s);
        three += scripted_total({0, 1, 2}, s);
        full += scripted_total({0, 1, 2, 3}, s);
    }
    c(two < three && three < full, "subcycle ordering");
    c.detail << "exhaustive search to length " << max_len << " for n=4,5; 900-step totals over 5 worlds: 2-sub " << two
             << ", 3-sub " << three << ", full " << full;
    return c.done();
}

// 6 ---------------------------------------------------------------------------------------

bool at_limit(const adr::ADRParam& p, adr::Side s) { return s == adr::Side::Low ? p.lo <= p.hard_min : p.hi >= p.hard_max; }

int expected_steps(const adr::ADRParam& p, adr::Side s) {
    const double range = s == adr::Side::Low ? p.lo - p.hard_min : p.hard_max - p.hi;
    return static_cast<int>(std::ceil(range / p.step - 1e-9));
}

bool ordered(const adr::ADRState& st) {
    for (const auto& p : st.params)
        if (!(p.hard_min <= p.lo && p.lo <= p.hi && p.hi <= p.hard_max)) return false;
    return true;
}

// Feeds `ct` to every listed side each round; returns the acting-update count per side.
std::vector<std::array<int, 2>> feed(adr::ADRState& st, double ct, int rounds, const std::function<bool(int, adr::Side)>& active) {
    std::vector<std::array<int, 2>> acted(st.params.size(), {0, 0});
    for (int r = 0; r < rounds; ++r) {
        bool any = false;
        for (int i = 0; i < static_cast<int>(st.params.size()); ++i) {
            for (auto s : {adr::Side::Low, adr::Side::High}) {
                if (st.params[static_cast<std::size_t>(i)].frozen(s) || !active(i, s)) continue;
                adr::push_metric(st, {i, s}, ct);
                any = true;
            }
        }
        if (!any) break;
        for (const auto& pin : adr::update_boundaries(st).acting) ++acted[static_cast<std::size_t>(pin.index)][static_cast<std::size_t>(pin.side)];
    }
    return acted;
}

Outcome adr_controller() {
    Checks c;
    const auto initial = adr::reference_config();
    auto st = initial;
    // ct = 1: count acting updates until each side reaches its hard limit.
    auto counts = feed(st, 1.0, 10000, [&](int i, adr::Side s) { return !at_limit(st.params[static_cast<std::size_t>(i)], s); });
    int sides = 0;
    for (std::size_t i = 0; i < st.params.size(); ++i) {
        for (auto s : {adr::Side::Low, adr::Side::High}) {
            const auto& p0 = initial.params[i];
            if (p0.frozen(s)) continue;
            ++sides;
            const auto k = static_cast<std::size_t>(s);
            c(at_limit(st.params[i], s), p0.name + " did not reach its limit");
            c(counts[i][k] == expected_steps(p0, s), p0.name + " took " + std::to_string(counts[i][k]) + " updates, expected " +
                                                         std::to_string(expected_steps(p0, s)));
        }
    }
    c(ordered(st), "ordering after expansion");
    const auto expanded = st;

    // ct = 0 on one side at a time retraces the expansion step for step.
    for (std::size_t i = 0; i < st.params.size(); ++i) {
        for (auto s : {adr::Side::Low, adr::Side::High}) {
            const auto& p0 = initial.params[i];
            if (p0.frozen(s)) continue;
            auto back = expanded;
            const int k = expected_steps(p0, s);
            feed(back, 0.0, k, [&](int j, adr::Side t) { return j == static_cast<int>(i) && t == s; });
            const double tol = 1e-9 * (p0.hard_max - p0.hard_min);
            c(std::abs(back.params[i].boundary(s) - p0.boundary(s)) <= tol, p0.name + " contraction is not symmetric");
        }
    }
    // ct = 0 on every side collapses each range without crossing.
    auto collapse = expanded;
    bool kept_order = true;
    for (int r = 0; r < 400; ++r) {
        feed(collapse, 0.0, 1, [](int, adr::Side) { return true; });
        kept_order = kept_order && ordered(collapse);
    }
    c(kept_order, "ordering during collapse");
    for (const auto& p : collapse.params) c(p.lo == p.hi, p.name + " did not collapse");

    // Inside the band nothing moves, from the initial and the expanded state.
    for (auto base : {initial, expanded}) {
        auto band = base;
        feed(band, 0.8, 50, [](int, adr::Side) { return true; });
        for (std::size_t i = 0; i < band.params.size(); ++i)
            c(band.params[i].lo == base.params[i].lo && band.params[i].hi == base.params[i].hi, band.params[i].name + " moved inside the band");
    }

    // Random push sequences.
    Rng rng(6);
    auto rnd = initial;
    int violations = 0;
    for (int k = 0; k < 100000; ++k) {
        const auto smp = adr::sample_task_params(rnd, rng);
        if (smp.pinned) adr::push_metric(rnd, *smp.pinned, uniform01(rng) < 0.5 ? uniform01(rng) : uniform(rng, 0.7, 1.0));
        if (uniform_int(rng, 5) == 0) adr::update_boundaries(rnd);
        violations += !ordered(rnd);
    }
    c(violations == 0, "ordering violated under random pushes");
    c.detail << sides << " unfrozen sides expand in ceil(range/step) updates; symmetric contraction; band no-op; 1e5 random pushes";
    return c.done();
}

// 7 ---------------------------------------------------------------------------------------

Outcome gradient_check() {
    using namespace agent;
    Checks c;
    double worst_rel = 0.0;
    long entries = 0, failures = 0;
    for (int net = 0; net < 4; ++net) {
        Rng rng(70 + static_cast<std::uint64_t>(net));
        NetConfig cfg;
        cfg.num_rays = 3;
        cfg.enc1 = 5 + net;
        cfg.enc2 = 4 + net;
        cfg.belief = 4 + net;
        cfg.pred1 = 3;
        cfg.pred2 = 3;
        cfg.memory = net != 3;
        Params<double> p(cfg);
        p.init(rng);
        p.data += 0.3 * Eigen::VectorXd::Random(p.size());
        const int T = 5, B = 2;
        Unroll<double> u;
        u.allocate(cfg, T, B);
        for (Eigen::Index k = 0; k < u.X.size(); ++k) u.X.data()[k] = uniform01(rng);
        for (auto& a : u.prev_actions) a = uniform_int(rng, kNumActions + 1) - 1;
        for (auto& a : u.actions) a = uniform_int(rng, kNumActions);
        for (auto& r : u.rewards) r = uniform_int(rng, 3) - 1;
        for (std::size_t i = 0; i < u.dones.size(); ++i) {
            u.dones[i] = bernoulli(rng, 0.1);
            if (u.dones[i]) u.resets[i + static_cast<std::size_t>(B)] = 1;
        }
        for (Eigen::Index k = 0; k < u.att_target.size(); ++k) u.att_target.data()[k] = uniform01(rng);
        // Mixed mask: the attention loss must only flow through unmasked steps.
        for (auto& m : u.att_mask) m = bernoulli(rng, 0.5);
        for (Eigen::Index k = 0; k < u.initial.h.size(); ++k) {
            u.initial.h.data()[k] = uniform(rng, -0.5, 0.5);
            u.initial.c.data()[k] = uniform(rng, -0.5, 0.5);
        }
        LossConfig lc;
        lc.entropy_coef = 0.05;
        lc.attention_weight = 10.0;
        const auto tg = compute_targets(p, u, lc);
        Params<double> g(cfg);
        loss_and_gradients(p, u, tg, lc, g);
        for (Eigen::Index idx = 0; idx < p.size(); ++idx) {
            const double h = 1e-6, orig = p.data(idx);
            p.data(idx) = orig + h;
            const double up = loss(p, u, tg, lc).total;
            p.data(idx) = orig - h;
            const double dn = loss(p, u, tg, lc).total;
            p.data(idx) = orig;
            const double fd = (up - dn) / (2 * h), an = g.data(idx);
            const double abs_err = std::abs(fd - an), scale = std::max(std::abs(fd), std::abs(an));
            const bool ok = abs_err <= 1e-6 || abs_err <= 1e-4 * scale;
            if (scale > 1e-6) worst_rel = std::max(worst_rel, abs_err / scale);
            failures += !ok;
            ++entries;
        }
    }
    c(failures == 0, std::to_string(failures) + " entries out of tolerance");
    c.detail << entries << " parameters over 4 networks (one feedforward), worst relative error " << worst_rel;
    return c.done();
}

// 8 ---------------------------------------------------------------------------------------

Outcome stub_calibration() {
    Checks c;
    auto calibrate = [](const PolicyFactory& f, double& ctv, double& score) {
        ctv = score = 0.0;
        const int seeds = 20;
        for (int s = 0; s < seeds; ++s) {
            const TaskSpec t = flat_task(100 + static_cast<std::uint64_t>(s));
            ctv += ct::run_ct_eval(f, t, 500 + static_cast<std::uint64_t>(s)).ct / seeds;
            score += ct::run_normalised(f, t, 900 + static_cast<std::uint64_t>(s)).score / seeds;
        }
    };
    double fct, fsc, rct, rsc, xct, xsc;
    calibrate(ct::factory_of<ct::FollowerPolicy>(), fct, fsc);
    calibrate(ct::factory_of<ct::ReplayPolicy>(), rct, rsc);
    calibrate(ct::factory_of<ct::RandomPolicy>(), xct, xsc);
    c(std::abs(fct - 0.75) <= 0.1, "follower ct");
    c(std::abs(fsc - 1.0) <= 0.15, "follower score");
    c(rct >= 0.9, "replay ct");
    c(rsc >= 1.7, "replay score");
    c(std::abs(xct) <= 0.1, "random ct");

    std::vector<TaskSpec> tasks;
    for (std::uint64_t s = 0; s < 6; ++s) tasks.push_back(flat_task(200 + s));
    const auto mirror = analysis::two_option_preference(ct::factory_of<ct::FollowerPolicy>(), tasks, 2, 1);
    const auto anti = analysis::two_option_preference(ct::factory_of<ct::AntiFollowerPolicy>(), tasks, 2, 1);
    const auto coin = analysis::two_option_preference(ct::factory_of<ct::RandomEntryPolicy>(), tasks, 2, 4);
    c(mirror.total > 0 && mirror.matched == mirror.total, "mirror preference is not 100%");
    c(anti.total > 0 && anti.matched == 0, "anti preference is not 0%");
    const double pc = coin.fraction().value_or(-1.0);
    c(coin.total >= 50 && std::abs(pc - 0.5) <= 3 * std::sqrt(0.25 / coin.total), "random-entry preference outside 3 sigma of 50%");
    c.detail << "follower ct " << fct << " score " << fsc << "; replay ct " << rct << " score " << rsc << "; random ct " << xct
             << "; preference " << mirror.matched << "/" << mirror.total << ", " << anti.matched << "/" << anti.total << ", "
             << coin.matched << "/" << coin.total;
    return c.done();
}

// 9 ---------------------------------------------------------------------------------------

std::vector<train::EvalPoint> desk_run(std::uint64_t seed, const std::string& ablation) {
    auto cfg = train::desk_scale_config(seed);
    cfg.ablation = train::Ablation::parse(ablation);
    train::TrainHooks hooks;
    hooks.on_eval = [&](const train::EvalPoint& p) {
        std::printf("    %s seed %llu step %ld: ct %.3f (E %.2f, full %.2f, solo %.2f, half %.2f)\n", ablation.c_str(),
                    static_cast<unsigned long long>(seed), p.step, p.ct, p.E, p.A_full, p.A_solo, p.A_half);
        std::fflush(stdout);
    };
    return train::train(cfg, hooks).evals;
}

Outcome desk_training() {
    Checks c;
    int reached = 0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        double best = -INFINITY;
        for (const auto& p : desk_run(seed, "MEDAL")) best = std::max(best, p.ct);
        reached += best >= 0.4;
        c.detail << "MEDAL seed " << seed << " max ct " << best << "; ";
    }
    c(reached >= 2, "MEDAL reached ct 0.4 on " + std::to_string(reached) + " of 3 seeds");

    // Single evaluations are noisy (12 tasks), so the ablation is judged on the run mean.
    const auto m = desk_run(1, "M----");
    double mean_ct = 0.0, mean_full = 0.0, max_ct = -INFINITY, E = 0.0;
    for (const auto& p : m) {
        mean_ct += p.ct / static_cast<double>(m.size());
        mean_full += p.A_full / static_cast<double>(m.size());
        max_ct = std::max(max_ct, p.ct);
        E = p.E;
    }
    c(!m.empty() && mean_ct <= 0.05, "M---- mean ct above 0.05");
    c(!m.empty() && mean_full <= 0.2 * E, "M---- mean score above 0.2 E");
    c.detail << "M---- mean ct " << mean_ct << " (max single eval " << max_ct << "), mean full score " << mean_full << " vs E " << E;
    return c.done();
}

// 10 --------------------------------------------------------------------------------------

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

Trajectory record_network_episode(const TaskSpec& task, const std::string& path) {
    agent::NetConfig net;
    net.num_rays = task.num_rays;
    Rng init(12);
    auto params = std::make_shared<agent::Params<float>>(net);
    params->init(init);
    agent::AgentPolicy a(params, derive_seed(31, 3));
    expert::ExpertBot bot(derive_seed(31, 2), 0.1);
    const PlayerInfo players[] = {{Role::Agent, "network"}, {Role::Expert, "expert"}};
    Policy* ps[] = {&a, &bot};
    return record_episode(task, players, ps, {{"run", 31}}, path);
}

Outcome determinism() {
    Checks c;
    const auto dir = std::filesystem::temp_directory_path() / ("goalcycle_acceptance_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    TaskSpec task = flat_task(41);
    task.dropout = expert::DropoutScheme::half();
    const auto a = (dir / "a.traj").string(), b = (dir / "b.traj").string();
    record_network_episode(task, a);
    record_network_episode(task, b);
    const std::string ba = slurp(a), bb = slurp(b);
    c(!ba.empty() && ba == bb, "trajectory bytes differ");
    const auto traj = read_trajectory(a);
    const auto check = verify_replay(traj);
    c(check.ok, "replay diverges at step " + std::to_string(check.first_mismatch));
    c(check.scores == traj.final_scores, "replayed scores differ");
    c.detail << ba.size() << " identical bytes, " << traj.steps.size() << " steps replayed, scores " << traj.final_scores[0] << "/"
             << traj.final_scores[1];
    std::filesystem::remove_all(dir);
    return c.done();
}

// 11 --------------------------------------------------------------------------------------

Outcome probing() {
    Checks c;
    Rng rng(11);
    const int N = 2000, H = 32, social = 7;
    Eigen::MatrixXd X(N, H);
    std::vector<int> y;
    for (int i = 0; i < N; ++i) {
        const int label = bernoulli(rng, 0.5);
        y.push_back(label);
        for (int j = 0; j < H; ++j) X(i, j) = standard_normal(rng);
        X(i, social) = label ? 1.0 : -1.0;
    }
    const auto r = analysis::probe_social_neurons(X, y);
    c(std::find(r.social.begin(), r.social.end(), social) != r.social.end(), "neuron 7 not selected");
    c(r.test_accuracy >= 0.99, "test accuracy");
    c(std::abs(r.acc_randomise_social - 0.5) <= 0.1, "randomising social neurons does not reach chance");
    c(r.acc_randomise_complement >= 0.95, "randomising the complement loses accuracy");
    c.detail << "selected";
    for (int j : r.social) c.detail << " " << j;
    c.detail << "; accuracy " << r.test_accuracy << ", social randomised " << r.acc_randomise_social << ", complement randomised "
             << r.acc_randomise_complement;
    return c.done();
}

struct Criterion {
    int id;
    const char* name;
    double limit_s;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all = {
        {1, "ct metric exactness", 1, ct_exactness},
        {2, "dropout state machines", 10, dropout_machines},
        {3, "cycle combinatorics", 30, cycle_combinatorics},
        {4, "crossings classifier", 10, crossings_oracle},
        {5, "reward semantics", 120, reward_semantics},
        {6, "adr controller", 30, adr_controller},
        {7, "gradient check", 60, gradient_check},
        {8, "stub calibration", 300, stub_calibration},
        {9, "desk-scale training", 5400, desk_training},
        {10, "determinism", 60, determinism},
        {11, "probing", 120, probing},
    };
    std::set<int> pick;
    for (int i = 1; i < argc; ++i) pick.insert(std::atoi(argv[i]));
    int failed = 0;
    for (const auto& cr : all) {
        if (!pick.empty() && !pick.contains(cr.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = cr.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs <= cr.limit_s;
        const bool pass = o.pass && in_time;
        failed += !pass;
        std::printf("criterion %2d %s: %s (%.1f s, limit %.0f s%s) %s\n", cr.id, cr.name, pass ? "PASS" : "FAIL", secs, cr.limit_s,
                    in_time ? "" : ", too slow", o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
