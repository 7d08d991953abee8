#include "goalcycle/agent.hpp"

#include <doctest.h>

#include <cmath>

using namespace goalcycle;
using namespace goalcycle::agent;

namespace {

NetConfig tiny(bool memory = true) {
    NetConfig c;
    c.num_rays = 3;
    c.enc1 = 7;
    c.enc2 = 6;
    c.belief = 5;
    c.pred1 = 4;
    c.pred2 = 3;
    c.memory = memory;
    return c;
}

template <typename S>
Unroll<S> random_unroll(const NetConfig& cfg, int T, int B, Rng& rng) {
    Unroll<S> u;
    u.allocate(cfg, T, B);
    for (Eigen::Index k = 0; k < u.X.size(); ++k) u.X.data()[k] = static_cast<S>(uniform01(rng));
    for (auto& a : u.prev_actions) a = uniform_int(rng, env::kNumActions + 1) - 1;
    for (auto& a : u.actions) a = uniform_int(rng, env::kNumActions);
    for (auto& r : u.rewards) r = static_cast<S>(uniform_int(rng, 3) - 1);
    for (std::size_t i = 0; i < u.dones.size(); ++i) {
        u.dones[i] = bernoulli(rng, 0.1);
        if (u.dones[i]) u.resets[i + static_cast<std::size_t>(B)] = 1;
    }
    for (Eigen::Index k = 0; k < u.att_target.size(); ++k) u.att_target.data()[k] = static_cast<S>(uniform01(rng));
    for (auto& m : u.att_mask) m = bernoulli(rng, 0.6);
    for (Eigen::Index k = 0; k < u.initial.h.size(); ++k) {
        u.initial.h.data()[k] = static_cast<S>(uniform(rng, -0.5, 0.5));
        u.initial.c.data()[k] = static_cast<S>(uniform(rng, -0.5, 0.5));
    }
    return u;
}

void check_gradients(bool memory) {
    Rng rng(memory ? 11 : 12);
    const auto cfg = tiny(memory);
    Params<double> p(cfg);
    p.init(rng);
    p.data += 0.3 * Eigen::VectorXd::Random(p.size());  // move off the near-zero policy head
    const auto u = random_unroll<double>(cfg, 6, 3, rng);
    LossConfig lc;
    lc.entropy_coef = 0.05;
    const auto tg = compute_targets(p, u, lc);
    Params<double> g(cfg);
    const auto terms = loss_and_gradients(p, u, tg, lc, g);
    CHECK(terms.total == doctest::Approx(loss(p, u, tg, lc).total));
    double worst = 0.0;
    for (int id = 0; id < kNumParamIds; ++id) {
        const auto& s = p.slot(id);
        for (Eigen::Index k = 0; k < s.rows * s.cols; ++k) {
            const Eigen::Index idx = s.offset + k;
            const double h = 1e-6, orig = p.data(idx);
            p.data(idx) = orig + h;
            const double up = loss(p, u, tg, lc).total;
            p.data(idx) = orig - h;
            const double dn = loss(p, u, tg, lc).total;
            p.data(idx) = orig;
            const double fd = (up - dn) / (2 * h);
            const double err = std::abs(fd - g.data(idx)) / std::max(1e-4, std::abs(fd) + std::abs(g.data(idx)));
            if (err > 1e-3) INFO(param_name(id), "[", k, "] fd=", fd, " analytic=", g.data(idx));
            worst = std::max(worst, err);
        }
    }
    CHECK(worst < 1e-3);
}

}  // namespace

TEST_CASE("gradients match central differences") {
    SUBCASE("recurrent") { check_gradients(true); }
    SUBCASE("feedforward ablation") { check_gradients(false); }
}

TEST_CASE("unroll forward agrees with step-by-step forward") {
    Rng rng(21);
    const auto cfg = tiny();
    Params<double> p(cfg);
    p.init(rng);
    auto u = random_unroll<double>(cfg, 5, 2, rng);
    auto belief = u.initial;
    for (int t = 0; t <= u.T; ++t) {
        for (int b = 0; b < u.B; ++b) {
            if (u.resets[static_cast<std::size_t>(t * u.B + b)]) {
                belief.h.col(b).setZero();
                belief.c.col(b).setZero();
            }
        }
        const std::span<const int> prev(u.prev_actions.data() + t * u.B, static_cast<std::size_t>(u.B));
        const auto out = forward<double>(p, belief, u.X.middleCols(t * u.B, u.B), prev);
        CHECK(out.logits.allFinite());
        CHECK((out.prediction.array() > 0).all());
        CHECK((out.prediction.array() < 1).all());
        if (t == u.T - 1) {
            const auto fb = final_belief(p, u);
            CHECK((fb.h - belief.h).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
}

TEST_CASE("reset mask cuts the belief") {
    Rng rng(22);
    const auto cfg = tiny();
    Params<double> p(cfg);
    p.init(rng);
    auto u = random_unroll<double>(cfg, 4, 1, rng);
    std::fill(u.resets.begin(), u.resets.end(), 0);
    u.resets[2] = 1;
    const auto a = final_belief(p, u);
    u.initial.h.setConstant(0.9);
    u.X.col(0).setConstant(0.1);
    const auto b = final_belief(p, u);
    CHECK((a.h - b.h).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("feedforward ablation ignores the previous belief") {
    Rng rng(23);
    const auto cfg = tiny(false);
    Params<double> p(cfg);
    p.init(rng);
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(cfg.input_size(), 1).cwiseAbs();
    const int prev[1] = {2};
    auto b1 = Belief<double>::zeros(cfg, 1);
    auto b2 = Belief<double>::zeros(cfg, 1);
    b2.h.setConstant(0.7);
    const auto o1 = forward<double>(p, b1, x, prev);
    const auto o2 = forward<double>(p, b2, x, prev);
    CHECK((o1.logits - o2.logits).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("attention loss and input checks") {
    const Eigen::Vector2d a(0.2, 0.9), b(0.5, 0.5);
    CHECK(attention_loss<double>(a, b, true) == doctest::Approx(0.7));
    CHECK(attention_loss<double>(a, b, false) == 0.0);
    const auto cfg = tiny();
    Params<double> p(cfg);
    auto belief = Belief<double>::zeros(cfg, 1);
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(cfg.input_size(), 1);
    x(0, 0) = std::nan("");
    const int prev[1] = {-1};
    CHECK_THROWS_AS(forward<double>(p, belief, x, prev), NumericError);
}

TEST_CASE("encoder input excludes the avatar target") {
    env::Observation obs;
    obs.rays.resize(3);
    obs.prev_reward = 1.0;
    Eigen::VectorXd with(tiny().input_size()), without(tiny().input_size());
    build_input<double>(obs, 1, without);
    obs.avatar_target = Vec2(3.0, -2.0);
    build_input<double>(obs, 1, with);
    CHECK(with == without);
    CHECK(with(env::encoded_size(3) + 1) == 1.0);
}

TEST_CASE("adam descends a quadratic and clips") {
    NetConfig cfg = tiny();
    Params<double> p(cfg);
    Rng rng(5);
    p.init(rng);
    Adam<double> opt(p.size(), AdamConfig{0.05, 0.9, 0.999, 1e-8, 1.0});
    Params<double> g(cfg);
    const double start = p.data.squaredNorm();
    for (int i = 0; i < 300; ++i) {
        g.data = 2.0 * p.data;
        opt.step(p, g);
    }
    CHECK(p.data.squaredNorm() < 1e-2 * start);
    g.data.setConstant(std::nan(""));
    CHECK_THROWS_AS(opt.step(p, g), NumericError);
}
