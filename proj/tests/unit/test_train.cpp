#include "goalcycle/train.hpp"

#include <doctest.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <thread>

using namespace goalcycle;
using namespace goalcycle::agent;
using namespace goalcycle::train;

namespace {

TrainConfig small_config() {
    TrainConfig c;
    c.net.num_rays = 8;
    c.net.enc1 = 16;
    c.net.enc2 = 8;
    c.net.belief = 8;
    c.episode_length = 60;
    c.eval_episode_length = 60;
    c.unroll = 16;
    c.num_envs = 4;
    c.total_steps = 2000;
    c.eval_every = 1000;
    c.eval_tasks = 2;
    c.log_every = 500;
    c.seed = 9;
    return c;
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("goalcycle_test_" + name)).string();
}

}  // namespace

TEST_CASE("zero network gives a uniform policy and zero value") {
    NetConfig cfg;
    Params<double> p(cfg);
    auto belief = Belief<double>::zeros(cfg, 1);
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(cfg.input_size(), 1);
    const int prev[1] = {-1};
    const auto out = forward<double>(p, belief, x, prev);
    CHECK(out.logits.rows() == 5);
    CHECK(belief.h.rows() == 128);
    CHECK(out.value.size() == 1);
    CHECK(out.prediction.rows() == 2);
    CHECK(out.logits.maxCoeff() == out.logits.minCoeff());
    CHECK(out.value(0) == 0.0);
}

TEST_CASE("forward is deterministic for fixed parameters") {
    NetConfig cfg;
    Rng rng(3);
    Params<float> p(cfg);
    p.init(rng);
    Eigen::MatrixXf x = Eigen::MatrixXf::Random(cfg.input_size(), 2).cwiseAbs();
    const int prev[2] = {1, -1};
    auto b1 = Belief<float>::zeros(cfg, 2), b2 = b1;
    const auto o1 = forward<float>(p, b1, x, prev);
    const auto o2 = forward<float>(p, b2, x, prev);
    CHECK(o1.logits == o2.logits);
    CHECK(o1.prediction == o2.prediction);
    CHECK(b1.h == b2.h);
}

TEST_CASE("prediction head is detached when the attention loss is off or masked") {
    NetConfig cfg;
    cfg.num_rays = 3;
    cfg.enc1 = 6;
    cfg.enc2 = 5;
    cfg.belief = 8;
    Rng rng(4);
    Params<double> p(cfg);
    p.init(rng);
    Unroll<double> u;
    u.allocate(cfg, 3, 2);
    u.X = Eigen::MatrixXd::Random(u.X.rows(), u.X.cols()).cwiseAbs();
    u.att_target.setConstant(0.3);
    std::fill(u.att_mask.begin(), u.att_mask.end(), 1);
    u.rewards[1] = 1.0;
    LossConfig lc;
    const auto tg = compute_targets(p, u, lc);

    lc.attention_weight = 0.0;
    Params<double> g0(cfg);
    loss_and_gradients(p, u, tg, lc, g0);
    for (int id : {P1, pb1, P2, pb2, P3, pb3}) CHECK(g0.mat(id).cwiseAbs().maxCoeff() == 0.0);

    lc.attention_weight = 10.0;
    std::fill(u.att_mask.begin(), u.att_mask.end(), 0);
    Params<double> gm(cfg);
    const auto terms = loss_and_gradients(p, u, tg, lc, gm);
    CHECK(terms.attention == 0.0);
    CHECK(gm.data == g0.data);
}

TEST_CASE("ablation tags") {
    for (const char* t : {"MEDAL", "M----", "-EDAL", "MED--", "ME-AL", "MEDAL-ADR", "MEDAL--DR"}) {
        CHECK(Ablation::parse(t).tag() == t);
    }
    CHECK(Ablation::parse("MEDAL---").distribution == Distribution::Fixed);
    const auto a = Ablation::parse("M\xE2\x80\x93\xE2\x80\x93\xE2\x80\x93\xE2\x80\x93");
    CHECK(a.memory);
    CHECK(!a.expert);
    CHECK(!a.dropout);
    CHECK(!a.attention);
    CHECK_THROWS_AS(Ablation::parse("MEXAL"), ConfigError);
    CHECK_THROWS_AS(Ablation::parse("MEDAL-XYZ"), ConfigError);
}

TEST_CASE("config validation") {
    auto c = small_config();
    c.unroll = c.episode_length + 1;
    CHECK_THROWS_AS(validate(c), ConfigError);
    c = small_config();
    c.loss.gamma = 1.0;
    CHECK_THROWS_AS(validate(c), ConfigError);
    c = small_config();
    c.total_steps = 0;
    CHECK_THROWS_AS(train::train(c), ConfigError);
}

TEST_CASE("bounded queue applies backpressure") {
    BoundedQueue<int> q(2);
    std::atomic<int> pushed{0};
    std::thread producer([&] {
        for (int i = 0; i < 5; ++i) {
            if (!q.push(i)) return;
            ++pushed;
        }
    });
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    CHECK(pushed.load() == 2);
    CHECK(q.pop() == 0);
    CHECK(q.pop() == 1);
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    CHECK(pushed.load() == 4);
    q.close();
    producer.join();
    CHECK(q.pop() == 2);
    CHECK(q.pop() == 3);
    CHECK(!q.pop().has_value());
}

TEST_CASE("single-actor training is reproducible") {
    const auto c = small_config();
    const auto a = train::train(c);
    const auto b = train::train(c);
    CHECK(a.steps >= c.total_steps);
    REQUIRE(a.log.size() == b.log.size());
    REQUIRE(!a.log.empty());
    for (std::size_t i = 0; i < a.log.size(); ++i) {
        CHECK(a.log[i].policy_loss == b.log[i].policy_loss);
        CHECK(a.log[i].agent_score == b.log[i].agent_score);
    }
    REQUIRE(a.evals.size() == b.evals.size());
    CHECK(a.evals.back().ct == b.evals.back().ct);
    CHECK(a.params.data == b.params.data);
    CHECK(a.params.data.allFinite());
}

TEST_CASE("threaded actors feed the learner") {
    auto c = small_config();
    c.actor_threads = 2;
    c.queue_capacity = 1;
    const auto r = train::train(c);
    CHECK(r.steps >= c.total_steps);
    CHECK(r.params.data.allFinite());
}

TEST_CASE("checkpoint round trip and divergence abort") {
    auto c = small_config();
    c.total_steps = 64 * 4;
    const std::string path = temp_path("ckpt.json");
    TrainHooks hooks;
    hooks.checkpoint_path = path;
    const auto r = train::train(c, hooks);
    const auto ck = load_checkpoint(path);
    CHECK(ck.params.data == r.params.data);
    CHECK(ck.step == r.steps);
    CHECK(ck.adam_steps == r.updates);

    // Resuming continues from the stored step counter.
    c.total_steps = r.steps + 64;
    const auto resumed = train::train(c, {}, &ck);
    CHECK(resumed.steps == r.steps + 64);

    auto bad = ck;
    bad.params.data(0) = std::numeric_limits<float>::quiet_NaN();
    std::filesystem::remove(path);
    CHECK_THROWS_AS(train::train(c, hooks, &bad), NumericError);
    CHECK(std::filesystem::exists(path));
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_checkpoint(path), IoError);
}

TEST_CASE("ADR training pushes pinned measurements") {
    auto c = small_config();
    c.ablation = Ablation::parse("MEDAL-ADR");
    c.adr.update_every = 2;
    c.adr.boundary_prob = 1.0;
    c.total_steps = 400;
    c.eval_every = 100000;
    const auto r = train::train(c);
    REQUIRE(r.adr.has_value());
    // An untrained agent has CT near zero, so acted boundaries contract or stay at their limits.
    for (const auto& p : r.adr->params) {
        CHECK(p.lo <= p.hi);
        CHECK(p.hard_min <= p.lo);
        CHECK(p.hi <= p.hard_max);
    }
}
