#include "goalcycle/agent.hpp"

#include <cmath>

namespace goalcycle::agent {

namespace {

constexpr int kA = env::kNumActions;

const char* const kParamNames[kNumParamIds] = {"W1", "b1", "W2", "b2", "Wx", "Wh", "bl", "Wp", "bp",
                                               "Wv", "bv", "P1", "pb1", "P2", "pb2", "P3", "pb3"};

template <typename S>
S sigmoid(S x) {
    return S(1) / (S(1) + std::exp(-x));
}

template <typename S>
S elu(S x) {
    return x > S(0) ? x : std::expm1(x);
}

template <typename S>
S elu_grad_from_pre(S x) {
    return x > S(0) ? S(1) : std::exp(x);
}

template <typename S>
void check_finite(const Mat<S>& m, const char* what) {
    if (!m.allFinite()) throw NumericError(std::string("agent: non-finite ") + what);
}

// One-hot rows appended below the belief for the prediction head.
template <typename S>
Mat<S> prediction_input(const Eigen::Ref<const Mat<S>>& h, std::span<const int> prev_actions) {
    Mat<S> z = Mat<S>::Zero(h.rows() + kA, h.cols());
    z.topRows(h.rows()) = h;
    for (Eigen::Index j = 0; j < h.cols(); ++j) {
        const int a = prev_actions[static_cast<std::size_t>(j)];
        if (a >= 0) z(h.rows() + a, j) = S(1);
    }
    return z;
}

template <typename S>
struct Cache {
    Mat<S> H1, A2, H2, Gates, C, Hs, Hprev, Cprev, Z, Q1, Q2, Pred, Logits, LogP;
    RowVec<S> V;
};

// Recurrent cell for one block of columns. `gates` holds the input projection on entry and the
// activated gates on exit.
template <typename S>
void cell(const Params<S>& p, Eigen::Ref<Mat<S>> gates, const Eigen::Ref<const Mat<S>>& hprev,
          const Eigen::Ref<const Mat<S>>& cprev, Eigen::Ref<Mat<S>> h, Eigen::Ref<Mat<S>> c) {
    const Eigen::Index H = p.config().belief;
    if (!p.config().memory) {
        gates = gates.unaryExpr([](S x) { return std::tanh(x); });
        h = gates;
        c.setZero();
        return;
    }
    gates.noalias() += p.mat(Wh) * hprev;
    auto i = gates.topRows(H);
    auto f = gates.middleRows(H, H);
    auto g = gates.middleRows(2 * H, H);
    auto o = gates.bottomRows(H);
    i = i.unaryExpr([](S x) { return sigmoid(x); });
    f = f.unaryExpr([](S x) { return sigmoid(x); });
    g = g.unaryExpr([](S x) { return std::tanh(x); });
    o = o.unaryExpr([](S x) { return sigmoid(x); });
    c = f.cwiseProduct(cprev) + i.cwiseProduct(g);
    h = o.cwiseProduct(c.unaryExpr([](S x) { return std::tanh(x); }));
}

template <typename S>
void heads(const Params<S>& p, const Mat<S>& Hs, std::span<const int> prev_actions, Cache<S>& c) {
    c.Logits = (p.mat(Wp) * Hs).colwise() + p.mat(bp).col(0);
    c.V = (p.mat(Wv) * Hs).array() + p.mat(bv)(0, 0);
    c.Z = prediction_input<S>(Hs, prev_actions);
    c.Q1 = ((p.mat(P1) * c.Z).colwise() + p.mat(pb1).col(0)).cwiseMax(S(0));
    c.Q2 = ((p.mat(P2) * c.Q1).colwise() + p.mat(pb2).col(0)).cwiseMax(S(0));
    c.Pred = ((p.mat(P3) * c.Q2).colwise() + p.mat(pb3).col(0)).unaryExpr([](S x) { return sigmoid(x); });
    c.LogP.resize(c.Logits.rows(), c.Logits.cols());
    for (Eigen::Index j = 0; j < c.Logits.cols(); ++j) {
        const S m = c.Logits.col(j).maxCoeff();
        const S lse = m + std::log((c.Logits.col(j).array() - m).exp().sum());
        c.LogP.col(j) = c.Logits.col(j).array() - lse;
    }
}

template <typename S>
void run_forward(const Params<S>& p, const Unroll<S>& u, Cache<S>& c) {
    const auto& cfg = p.config();
    const int B = u.B;
    const Eigen::Index N = static_cast<Eigen::Index>(u.T + 1) * B;
    if (u.X.rows() != cfg.input_size() || u.X.cols() != N) throw ContractViolation("agent: unroll input has wrong shape");
    check_finite(u.X, "input");
    c.H1 = ((p.mat(W1) * u.X).colwise() + p.mat(b1).col(0)).unaryExpr([](S x) { return std::tanh(x); });
    c.A2 = (p.mat(W2) * c.H1).colwise() + p.mat(b2).col(0);
    c.H2 = c.A2.unaryExpr([](S x) { return elu(x); });
    c.Gates = (p.mat(Wx) * c.H2).colwise() + p.mat(bl).col(0);
    c.Hs.resize(cfg.belief, N);
    c.C.resize(cfg.belief, N);
    c.Hprev.resize(cfg.belief, N);
    c.Cprev.resize(cfg.belief, N);
    for (int t = 0; t <= u.T; ++t) {
        const Eigen::Index o = static_cast<Eigen::Index>(t) * B;
        if (t == 0) {
            c.Hprev.middleCols(o, B) = u.initial.h;
            c.Cprev.middleCols(o, B) = u.initial.c;
        } else {
            c.Hprev.middleCols(o, B) = c.Hs.middleCols(o - B, B);
            c.Cprev.middleCols(o, B) = c.C.middleCols(o - B, B);
        }
        for (int b = 0; b < B; ++b) {
            if (u.resets[static_cast<std::size_t>(o + b)]) {
                c.Hprev.col(o + b).setZero();
                c.Cprev.col(o + b).setZero();
            }
        }
        cell<S>(p, c.Gates.middleCols(o, B), c.Hprev.middleCols(o, B), c.Cprev.middleCols(o, B), c.Hs.middleCols(o, B),
                c.C.middleCols(o, B));
    }
    heads<S>(p, c.Hs, u.prev_actions, c);
}

template <typename S>
LossTerms<S> terms_from(const Cache<S>& c, const Unroll<S>& u, const Targets<S>& tg, const LossConfig& cfg) {
    const Eigen::Index TB = static_cast<Eigen::Index>(u.T) * u.B;
    if (static_cast<Eigen::Index>(tg.advantages.size()) != TB || static_cast<Eigen::Index>(tg.returns.size()) != TB) {
        throw ContractViolation("agent: targets do not match the unroll");
    }
    LossTerms<S> L;
    for (Eigen::Index j = 0; j < TB; ++j) {
        const auto js = static_cast<std::size_t>(j);
        L.policy -= tg.advantages[js] * c.LogP(u.actions[js], j);
        const S dv = c.V(j) - tg.returns[js];
        L.value += S(0.5) * dv * dv;
        L.entropy -= (c.LogP.col(j).array().exp() * c.LogP.col(j).array()).sum();
        if (u.att_mask[js]) L.attention += (c.Pred.col(j) - u.att_target.col(j)).cwiseAbs().sum();
    }
    const S inv = S(1) / static_cast<S>(TB);
    L.policy *= inv;
    L.value *= inv;
    L.entropy *= inv;
    L.attention *= inv;
    L.total = L.policy + S(cfg.value_coef) * L.value - S(cfg.entropy_coef) * L.entropy +
              S(cfg.attention_weight) * L.attention;
    const std::pair<const char*, S> named[] = {
        {"policy", L.policy}, {"value", L.value}, {"entropy", L.entropy}, {"attention", L.attention}};
    for (const auto& [name, v] : named) {
        if (!std::isfinite(static_cast<double>(v))) throw NumericError(std::string("agent: non-finite ") + name + " loss");
    }
    return L;
}

}  // namespace

const char* param_name(int id) { return kParamNames[id]; }

template <typename S>
Params<S>::Params(const NetConfig& config) : config_(config) {
    const Eigen::Index D = config.input_size(), E1 = config.enc1, E2 = config.enc2, H = config.belief;
    const Eigen::Index G = config.memory ? 4 * H : H;
    const std::pair<Eigen::Index, Eigen::Index> shapes[kNumParamIds] = {
        {E1, D}, {E1, 1}, {E2, E1}, {E2, 1}, {G, E2}, {config.memory ? G : 0, H}, {G, 1}, {kA, H}, {kA, 1}, {1, H}, {1, 1},
        {config.pred1, H + kA}, {config.pred1, 1}, {config.pred2, config.pred1}, {config.pred2, 1}, {2, config.pred2}, {2, 1}};
    Eigen::Index off = 0;
    for (const auto& [r, c] : shapes) {
        slots_.push_back(Slot{r, c, off});
        off += r * c;
    }
    data = Vec::Zero(off);
}

template <typename S>
void Params<S>::init(Rng& rng) {
    data.setZero();
    for (int id : {W1, W2, Wx, Wh, Wp, Wv, P1, P2, P3}) {
        auto m = mat(id);
        if (m.size() == 0) continue;
        const double a = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
        const double scale = id == Wp ? 0.01 : 1.0;
        for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = static_cast<S>(scale * uniform(rng, -a, a));
    }
    if (config_.memory) mat(bl).middleRows(config_.belief, config_.belief).setConstant(S(1));
}

template <typename S>
void build_input(const env::Observation& obs, int prev_action, Eigen::Ref<Eigen::Matrix<S, Eigen::Dynamic, 1>> out) {
    const int n = env::encoded_size(static_cast<int>(obs.rays.size()));
    if (out.size() != n + kA) throw ContractViolation("agent: input buffer has wrong size");
    Eigen::VectorXd tmp(n);
    env::encode_observation(obs, tmp);
    out.head(n) = tmp.cast<S>();
    out.tail(kA).setZero();
    if (prev_action >= 0) out(n + prev_action) = S(1);
}

template <typename S>
StepOutput<S> forward(const Params<S>& p, Belief<S>& belief, const Eigen::Ref<const Mat<S>>& x,
                      std::span<const int> prev_actions) {
    const auto& cfg = p.config();
    const Eigen::Index B = x.cols();
    if (x.rows() != cfg.input_size()) throw ContractViolation("agent: input has wrong size");
    if (belief.h.cols() != B || belief.h.rows() != cfg.belief) throw ContractViolation("agent: belief has wrong shape");
    if (static_cast<Eigen::Index>(prev_actions.size()) != B) throw ContractViolation("agent: prev_actions size mismatch");
    if (!x.allFinite()) throw NumericError("agent: non-finite input");
    const Mat<S> h1 = ((p.mat(W1) * x).colwise() + p.mat(b1).col(0)).unaryExpr([](S v) { return std::tanh(v); });
    const Mat<S> h2 = ((p.mat(W2) * h1).colwise() + p.mat(b2).col(0)).unaryExpr([](S v) { return elu(v); });
    Mat<S> gates = (p.mat(Wx) * h2).colwise() + p.mat(bl).col(0);
    Mat<S> h(cfg.belief, B), c(cfg.belief, B);
    cell<S>(p, gates, belief.h, belief.c, h, c);
    belief.h = std::move(h);
    belief.c = std::move(c);
    Cache<S> cache;
    heads<S>(p, belief.h, prev_actions, cache);
    return StepOutput<S>{std::move(cache.Logits), std::move(cache.V), std::move(cache.Pred)};
}

template <typename S>
S attention_loss(const Eigen::Ref<const Eigen::Matrix<S, 2, 1>>& prediction, const Eigen::Ref<const Eigen::Matrix<S, 2, 1>>& target,
                 bool expert_visible) {
    if (!expert_visible) return S(0);
    return (prediction - target).cwiseAbs().sum();
}

template <typename S>
void Unroll<S>::allocate(const NetConfig& cfg, int T_, int B_) {
    T = T_;
    B = B_;
    const auto TB = static_cast<std::size_t>(T) * static_cast<std::size_t>(B);
    const auto N = TB + static_cast<std::size_t>(B);
    X = Mat<S>::Zero(cfg.input_size(), static_cast<Eigen::Index>(N));
    prev_actions.assign(N, -1);
    actions.assign(TB, 0);
    rewards.assign(TB, S(0));
    dones.assign(TB, 0);
    resets.assign(N, 0);
    att_target = Mat<S>::Zero(2, static_cast<Eigen::Index>(TB));
    att_mask.assign(TB, 0);
    initial = Belief<S>::zeros(cfg, B);
}

template <typename S>
Targets<S> compute_targets(const Params<S>& p, const Unroll<S>& u, const LossConfig& cfg) {
    Cache<S> c;
    run_forward(p, u, c);
    const auto TB = static_cast<std::size_t>(u.T) * static_cast<std::size_t>(u.B);
    Targets<S> tg;
    tg.advantages.assign(TB, S(0));
    tg.returns.assign(TB, S(0));
    const S gamma = static_cast<S>(cfg.gamma), lam = static_cast<S>(cfg.gae_lambda);
    for (int b = 0; b < u.B; ++b) {
        S acc = 0;
        for (int t = u.T - 1; t >= 0; --t) {
            const auto i = static_cast<std::size_t>(t) * static_cast<std::size_t>(u.B) + static_cast<std::size_t>(b);
            const S live = u.dones[i] ? S(0) : S(1);
            const S next_v = c.V(static_cast<Eigen::Index>(i + static_cast<std::size_t>(u.B)));
            const S v = c.V(static_cast<Eigen::Index>(i));
            const S delta = u.rewards[i] + gamma * next_v * live - v;
            acc = delta + gamma * lam * live * acc;
            tg.advantages[i] = acc;
            tg.returns[i] = acc + v;
        }
    }
    return tg;
}

template <typename S>
LossTerms<S> loss(const Params<S>& p, const Unroll<S>& u, const Targets<S>& tg, const LossConfig& cfg) {
    Cache<S> c;
    run_forward(p, u, c);
    return terms_from(c, u, tg, cfg);
}

template <typename S>
Belief<S> final_belief(const Params<S>& p, const Unroll<S>& u) {
    Cache<S> c;
    run_forward(p, u, c);
    const Eigen::Index o = static_cast<Eigen::Index>(u.T - 1) * u.B;
    return Belief<S>{c.Hs.middleCols(o, u.B), c.C.middleCols(o, u.B)};
}

template <typename S>
LossTerms<S> loss_and_gradients(const Params<S>& p, const Unroll<S>& u, const Targets<S>& tg, const LossConfig& cfg,
                                Params<S>& grad) {
    Cache<S> c;
    run_forward(p, u, c);
    const LossTerms<S> L = terms_from(c, u, tg, cfg);

    const auto& nc = p.config();
    if (!(grad.config() == nc) || grad.size() != p.size()) grad = Params<S>(nc);
    grad.data.setZero();
    const int B = u.B;
    const Eigen::Index TB = static_cast<Eigen::Index>(u.T) * B;
    const Eigen::Index N = TB + B;
    const Eigen::Index H = nc.belief;
    const S inv = S(1) / static_cast<S>(TB);
    const S ce = static_cast<S>(cfg.entropy_coef), cv = static_cast<S>(cfg.value_coef), cw = static_cast<S>(cfg.attention_weight);

    // Head gradients on the first TB columns; the bootstrap block stays zero.
    Mat<S> dLogits = Mat<S>::Zero(kA, N);
    RowVec<S> dV = RowVec<S>::Zero(N);
    Mat<S> dZ3 = Mat<S>::Zero(2, N);
    for (Eigen::Index j = 0; j < TB; ++j) {
        const auto js = static_cast<std::size_t>(j);
        const auto lp = c.LogP.col(j).array();
        const Eigen::Array<S, Eigen::Dynamic, 1> pr = lp.exp();
        const S ent = -(pr * lp).sum();
        Eigen::Array<S, Eigen::Dynamic, 1> d = tg.advantages[js] * pr + ce * pr * (lp + ent);
        d(u.actions[js]) -= tg.advantages[js];
        dLogits.col(j) = inv * d.matrix();
        dV(j) = inv * cv * (c.V(j) - tg.returns[js]);
        if (u.att_mask[js]) {
            for (int k = 0; k < 2; ++k) {
                const S diff = c.Pred(k, j) - u.att_target(k, j);
                const S sgn = diff > S(0) ? S(1) : (diff < S(0) ? S(-1) : S(0));
                dZ3(k, j) = inv * cw * sgn * c.Pred(k, j) * (S(1) - c.Pred(k, j));
            }
        }
    }
    grad.mat(Wp).noalias() = dLogits * c.Hs.transpose();
    grad.mat(bp) = dLogits.rowwise().sum();
    grad.mat(Wv).noalias() = dV * c.Hs.transpose();
    grad.mat(bv)(0, 0) = dV.sum();
    grad.mat(P3).noalias() = dZ3 * c.Q2.transpose();
    grad.mat(pb3) = dZ3.rowwise().sum();
    Mat<S> dQ2 = (p.mat(P3).transpose() * dZ3).cwiseProduct((c.Q2.array() > S(0)).matrix().template cast<S>());
    grad.mat(P2).noalias() = dQ2 * c.Q1.transpose();
    grad.mat(pb2) = dQ2.rowwise().sum();
    Mat<S> dQ1 = (p.mat(P2).transpose() * dQ2).cwiseProduct((c.Q1.array() > S(0)).matrix().template cast<S>());
    grad.mat(P1).noalias() = dQ1 * c.Z.transpose();
    grad.mat(pb1) = dQ1.rowwise().sum();
    Mat<S> dHs = p.mat(Wp).transpose() * dLogits;
    dHs.noalias() += p.mat(Wv).transpose() * dV;
    dHs.noalias() += (p.mat(P1).transpose() * dQ1).topRows(H);

    // Through time.
    Mat<S> dG = Mat<S>::Zero(c.Gates.rows(), N);
    if (nc.memory) {
        Mat<S> dh_next = Mat<S>::Zero(H, B), dc_next = Mat<S>::Zero(H, B);
        const auto Whm = p.mat(Wh);
        for (int t = u.T - 1; t >= 0; --t) {
            const Eigen::Index o = static_cast<Eigen::Index>(t) * B;
            const auto g = c.Gates.middleCols(o, B);
            const auto gi = g.topRows(H).array();
            const auto gf = g.middleRows(H, H).array();
            const auto gg = g.middleRows(2 * H, H).array();
            const auto go = g.bottomRows(H).array();
            const Eigen::Array<S, Eigen::Dynamic, Eigen::Dynamic> tc = c.C.middleCols(o, B).array().tanh();
            const Eigen::Array<S, Eigen::Dynamic, Eigen::Dynamic> dh = (dHs.middleCols(o, B) + dh_next).array();
            const Eigen::Array<S, Eigen::Dynamic, Eigen::Dynamic> dc = dc_next.array() + dh * go * (S(1) - tc * tc);
            auto dz = dG.middleCols(o, B);
            dz.topRows(H) = (dc * gg * gi * (S(1) - gi)).matrix();
            dz.middleRows(H, H) = (dc * c.Cprev.middleCols(o, B).array() * gf * (S(1) - gf)).matrix();
            dz.middleRows(2 * H, H) = (dc * gi * (S(1) - gg * gg)).matrix();
            dz.bottomRows(H) = (dh * tc * go * (S(1) - go)).matrix();
            dh_next.noalias() = Whm.transpose() * dz;
            dc_next = (dc * gf).matrix();
            for (int b = 0; b < B; ++b) {
                if (u.resets[static_cast<std::size_t>(o + b)]) {
                    dh_next.col(b).setZero();
                    dc_next.col(b).setZero();
                }
            }
        }
        grad.mat(Wh).noalias() = dG.leftCols(TB) * c.Hprev.leftCols(TB).transpose();
    } else {
        dG.leftCols(TB) = (dHs.leftCols(TB).array() * (S(1) - c.Gates.leftCols(TB).array().square())).matrix();
    }
    grad.mat(Wx).noalias() = dG.leftCols(TB) * c.H2.leftCols(TB).transpose();
    grad.mat(bl) = dG.leftCols(TB).rowwise().sum();

    // Encoder.
    Mat<S> dA2 = (p.mat(Wx).transpose() * dG.leftCols(TB))
                     .cwiseProduct(c.A2.leftCols(TB).unaryExpr([](S x) { return elu_grad_from_pre(x); }));
    grad.mat(W2).noalias() = dA2 * c.H1.leftCols(TB).transpose();
    grad.mat(b2) = dA2.rowwise().sum();
    Mat<S> dA1 = (p.mat(W2).transpose() * dA2).cwiseProduct((S(1) - c.H1.leftCols(TB).array().square()).matrix());
    grad.mat(W1).noalias() = dA1 * u.X.leftCols(TB).transpose();
    grad.mat(b1) = dA1.rowwise().sum();

    if (!grad.data.allFinite()) throw NumericError("agent: non-finite gradient");
    return L;
}

template <typename S>
double Adam<S>::step(Params<S>& params, const Params<S>& grad) {
    if (grad.size() != params.size() || m_.size() != params.size()) throw ContractViolation("adam: size mismatch");
    const double norm = static_cast<double>(grad.data.norm());
    if (!std::isfinite(norm)) throw NumericError("adam: non-finite gradient norm");
    const S scale = (cfg_.max_grad_norm > 0 && norm > cfg_.max_grad_norm) ? static_cast<S>(cfg_.max_grad_norm / norm) : S(1);
    ++t_;
    const S b1c = static_cast<S>(1.0 - std::pow(cfg_.beta1, static_cast<double>(t_)));
    const S b2c = static_cast<S>(1.0 - std::pow(cfg_.beta2, static_cast<double>(t_)));
    const S beta1 = static_cast<S>(cfg_.beta1), beta2 = static_cast<S>(cfg_.beta2);
    m_ = beta1 * m_ + (S(1) - beta1) * scale * grad.data;
    v_ = beta2 * v_ + (S(1) - beta2) * (scale * grad.data).cwiseAbs2();
    const S lr = static_cast<S>(cfg_.lr), eps = static_cast<S>(cfg_.eps);
    params.data.array() -= lr * (m_.array() / b1c) / ((v_.array() / b2c).sqrt() + eps);
    return norm;
}

int sample_action(const Eigen::Ref<const Eigen::VectorXf>& logits, Rng& rng) {
    const float m = logits.maxCoeff();
    const Eigen::ArrayXf w = (logits.array() - m).exp();
    double u = uniform01(rng) * static_cast<double>(w.sum());
    for (Eigen::Index k = 0; k < w.size(); ++k) {
        u -= static_cast<double>(w(k));
        if (u < 0.0) return static_cast<int>(k);
    }
    return static_cast<int>(w.size() - 1);
}

int greedy_action(const Eigen::Ref<const Eigen::VectorXf>& logits) {
    Eigen::Index k = 0;
    logits.maxCoeff(&k);
    return static_cast<int>(k);
}

AgentPolicy::AgentPolicy(std::shared_ptr<const Params<float>> params, std::uint64_t seed, bool greedy)
    : params_(std::move(params)), rng_(seed), greedy_(greedy) {
    belief_ = Belief<float>::zeros(params_->config(), 1);
    x_ = Eigen::VectorXf::Zero(params_->config().input_size());
}

void AgentPolicy::begin_episode(const env::Episode& episode, int /*self*/) {
    if (episode.task().num_rays != params_->config().num_rays) throw ContractViolation("agent: ray count mismatch");
    belief_ = Belief<float>::zeros(params_->config(), 1);
    prev_action_ = -1;
}

env::Command AgentPolicy::act(const env::Episode& episode, int self) {
    build_input<float>(episode.observe(self), prev_action_, x_);
    const int prev[1] = {prev_action_};
    const auto out = forward<float>(*params_, belief_, x_, prev);
    prev_action_ = greedy_ ? greedy_action(out.logits.col(0)) : sample_action(out.logits.col(0), rng_);
    return static_cast<env::Action>(prev_action_);
}

env::PolicyFactory agent_factory(std::shared_ptr<const Params<float>> params, bool greedy) {
    return [params = std::move(params), greedy](std::uint64_t seed) -> std::unique_ptr<env::Policy> {
        return std::make_unique<AgentPolicy>(params, seed, greedy);
    };
}

#define GOALCYCLE_INSTANTIATE(S)                                                                                          \
    template class Params<S>;                                                                                             \
    template void build_input<S>(const env::Observation&, int, Eigen::Ref<Eigen::Matrix<S, Eigen::Dynamic, 1>>);         \
    template StepOutput<S> forward<S>(const Params<S>&, Belief<S>&, const Eigen::Ref<const Mat<S>>&, std::span<const int>); \
    template S attention_loss<S>(const Eigen::Ref<const Eigen::Matrix<S, 2, 1>>&,                                         \
                                 const Eigen::Ref<const Eigen::Matrix<S, 2, 1>>&, bool);                                  \
    template struct Unroll<S>;                                                                                            \
    template Targets<S> compute_targets<S>(const Params<S>&, const Unroll<S>&, const LossConfig&);                        \
    template LossTerms<S> loss<S>(const Params<S>&, const Unroll<S>&, const Targets<S>&, const LossConfig&);              \
    template LossTerms<S> loss_and_gradients<S>(const Params<S>&, const Unroll<S>&, const Targets<S>&, const LossConfig&, \
                                                Params<S>&);                                                              \
    template Belief<S> final_belief<S>(const Params<S>&, const Unroll<S>&);                                               \
    template class Adam<S>;

GOALCYCLE_INSTANTIATE(float)
GOALCYCLE_INSTANTIATE(double)

#undef GOALCYCLE_INSTANTIATE

}  // namespace goalcycle::agent
