// Recurrent actor-critic network with an avatar-prediction head, its loss and gradients.
#pragma once

#include "goalcycle/episode.hpp"

#include <Eigen/Core>

#include <memory>
#include <string>
#include <vector>

namespace goalcycle::agent {

struct NetConfig {
    int num_rays = 64;
    int enc1 = 128;
    int enc2 = 64;
    int belief = 128;
    bool memory = true;  // false: the recurrent cell becomes a tanh layer of the same width
    int pred1 = 32;
    int pred2 = 64;

    int obs_size() const { return env::encoded_size(num_rays); }
    int input_size() const { return obs_size() + env::kNumActions; }
    friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

enum ParamId { W1, b1, W2, b2, Wx, Wh, bl, Wp, bp, Wv, bv, P1, pb1, P2, pb2, P3, pb3, kNumParamIds };

const char* param_name(int id);

/// All weights in one flat vector; `mat(id)` maps a named tensor (row-major shape, column-major storage).
template <typename Scalar>
class Params {
public:
    using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    struct Slot {
        Eigen::Index rows = 0;
        Eigen::Index cols = 0;
        Eigen::Index offset = 0;
    };

    Params() = default;
    explicit Params(const NetConfig& config);

    const NetConfig& config() const { return config_; }
    Eigen::Index size() const { return data.size(); }
    const Slot& slot(int id) const { return slots_[static_cast<std::size_t>(id)]; }

    Eigen::Map<Mat> mat(int id) {
        const auto& s = slot(id);
        return Eigen::Map<Mat>(data.data() + s.offset, s.rows, s.cols);
    }
    Eigen::Map<const Mat> mat(int id) const {
        const auto& s = slot(id);
        return Eigen::Map<const Mat>(data.data() + s.offset, s.rows, s.cols);
    }

    /// Glorot-uniform weights, zero biases, forget-gate bias 1, small policy head.
    void init(Rng& rng);

    template <typename T>
    Params<T> cast() const {
        Params<T> out(config_);
        out.data = data.template cast<T>();
        return out;
    }

    Vec data;

private:
    NetConfig config_;
    std::vector<Slot> slots_;
};

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

/// Network input: observation features then a one-hot of the previous action (zero when none).
template <typename Scalar>
void build_input(const env::Observation& obs, int prev_action, Eigen::Ref<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> out);

/// Recurrent state, one column per stream.
template <typename Scalar>
struct Belief {
    Mat<Scalar> h;
    Mat<Scalar> c;
    static Belief zeros(const NetConfig& cfg, int streams) {
        return Belief{Mat<Scalar>::Zero(cfg.belief, streams), Mat<Scalar>::Zero(cfg.belief, streams)};
    }
};

template <typename Scalar>
struct StepOutput {
    Mat<Scalar> logits;      // 5 x B
    RowVec<Scalar> value;    // 1 x B
    Mat<Scalar> prediction;  // 2 x B, scaled coordinates
};

/// One step for B streams. `prev_actions` feeds the prediction head (-1 = none).
/// Throws NumericError on non-finite input.
template <typename Scalar>
StepOutput<Scalar> forward(const Params<Scalar>& params, Belief<Scalar>& belief, const Eigen::Ref<const Mat<Scalar>>& x,
                           std::span<const int> prev_actions);

/// L1 distance when the expert is visible, else 0.
template <typename Scalar>
Scalar attention_loss(const Eigen::Ref<const Eigen::Matrix<Scalar, 2, 1>>& prediction,
                      const Eigen::Ref<const Eigen::Matrix<Scalar, 2, 1>>& target, bool expert_visible);

/// T steps of B streams, plus the observation after the last step for bootstrapping.
/// Column t*B + b holds stream b at step t.
template <typename Scalar>
struct Unroll {
    int T = 0;
    int B = 0;
    Mat<Scalar> X;                     // input_size x (T+1)B
    std::vector<int> prev_actions;     // (T+1)B, -1 = none
    std::vector<int> actions;          // TB
    std::vector<Scalar> rewards;       // TB
    std::vector<std::uint8_t> dones;   // TB, episode ended at this step
    std::vector<std::uint8_t> resets;  // (T+1)B, belief zeroed before this step
    Mat<Scalar> att_target;            // 2 x TB, scaled coordinates
    std::vector<std::uint8_t> att_mask;  // TB
    Belief<Scalar> initial;            // belief entering step 0

    void allocate(const NetConfig& cfg, int T, int B);
};

struct LossConfig {
    double gamma = 0.99;
    double gae_lambda = 0.95;
    double value_coef = 0.5;
    double entropy_coef = 0.01;
    double attention_weight = 10.0;
};

template <typename Scalar>
struct Targets {
    std::vector<Scalar> advantages;  // TB
    std::vector<Scalar> returns;     // TB
};

template <typename Scalar>
struct LossTerms {
    Scalar policy = 0;
    Scalar value = 0;
    Scalar entropy = 0;  // mean entropy (the objective subtracts entropy_coef times this)
    Scalar attention = 0;
    Scalar total = 0;
};

/// Generalised advantage estimates from the current parameters; constants for the loss.
template <typename Scalar>
Targets<Scalar> compute_targets(const Params<Scalar>& params, const Unroll<Scalar>& batch, const LossConfig& cfg);

template <typename Scalar>
LossTerms<Scalar> loss(const Params<Scalar>& params, const Unroll<Scalar>& batch, const Targets<Scalar>& targets,
                       const LossConfig& cfg);

/// Loss and its exact gradient by truncated backpropagation through time over the unroll.
/// `grad` is overwritten. Throws NumericError naming the offending term when non-finite.
template <typename Scalar>
LossTerms<Scalar> loss_and_gradients(const Params<Scalar>& params, const Unroll<Scalar>& batch,
                                     const Targets<Scalar>& targets, const LossConfig& cfg, Params<Scalar>& grad);

/// Belief carried out of the unroll (after its last step, before the bootstrap step).
template <typename Scalar>
Belief<Scalar> final_belief(const Params<Scalar>& params, const Unroll<Scalar>& batch);

struct AdamConfig {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double max_grad_norm = 5.0;  // <= 0 disables clipping
};

template <typename Scalar>
class Adam {
public:
    Adam() = default;
    Adam(Eigen::Index n, AdamConfig cfg) : cfg_(cfg), m_(Params<Scalar>::Vec::Zero(n)), v_(Params<Scalar>::Vec::Zero(n)) {}
    /// Returns the pre-clipping gradient norm.
    double step(Params<Scalar>& params, const Params<Scalar>& grad);
    long steps() const { return t_; }
    const AdamConfig& config() const { return cfg_; }
    typename Params<Scalar>::Vec& m() { return m_; }
    typename Params<Scalar>::Vec& v() { return v_; }
    void set_steps(long t) { t_ = t; }

private:
    AdamConfig cfg_;
    typename Params<Scalar>::Vec m_, v_;
    long t_ = 0;
};

/// Sample from softmax(logits) with one uniform draw.
int sample_action(const Eigen::Ref<const Eigen::VectorXf>& logits, Rng& rng);
int greedy_action(const Eigen::Ref<const Eigen::VectorXf>& logits);

/// Environment-facing wrapper; reads a shared read-only parameter snapshot.
class AgentPolicy : public env::Policy {
public:
    AgentPolicy(std::shared_ptr<const Params<float>> params, std::uint64_t seed, bool greedy = false);
    void begin_episode(const env::Episode& episode, int self) override;
    env::Command act(const env::Episode& episode, int self) override;

    const Belief<float>& belief() const { return belief_; }

private:
    std::shared_ptr<const Params<float>> params_;
    Rng rng_;
    bool greedy_ = false;
    Belief<float> belief_;
    int prev_action_ = -1;
    Eigen::VectorXf x_;
};

env::PolicyFactory agent_factory(std::shared_ptr<const Params<float>> params, bool greedy = false);

}  // namespace goalcycle::agent
