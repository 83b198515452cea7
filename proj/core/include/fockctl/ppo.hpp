#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fockctl/env.hpp"
#include "fockctl/nn.hpp"

namespace fockctl {

struct PpoConfig {
    double gamma = 0.99;
    double lam = 0.95;
    int n_steps = 128;
    int n_envs = 8;
    double clip = 0.2;
    double ent_coef = 0.0;
    double vf_coef = 0.5;
    double max_grad_norm = 0.5;
    double lr = 2.5e-4;
    int n_minibatches = 4;
    int n_epochs = 4;
    int total_updates = 3000;
    double sigma = 0.4;        // fixed policy std per action dim
    bool normalize_advantages = true;

    // optional early stopping on deterministic evaluation
    int eval_every = 0;        // 0 disables periodic evaluation
    int eval_n_traj = 20;
    double stop_fidelity = -1.0;  // stop once mean final fidelity reaches this
    long max_episodes = -1;       // stop after this many finished episodes

    void validate() const;
};

/// Flat rollout storage; column index = step * n_envs + env.
struct RolloutBatch {
    int n_envs = 0;
    int n_steps = 0;
    MatrixXd obs;       // obs_dim x T
    MatrixXd actions;   // act_dim x T
    VectorXd logp_old;
    VectorXd rewards;
    VectorXd values;
    VectorXd dones;     // 1 if the episode terminated on this step
    VectorXd bootstrap; // V(s_T) per env, for truncated tails
    VectorXd advantages;
    VectorXd returns;

    int size() const { return n_envs * n_steps; }
    int col(int step, int env) const { return step * n_envs + env; }
};

/// One environment plus its between-rollout carry-over state.
struct EnvSlot {
    FeedbackEnv env;
    Eigen::VectorXd obs;
    std::vector<double> ep_rewards;
};

/// Aggregate stats over the episodes that finished inside a rollout.
struct EpisodeStats {
    long episodes = 0;
    double sum_return_norm = 0.0;
    double sum_final_fidelity = 0.0;
};

RolloutBatch collect_rollout(std::vector<EnvSlot>& slots, const GaussianPolicy& policy,
                             const Mlp& value_net, int n_steps, std::mt19937_64& rng,
                             EpisodeStats* stats = nullptr);

/// delta_t = r_t + gamma V_{t+1} (1-done) - V_t; advantage = GAE(gamma, lam)
/// truncated at episode and rollout boundaries; returns = advantage + value.
/// Normalization (when enabled) happens after returns are formed.
void compute_gae(RolloutBatch& batch, double gamma, double lam, bool normalize);

struct LossResult {
    double loss = 0.0;
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
    double clip_frac = 0.0;
    double approx_kl = 0.0;
    Mlp policy_grad;
    Mlp value_grad;
};

/// Clipped-surrogate PPO loss and its exact gradients over the minibatch
/// selected by `idx`. Throws std::runtime_error on a non-finite loss.
LossResult ppo_loss(const RolloutBatch& batch, const std::vector<int>& idx,
                    const GaussianPolicy& policy, const Mlp& value_net,
                    const PpoConfig& cfg);

struct TrainLogRow {
    int update = 0;
    long env_steps = 0;
    double mean_return_norm = 0.0;
    double mean_final_fidelity = 0.0;
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double clip_frac = 0.0;
    double approx_kl = 0.0;
    double grad_norm = 0.0;
};

struct TrainResult {
    GaussianPolicy policy;
    Mlp value_net;
    AdamState adam_policy;
    AdamState adam_value;
    std::vector<TrainLogRow> log;
    long episodes = 0;
    long env_steps = 0;
    bool aborted = false;
    std::string abort_reason;
};

/// Full PPO training loop. Deterministic for a fixed (configs, seed).
/// `on_update` (optional) observes every log row together with the training
/// state so far (for streaming logs and periodic checkpoints).
TrainResult train(const EnvConfig& env_cfg, const PpoConfig& ppo_cfg,
                  std::uint64_t seed,
                  const std::function<void(const TrainLogRow&, const TrainResult&)>&
                      on_update = {});

struct TrajStepRow {
    int step = 0;
    double t = 0.0;
    double re_beta = 0.0, im_beta = 0.0;
    std::vector<int> gates;
    double fidelity = 0.0, purity = 0.0;
    Eigen::VectorXd populations;
    Eigen::VectorXd records;
};
using TrajectoryLog = std::vector<TrajStepRow>;

struct EvalStats {
    int n_traj = 0;
    double mean_final_fidelity = 0.0;
    double std_final_fidelity = 0.0;
    std::vector<double> final_fidelities;
    MatrixXd mean_populations;  // (n_max+1) x dim, row 0 = initial state
    std::vector<Mat> mean_states;  // mean rho at fractions {0, 1/3, 2/3, 1} of T_max
};

/// Rolls out `n_traj` full episodes under the (optionally deterministic)
/// policy; physics noise stays stochastic. The sink, when set, receives each
/// trajectory's step log.
EvalStats evaluate(const GaussianPolicy& policy, const EnvConfig& env_cfg, int n_traj,
                   bool deterministic, std::uint64_t seed,
                   const std::function<void(int, const TrajectoryLog&)>& sink = {});

}  // namespace fockctl
