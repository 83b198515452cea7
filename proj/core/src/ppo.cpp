#include "fockctl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fockctl/rng.hpp"

namespace fockctl {

void PpoConfig::validate() const {
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw std::invalid_argument("ppo.gamma: need 0 < gamma <= 1");
    if (!(lam >= 0.0 && lam <= 1.0))
        throw std::invalid_argument("ppo.lam: need 0 <= lam <= 1");
    if (clip <= 0.0) throw std::invalid_argument("ppo.clip: must be > 0");
    if (n_steps < 0) throw std::invalid_argument("ppo.n_steps: must be >= 0");
    if (n_envs < 1) throw std::invalid_argument("ppo.n_envs: must be >= 1");
    if (n_minibatches < 1 || n_epochs < 1)
        throw std::invalid_argument("ppo: minibatches/epochs must be >= 1");
    if (total_updates < 0) throw std::invalid_argument("ppo.total_updates: must be >= 0");
    if (sigma <= 0.0) throw std::invalid_argument("ppo.sigma: must be > 0");
    if (lr <= 0.0) throw std::invalid_argument("ppo.lr: must be > 0");
}

RolloutBatch collect_rollout(std::vector<EnvSlot>& slots, const GaussianPolicy& policy,
                             const Mlp& value_net, int n_steps, std::mt19937_64& rng,
                             EpisodeStats* stats) {
    const int n_envs = static_cast<int>(slots.size());
    if (n_envs == 0) throw std::invalid_argument("collect_rollout: no envs");
    const int obs_dim = slots[0].env.config().obs_dim();
    const int act_dim = slots[0].env.config().action_dim();
    const int total = n_envs * n_steps;

    RolloutBatch b;
    b.n_envs = n_envs;
    b.n_steps = n_steps;
    b.obs.resize(obs_dim, total);
    b.actions.resize(act_dim, total);
    b.logp_old.resize(total);
    b.rewards.resize(total);
    b.values.resize(total);
    b.dones.resize(total);
    b.bootstrap.resize(n_envs);
    if (n_steps == 0) {
        b.bootstrap.setZero();
        return b;
    }

    for (auto& s : slots)
        if (s.obs.size() == 0) s.obs = s.env.reset();

    MatrixXd cur(obs_dim, n_envs);
    for (int t = 0; t < n_steps; ++t) {
        for (int e = 0; e < n_envs; ++e) cur.col(e) = slots[e].obs;
        const VectorXd values = value_net.forward(cur).row(0);
        for (int e = 0; e < n_envs; ++e) {
            const int c = b.col(t, e);
            auto [action, logp] = policy.sample(slots[e].obs, rng);
            auto res = slots[e].env.step(action);
            b.obs.col(c) = slots[e].obs;
            b.actions.col(c) = action;
            b.logp_old(c) = logp;
            b.rewards(c) = res.reward;
            b.values(c) = values(e);
            b.dones(c) = res.done ? 1.0 : 0.0;
            slots[e].ep_rewards.push_back(res.reward);
            if (res.done) {
                if (stats) {
                    ++stats->episodes;
                    stats->sum_return_norm += normalized_return(
                        slots[e].ep_rewards, slots[e].env.config().n_max);
                    stats->sum_final_fidelity += slots[e].env.fidelity_now();
                }
                slots[e].ep_rewards.clear();
                slots[e].obs = slots[e].env.reset();
            } else {
                slots[e].obs = res.obs;
            }
        }
    }
    for (int e = 0; e < n_envs; ++e) cur.col(e) = slots[e].obs;
    b.bootstrap = value_net.forward(cur).row(0);
    return b;
}

void compute_gae(RolloutBatch& b, double gamma, double lam, bool normalize) {
    const int total = b.size();
    b.advantages.resize(total);
    b.returns.resize(total);
    if (total == 0) return;
    for (int e = 0; e < b.n_envs; ++e) {
        double gae = 0.0;
        for (int t = b.n_steps - 1; t >= 0; --t) {
            const int c = b.col(t, e);
            const double nonterm = 1.0 - b.dones(c);
            const double v_next =
                (t + 1 < b.n_steps) ? b.values(b.col(t + 1, e)) : b.bootstrap(e);
            const double delta = b.rewards(c) + gamma * v_next * nonterm - b.values(c);
            gae = delta + gamma * lam * nonterm * gae;
            b.advantages(c) = gae;
        }
    }
    b.returns = b.advantages + b.values;
    if (normalize) {
        const double mean = b.advantages.mean();
        const double var =
            (b.advantages.array() - mean).square().sum() / std::max(total, 1);
        b.advantages = (b.advantages.array() - mean) / (std::sqrt(var) + 1e-8);
    }
}

LossResult ppo_loss(const RolloutBatch& batch, const std::vector<int>& idx,
                    const GaussianPolicy& policy, const Mlp& value_net,
                    const PpoConfig& cfg) {
    const int bsz = static_cast<int>(idx.size());
    if (bsz == 0) throw std::invalid_argument("ppo_loss: empty minibatch");
    const int obs_dim = static_cast<int>(batch.obs.rows());
    const int act_dim = static_cast<int>(batch.actions.rows());

    MatrixXd obs(obs_dim, bsz), actions(act_dim, bsz);
    VectorXd logp_old(bsz), adv(bsz), ret(bsz);
    for (int i = 0; i < bsz; ++i) {
        obs.col(i) = batch.obs.col(idx[i]);
        actions.col(i) = batch.actions.col(idx[i]);
        logp_old(i) = batch.logp_old(idx[i]);
        adv(i) = batch.advantages(idx[i]);
        ret(i) = batch.returns(idx[i]);
    }

    LossResult out;

    // policy branch
    std::vector<MatrixXd> pol_cache;
    const MatrixXd means = policy.mean_net.forward_cached(obs, pol_cache);
    const VectorXd logp_new = policy.log_prob_from_means(means, actions);
    MatrixXd dmean = MatrixXd::Zero(act_dim, bsz);
    double surr_sum = 0.0;
    int clipped = 0;
    double kl_sum = 0.0;
    for (int i = 0; i < bsz; ++i) {
        const double ratio = std::exp(logp_new(i) - logp_old(i));
        const double clip_ratio = std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip);
        const double surr1 = ratio * adv(i);
        const double surr2 = clip_ratio * adv(i);
        surr_sum += std::min(surr1, surr2);
        if (std::abs(ratio - 1.0) > cfg.clip) ++clipped;
        kl_sum += (ratio - 1.0) - std::log(std::max(ratio, 1e-300));
        if (surr1 <= surr2) {
            // unclipped branch active: dL/dlogp_new = -(1/B) ratio * adv
            const double g = -(1.0 / bsz) * ratio * adv(i);
            for (int d = 0; d < act_dim; ++d) {
                const double s = policy.sigma(d);
                dmean(d, i) = g * (actions(d, i) - means(d, i)) / (s * s);
            }
        }
    }
    out.policy_loss = -surr_sum / bsz;
    out.clip_frac = static_cast<double>(clipped) / bsz;
    out.approx_kl = kl_sum / bsz;
    out.entropy = policy.entropy();
    out.policy_grad = policy.mean_net.backward(pol_cache, dmean);

    // value branch
    std::vector<MatrixXd> val_cache;
    const VectorXd v = value_net.forward_cached(obs, val_cache).row(0);
    const VectorXd err = v - ret;
    out.value_loss = err.squaredNorm() / bsz;
    MatrixXd dv(1, bsz);
    dv.row(0) = (cfg.vf_coef * 2.0 / bsz) * err;
    out.value_grad = value_net.backward(val_cache, dv);

    out.loss = out.policy_loss + cfg.vf_coef * out.value_loss - cfg.ent_coef * out.entropy;
    if (!std::isfinite(out.loss)) throw std::runtime_error("ppo_loss: non-finite loss");
    return out;
}

namespace {

double global_grad_norm(const Mlp& a, const Mlp& b) {
    return std::sqrt(a.squared_norm() + b.squared_norm());
}

}  // namespace

TrainResult train(const EnvConfig& env_cfg, const PpoConfig& ppo_cfg, std::uint64_t seed,
                  const std::function<void(const TrainLogRow&, const TrainResult&)>&
                      on_update) {
    env_cfg.validate();
    ppo_cfg.validate();

    const int obs_dim = env_cfg.obs_dim();
    const int act_dim = env_cfg.action_dim();

    auto init_rng = make_stream(seed, 0xA11C, 0);
    TrainResult res;
    res.policy.mean_net = Mlp::init({obs_dim, 64, 64, act_dim}, init_rng, 0.01);
    res.policy.sigma = VectorXd::Constant(act_dim, ppo_cfg.sigma);
    res.value_net = Mlp::init({obs_dim, 64, 64, 1}, init_rng, 1.0);

    res.adam_policy = AdamState(res.policy.mean_net);
    res.adam_value = AdamState(res.value_net);
    AdamState& adam_policy = res.adam_policy;
    AdamState& adam_value = res.adam_value;

    std::vector<EnvSlot> slots;
    slots.reserve(ppo_cfg.n_envs);
    for (int e = 0; e < ppo_cfg.n_envs; ++e)
        slots.push_back(EnvSlot{FeedbackEnv(env_cfg, seed, static_cast<std::uint64_t>(e)),
                                Eigen::VectorXd(), {}});

    auto sample_rng = make_stream(seed, 0x5A3F, 0);
    auto shuffle_rng = make_stream(seed, 0x5481, 0);

    const int batch_total = ppo_cfg.n_envs * ppo_cfg.n_steps;
    for (int update = 1; update <= ppo_cfg.total_updates; ++update) {
        EpisodeStats stats;
        RolloutBatch batch;
        try {
            batch = collect_rollout(slots, res.policy, res.value_net, ppo_cfg.n_steps,
                                    sample_rng, &stats);
        } catch (const IntegratorInstability& e) {
            res.aborted = true;
            res.abort_reason = e.what();
            break;
        }
        res.episodes += stats.episodes;
        res.env_steps += batch_total;
        compute_gae(batch, ppo_cfg.gamma, ppo_cfg.lam, ppo_cfg.normalize_advantages);

        TrainLogRow row;
        row.update = update;
        row.env_steps = res.env_steps;
        row.mean_return_norm =
            stats.episodes ? stats.sum_return_norm / stats.episodes : 0.0;
        row.mean_final_fidelity =
            stats.episodes ? stats.sum_final_fidelity / stats.episodes : 0.0;

        std::vector<int> order(batch_total);
        std::iota(order.begin(), order.end(), 0);
        const int mb_size = std::max(1, batch_total / ppo_cfg.n_minibatches);
        bool update_failed = false;
        int n_losses = 0;
        for (int epoch = 0; epoch < ppo_cfg.n_epochs && !update_failed; ++epoch) {
            std::shuffle(order.begin(), order.end(), shuffle_rng);
            for (int mb = 0; mb < ppo_cfg.n_minibatches; ++mb) {
                const int lo = mb * mb_size;
                const int hi = (mb + 1 == ppo_cfg.n_minibatches) ? batch_total
                                                                 : (mb + 1) * mb_size;
                std::vector<int> idx(order.begin() + lo, order.begin() + hi);
                LossResult lr;
                try {
                    lr = ppo_loss(batch, idx, res.policy, res.value_net, ppo_cfg);
                } catch (const std::runtime_error& e) {
                    res.aborted = true;
                    res.abort_reason = e.what();
                    update_failed = true;
                    break;
                }
                const double gnorm = global_grad_norm(lr.policy_grad, lr.value_grad);
                if (gnorm > ppo_cfg.max_grad_norm && gnorm > 0.0) {
                    const double s = ppo_cfg.max_grad_norm / gnorm;
                    lr.policy_grad.scale(s);
                    lr.value_grad.scale(s);
                }
                adam_policy.update(res.policy.mean_net, lr.policy_grad, ppo_cfg.lr);
                adam_value.update(res.value_net, lr.value_grad, ppo_cfg.lr);
                row.policy_loss += lr.policy_loss;
                row.value_loss += lr.value_loss;
                row.clip_frac += lr.clip_frac;
                row.approx_kl += lr.approx_kl;
                row.grad_norm += gnorm;
                ++n_losses;
            }
        }
        if (n_losses > 0) {
            row.policy_loss /= n_losses;
            row.value_loss /= n_losses;
            row.clip_frac /= n_losses;
            row.approx_kl /= n_losses;
            row.grad_norm /= n_losses;
        }
        res.log.push_back(row);
        if (on_update) on_update(row, res);
        if (res.aborted) break;

        if (ppo_cfg.stop_fidelity > 0.0 && ppo_cfg.eval_every > 0 &&
            update % ppo_cfg.eval_every == 0) {
            const EvalStats es = evaluate(res.policy, env_cfg, ppo_cfg.eval_n_traj,
                                          true, seed ^ 0xEBA1u);
            if (es.mean_final_fidelity >= ppo_cfg.stop_fidelity) break;
        }
        if (ppo_cfg.max_episodes > 0 && res.episodes >= ppo_cfg.max_episodes) break;
    }
    return res;
}

EvalStats evaluate(const GaussianPolicy& policy, const EnvConfig& env_cfg, int n_traj,
                   bool deterministic, std::uint64_t seed,
                   const std::function<void(int, const TrajectoryLog&)>& sink) {
    env_cfg.validate();
    EvalStats stats;
    stats.n_traj = n_traj;
    const int dim = env_cfg.dim;
    const int n_max = env_cfg.n_max;
    stats.mean_populations = MatrixXd::Zero(n_max + 1, dim);
    const std::vector<int> snap_steps{0, n_max / 3, (2 * n_max) / 3, n_max};
    stats.mean_states.assign(4, Mat::Zero(dim, dim));
    if (n_traj == 0) return stats;

    for (int traj = 0; traj < n_traj; ++traj) {
        FeedbackEnv env(env_cfg, seed, static_cast<std::uint64_t>(traj));
        auto act_rng = make_stream(seed, static_cast<std::uint64_t>(traj), 0xAC710);
        Eigen::VectorXd obs = env.reset();
        TrajectoryLog log;
        if (sink) log.reserve(static_cast<std::size_t>(n_max));
        stats.mean_populations.row(0) += env.state().diagonal().real().transpose();
        for (std::size_t s = 0; s < snap_steps.size(); ++s)
            if (snap_steps[s] == 0) stats.mean_states[s] += env.state();
        bool done = false;
        while (!done) {
            Eigen::VectorXd action = deterministic
                                         ? policy.mean(obs)
                                         : policy.sample(obs, act_rng).first;
            auto res = env.step(action);
            obs = res.obs;
            done = res.done;
            const int step = env.steps_done();
            stats.mean_populations.row(step) +=
                env.state().diagonal().real().transpose();
            for (std::size_t s = 0; s < snap_steps.size(); ++s)
                if (snap_steps[s] == step) stats.mean_states[s] += env.state();
            if (sink) {
                TrajStepRow row;
                row.step = step;
                row.t = env.time_now();
                row.re_beta = std::real(env.last_action().beta);
                row.im_beta = std::imag(env.last_action().beta);
                for (bool g : env.last_action().gates) row.gates.push_back(g ? 1 : 0);
                row.fidelity = env.fidelity_now();
                row.purity = env.purity_now();
                row.populations = env.state().diagonal().real();
                row.records = env.last_record().homodyne;
                log.push_back(std::move(row));
            }
        }
        stats.final_fidelities.push_back(env.fidelity_now());
        if (sink) sink(traj, log);
    }
    stats.mean_populations /= n_traj;
    for (auto& m : stats.mean_states) m /= static_cast<double>(n_traj);
    double sum = 0.0;
    for (double f : stats.final_fidelities) sum += f;
    stats.mean_final_fidelity = sum / n_traj;
    double sq = 0.0;
    for (double f : stats.final_fidelities)
        sq += (f - stats.mean_final_fidelity) * (f - stats.mean_final_fidelity);
    stats.std_final_fidelity = std::sqrt(sq / n_traj);
    return stats;
}

}  // namespace fockctl
