#pragma once

#include <memory>
#include <optional>
#include <random>
#include <vector>

#include "fockctl/fock.hpp"
#include "fockctl/sme.hpp"

namespace fockctl {

struct EnvConfig {
    int dim = 12;            // Fock cutoff N
    int n_max = 1000;        // action steps per episode
    double beta_mult = 20.0; // drive scale beta_max (T_max = 1 internally)
    double theta = 8.0;      // reward exponent
    TargetSpec target = TargetSpec::fock(1);
    ChannelConfig channels{.num_channels = 12, .gamma_meas = 400.0};
    NoiseConfig noise{};
    IntegratorConfig integ{};
    bool control_channels = false;  // false: all gates forced ON, 2-d actions

    int action_dim() const { return control_channels ? 2 + channels.num_channels : 2; }
    int obs_dim() const { return 2 * dim * dim; }
    void validate() const;  // throws std::invalid_argument with a field name
};

/// Flatten rho into [Re row-major..., Im row-major...] of length 2N^2.
Eigen::VectorXd encode_observation(const Mat& rho);
Mat decode_observation(const Eigen::VectorXd& obs, int dim);

/// Mean instantaneous reward over an episode; 1 iff every step had maximal
/// reward.
double normalized_return(const std::vector<double>& rewards, int n_max);

/// One cavity + measurement simulation exposed through an RL-environment
/// interface. Each instance owns its state and RNG stream; the trajectory
/// stream is keyed by (run seed, env index, episode counter).
class FeedbackEnv {
  public:
    struct StepResult {
        Eigen::VectorXd obs;
        double reward = 0.0;
        bool done = false;
    };

    FeedbackEnv(EnvConfig cfg, std::uint64_t run_seed, std::uint64_t env_index = 0);

    Eigen::VectorXd reset();
    ControlAction decode_action(const Eigen::VectorXd& raw) const;
    StepResult step(const Eigen::VectorXd& raw);

    const Mat& state() const { return rho_; }
    const EnvConfig& config() const { return cfg_; }
    const StepRecord& last_record() const { return last_record_; }
    const ControlAction& last_action() const { return last_action_; }
    int steps_done() const { return step_count_; }
    double time_now() const { return step_count_ * cfg_.integ.dt; }
    double fidelity_now() const { return fidelity(rho_, target_); }
    double purity_now() const { return purity(rho_); }

  private:
    EnvConfig cfg_;
    CVec target_;
    std::shared_ptr<const SmeIntegrator> sim_;
    Mat rho_;
    std::mt19937_64 rng_;
    std::uint64_t run_seed_ = 0;
    std::uint64_t env_index_ = 0;
    std::uint64_t episode_count_ = 0;
    int step_count_ = 0;
    bool done_ = true;
    bool leak_warned_ = false;
    StepRecord last_record_{};
    ControlAction last_action_{};
};

}  // namespace fockctl
