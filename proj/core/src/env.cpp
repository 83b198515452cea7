#include "fockctl/env.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

#include "fockctl/rng.hpp"

namespace fockctl {

void EnvConfig::validate() const {
    if (dim < 2) throw std::invalid_argument("env.dim: must be >= 2");
    if (n_max < 1) throw std::invalid_argument("env.n_max: must be >= 1");
    if (theta < 1.0) throw std::invalid_argument("env.theta: must be >= 1");
    if (beta_mult < 0.0) throw std::invalid_argument("env.beta_mult: must be >= 0");
    if (channels.num_channels < 0 || channels.num_channels > dim)
        throw std::invalid_argument("channels.num_channels: need 0 <= M <= dim");
    if (channels.gamma_meas < 0.0)
        throw std::invalid_argument("channels.gamma_meas: must be >= 0");
    if (noise.gamma_decay < 0.0 || noise.gamma_dephasing < 0.0)
        throw std::invalid_argument("noise: rates must be >= 0");
    if (integ.dt <= 0.0) throw std::invalid_argument("integrator.dt: must be > 0");
    if (integ.n_sub < 1) throw std::invalid_argument("integrator.n_sub: must be >= 1");
    if (target.max_index() >= dim)
        throw std::invalid_argument("env.target: fock index >= cutoff");
    (void)target.state_vector(dim);
}

Eigen::VectorXd encode_observation(const Mat& rho) {
    const int d = static_cast<int>(rho.rows());
    Eigen::VectorXd v(2 * d * d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            v(i * d + j) = std::real(rho(i, j));
            v(d * d + i * d + j) = std::imag(rho(i, j));
        }
    return v;
}

Mat decode_observation(const Eigen::VectorXd& obs, int dim) {
    if (obs.size() != 2 * dim * dim)
        throw std::invalid_argument("decode_observation: length != 2N^2");
    Mat rho(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
            rho(i, j) = cplx(obs(i * dim + j), obs(dim * dim + i * dim + j));
    return rho;
}

double normalized_return(const std::vector<double>& rewards, int n_max) {
    double s = 0.0;
    for (double r : rewards) s += r;
    return s / n_max;
}

FeedbackEnv::FeedbackEnv(EnvConfig cfg, std::uint64_t run_seed, std::uint64_t env_index)
    : cfg_(std::move(cfg)), run_seed_(run_seed), env_index_(env_index) {
    cfg_.validate();
    target_ = cfg_.target.state_vector(cfg_.dim);
    sim_ = std::make_shared<const SmeIntegrator>(cfg_.dim, cfg_.channels, cfg_.noise,
                                                 cfg_.integ);
}

Eigen::VectorXd FeedbackEnv::reset() {
    rho_ = Mat::Zero(cfg_.dim, cfg_.dim);
    rho_(0, 0) = 1.0;
    rng_ = make_stream(run_seed_, env_index_, episode_count_);
    ++episode_count_;
    step_count_ = 0;
    done_ = false;
    leak_warned_ = false;
    return encode_observation(rho_);
}

ControlAction FeedbackEnv::decode_action(const Eigen::VectorXd& raw) const {
    const int want = cfg_.action_dim();
    if (raw.size() != want)
        throw std::invalid_argument("decode_action: expected length " +
                                    std::to_string(want));
    ControlAction a;
    const double re = std::clamp(raw(0), -1.0, 1.0);
    const double im = std::clamp(raw(1), -1.0, 1.0);
    a.beta = cfg_.beta_mult * cplx(re, im);
    const int m = cfg_.channels.num_channels;
    a.gates.assign(static_cast<std::size_t>(m), true);
    if (cfg_.control_channels)
        for (int k = 0; k < m; ++k) a.gates[static_cast<std::size_t>(k)] = raw(2 + k) > 0.0;
    return a;
}

FeedbackEnv::StepResult FeedbackEnv::step(const Eigen::VectorXd& raw) {
    if (done_) throw std::logic_error("FeedbackEnv::step: episode already finished");
    last_action_ = decode_action(raw);
    last_record_ = sim_->step(rho_, last_action_, rng_);
    ++step_count_;
    if (!leak_warned_ && truncation_leakage(rho_) > 1e-3) {
        std::cerr << "[fockctl] warning: top-level Fock population exceeds 1e-3; "
                     "cutoff N=" << cfg_.dim << " may be too small\n";
        leak_warned_ = true;
    }
    StepResult out;
    out.reward = std::pow(fidelity(rho_, target_), cfg_.theta);
    out.done = done_ = (step_count_ >= cfg_.n_max);
    out.obs = encode_observation(rho_);
    return out;
}

}  // namespace fockctl
