#pragma once

#include <random>
#include <vector>

#include <Eigen/Dense>

namespace fockctl {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Dense tanh MLP with a linear output layer. Forward/backward operate on
/// column-batched inputs. The same struct doubles as a gradient container.
struct Mlp {
    std::vector<MatrixXd> w;  // w[l] is (out x in)
    std::vector<VectorXd> b;

    /// Orthogonal init, gain sqrt(2) on hidden layers and `final_gain` on the
    /// output layer.
    static Mlp init(const std::vector<int>& sizes, std::mt19937_64& rng,
                    double final_gain = 1.0);
    static Mlp zeros_like(const Mlp& other);

    int input_dim() const { return static_cast<int>(w.front().cols()); }
    int output_dim() const { return static_cast<int>(w.back().rows()); }
    std::vector<int> layer_sizes() const;

    MatrixXd forward(const MatrixXd& x) const;

    /// Forward pass that keeps post-activation values for backward().
    /// acts[0] = x, acts[l] = activation after layer l (output layer linear).
    MatrixXd forward_cached(const MatrixXd& x, std::vector<MatrixXd>& acts) const;

    /// Reverse-mode gradients w.r.t. all weights and biases given
    /// dLoss/d(output) for the cached batch. Gradients are summed over the
    /// batch columns.
    Mlp backward(const std::vector<MatrixXd>& acts, const MatrixXd& grad_out) const;

    // parameter-vector arithmetic
    double squared_norm() const;
    void scale(double s);
    void axpy(double s, const Mlp& other);  // this += s * other
    std::size_t param_count() const;
    std::vector<double> flatten() const;
    void unflatten(const std::vector<double>& flat);
};

/// Adam with bias correction; moment buffers mirror the parameter layout.
struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-5;
    long step = 0;
    Mlp m, v;

    AdamState() = default;
    explicit AdamState(const Mlp& params)
        : m(Mlp::zeros_like(params)), v(Mlp::zeros_like(params)) {}
    void update(Mlp& params, const Mlp& grads, double lr);
};

/// Diagonal Gaussian policy with a state-independent, fixed standard
/// deviation per action dimension. The network outputs the mean.
struct GaussianPolicy {
    Mlp mean_net;
    VectorXd sigma;

    int action_dim() const { return mean_net.output_dim(); }

    VectorXd mean(const VectorXd& obs) const { return mean_net.forward(obs); }
    MatrixXd mean_batch(const MatrixXd& obs) const { return mean_net.forward(obs); }

    /// Draws a = mu + sigma * z and returns (a, log pi(a)). The raw action is
    /// left unclamped; range enforcement is the environment's job.
    std::pair<VectorXd, double> sample(const VectorXd& obs, std::mt19937_64& rng) const;

    double log_prob(const VectorXd& obs, const VectorXd& action) const;

    /// log pi(a_i) per batch column given precomputed means.
    VectorXd log_prob_from_means(const MatrixXd& means, const MatrixXd& actions) const;

    /// Differential entropy; constant because sigma is fixed.
    double entropy() const;
};

}  // namespace fockctl
