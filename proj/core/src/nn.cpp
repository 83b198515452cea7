#include "fockctl/nn.hpp"

#include <cmath>
#include <stdexcept>

#include "fockctl/rng.hpp"

namespace fockctl {

namespace {

MatrixXd orthogonal(int rows, int cols, std::mt19937_64& rng, double gain) {
    const int n = std::max(rows, cols);
    const int k = std::min(rows, cols);
    MatrixXd g(n, k);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j) g(i, j) = standard_normal(rng);
    Eigen::HouseholderQR<MatrixXd> qr(g);
    MatrixXd q = qr.householderQ() * MatrixXd::Identity(n, k);
    const MatrixXd r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    for (int j = 0; j < k; ++j)
        if (r(j, j) < 0) q.col(j) = -q.col(j);
    MatrixXd out = (rows >= cols) ? q : MatrixXd(q.transpose());
    return gain * out;
}

}  // namespace

Mlp Mlp::init(const std::vector<int>& sizes, std::mt19937_64& rng, double final_gain) {
    if (sizes.size() < 2) throw std::invalid_argument("Mlp: need >= 2 layer sizes");
    Mlp p;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const bool last = (l + 2 == sizes.size());
        const double gain = last ? final_gain : std::sqrt(2.0);
        p.w.push_back(orthogonal(sizes[l + 1], sizes[l], rng, gain));
        p.b.push_back(VectorXd::Zero(sizes[l + 1]));
    }
    return p;
}

Mlp Mlp::zeros_like(const Mlp& other) {
    Mlp p;
    for (const auto& w : other.w) p.w.push_back(MatrixXd::Zero(w.rows(), w.cols()));
    for (const auto& b : other.b) p.b.push_back(VectorXd::Zero(b.size()));
    return p;
}

std::vector<int> Mlp::layer_sizes() const {
    std::vector<int> sizes{input_dim()};
    for (const auto& wl : w) sizes.push_back(static_cast<int>(wl.rows()));
    return sizes;
}

MatrixXd Mlp::forward(const MatrixXd& x) const {
    MatrixXd h = x;
    for (std::size_t l = 0; l < w.size(); ++l) {
        h = (w[l] * h).colwise() + b[l];
        if (l + 1 < w.size()) h = h.array().tanh();
    }
    return h;
}

MatrixXd Mlp::forward_cached(const MatrixXd& x, std::vector<MatrixXd>& acts) const {
    acts.clear();
    acts.push_back(x);
    for (std::size_t l = 0; l < w.size(); ++l) {
        MatrixXd h = (w[l] * acts.back()).colwise() + b[l];
        if (l + 1 < w.size()) h = h.array().tanh();
        acts.push_back(std::move(h));
    }
    return acts.back();
}

Mlp Mlp::backward(const std::vector<MatrixXd>& acts, const MatrixXd& grad_out) const {
    if (acts.size() != w.size() + 1)
        throw std::invalid_argument("Mlp::backward: cache mismatch");
    Mlp g = zeros_like(*this);
    MatrixXd delta = grad_out;  // dL/d(pre-activation of output layer)
    for (std::size_t l = w.size(); l-- > 0;) {
        g.w[l].noalias() = delta * acts[l].transpose();
        g.b[l] = delta.rowwise().sum();
        if (l > 0) {
            // tanh'(z) = 1 - a^2 with a the cached post-activation
            delta = (w[l].transpose() * delta).array() *
                    (1.0 - acts[l].array().square());
        }
    }
    return g;
}

double Mlp::squared_norm() const {
    double s = 0.0;
    for (const auto& wl : w) s += wl.squaredNorm();
    for (const auto& bl : b) s += bl.squaredNorm();
    return s;
}

void Mlp::scale(double s) {
    for (auto& wl : w) wl *= s;
    for (auto& bl : b) bl *= s;
}

void Mlp::axpy(double s, const Mlp& other) {
    for (std::size_t l = 0; l < w.size(); ++l) {
        w[l] += s * other.w[l];
        b[l] += s * other.b[l];
    }
}

std::size_t Mlp::param_count() const {
    std::size_t n = 0;
    for (const auto& wl : w) n += static_cast<std::size_t>(wl.size());
    for (const auto& bl : b) n += static_cast<std::size_t>(bl.size());
    return n;
}

std::vector<double> Mlp::flatten() const {
    std::vector<double> flat;
    flat.reserve(param_count());
    for (const auto& wl : w) flat.insert(flat.end(), wl.data(), wl.data() + wl.size());
    for (const auto& bl : b) flat.insert(flat.end(), bl.data(), bl.data() + bl.size());
    return flat;
}

void Mlp::unflatten(const std::vector<double>& flat) {
    if (flat.size() != param_count())
        throw std::invalid_argument("Mlp::unflatten: size mismatch");
    std::size_t off = 0;
    for (auto& wl : w) {
        std::copy(flat.begin() + off, flat.begin() + off + wl.size(), wl.data());
        off += static_cast<std::size_t>(wl.size());
    }
    for (auto& bl : b) {
        std::copy(flat.begin() + off, flat.begin() + off + bl.size(), bl.data());
        off += static_cast<std::size_t>(bl.size());
    }
}

void AdamState::update(Mlp& params, const Mlp& grads, double lr) {
    ++step;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    auto apply = [&](auto& p, const auto& g, auto& mm, auto& vv) {
        mm = beta1 * mm + (1.0 - beta1) * g;
        vv = beta2 * vv.array() + (1.0 - beta2) * g.array().square();
        p.array() -= lr * (mm.array() / bc1) / ((vv.array() / bc2).sqrt() + epsilon);
    };
    for (std::size_t l = 0; l < params.w.size(); ++l) {
        apply(params.w[l], grads.w[l], m.w[l], v.w[l]);
        apply(params.b[l], grads.b[l], m.b[l], v.b[l]);
    }
}

std::pair<VectorXd, double> GaussianPolicy::sample(const VectorXd& obs,
                                                   std::mt19937_64& rng) const {
    const VectorXd mu = mean(obs);
    VectorXd a(mu.size());
    for (int d = 0; d < mu.size(); ++d)
        a(d) = mu(d) + sigma(d) * standard_normal(rng);
    double logp = 0.0;
    for (int d = 0; d < mu.size(); ++d) {
        const double z = (a(d) - mu(d)) / sigma(d);
        logp += -0.5 * z * z - std::log(sigma(d)) - 0.5 * std::log(2.0 * M_PI);
    }
    return {a, logp};
}

double GaussianPolicy::log_prob(const VectorXd& obs, const VectorXd& action) const {
    const VectorXd mu = mean(obs);
    double logp = 0.0;
    for (int d = 0; d < mu.size(); ++d) {
        const double z = (action(d) - mu(d)) / sigma(d);
        logp += -0.5 * z * z - std::log(sigma(d)) - 0.5 * std::log(2.0 * M_PI);
    }
    return logp;
}

VectorXd GaussianPolicy::log_prob_from_means(const MatrixXd& means,
                                             const MatrixXd& actions) const {
    double base = 0.0;
    for (int d = 0; d < sigma.size(); ++d)
        base += -std::log(sigma(d)) - 0.5 * std::log(2.0 * M_PI);
    VectorXd out(means.cols());
    for (int c = 0; c < means.cols(); ++c) {
        double logp = base;
        for (int d = 0; d < sigma.size(); ++d) {
            const double z = (actions(d, c) - means(d, c)) / sigma(d);
            logp -= 0.5 * z * z;
        }
        out(c) = logp;
    }
    return out;
}

double GaussianPolicy::entropy() const {
    double h = 0.0;
    for (int d = 0; d < sigma.size(); ++d)
        h += 0.5 * std::log(2.0 * M_PI * std::exp(1.0)) + std::log(sigma(d));
    return h;
}

}  // namespace fockctl
