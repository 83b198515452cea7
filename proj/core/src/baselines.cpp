#include "fockctl/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "fockctl/rng.hpp"

namespace fockctl {

namespace {

double lfact(int n) {
    static std::vector<double> table = [] {
        std::vector<double> t(512);
        t[0] = 0.0;
        for (std::size_t k = 1; k < t.size(); ++k)
            t[k] = t[k - 1] + std::log(static_cast<double>(k));
        return t;
    }();
    if (n < static_cast<int>(table.size())) return table[static_cast<std::size_t>(n)];
    return std::lgamma(static_cast<double>(n) + 1.0);
}

}  // namespace

double displaced_overlap(int n, int l, double alpha) {
    if (n < 0 || l < 0) throw std::invalid_argument("displaced_overlap: negative index");
    const double aa = std::abs(alpha);
    if (aa == 0.0) return (n == l) ? 1.0 : 0.0;
    // |amplitude| = sqrt(k_min!/k_max!) a^{|l-n|} e^{-a^2/2}
    //               |L_{k_min}^{(|l-n|)}(a^2)|; the alternating-sum form of the
    //               same series cancels catastrophically at high n, l.
    const double x = aa * aa;
    const int kmin = std::min(n, l);
    const int kmax = std::max(n, l);
    const double logmag =
        0.5 * (lfact(kmin) - lfact(kmax)) + (kmax - kmin) * std::log(aa) - 0.5 * x;
    const double amp = std::exp(logmag) * generalized_laguerre(kmin, kmax - kmin, x);
    return amp * amp;
}

AlphaTable build_alpha_table(int n_table) {
    if (n_table < 2) throw std::invalid_argument("build_alpha_table: need >= 2");
    AlphaTable t;
    t.alpha = Eigen::MatrixXd::Zero(n_table, n_table);
    t.overlap = Eigen::MatrixXd::Zero(n_table, n_table);
    const double alpha_hi = 2.0 * std::sqrt(static_cast<double>(n_table));
    const int n_grid = 600;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int n = 0; n < n_table; ++n) {
        for (int l = 0; l < n_table; ++l) {
            if (n == l) {
                t.alpha(n, l) = 0.0;
                t.overlap(n, l) = 1.0;
                continue;
            }
            double best_a = 0.0, best_v = displaced_overlap(n, l, 0.0);
            for (int k = 1; k <= n_grid; ++k) {
                const double a = alpha_hi * k / n_grid;
                const double v = displaced_overlap(n, l, a);
                if (v > best_v) {
                    best_v = v;
                    best_a = a;
                }
            }
            // golden-section refinement around the grid winner
            double lo = std::max(0.0, best_a - alpha_hi / n_grid);
            double hi = std::min(alpha_hi, best_a + alpha_hi / n_grid);
            double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
            double f1 = displaced_overlap(n, l, x1), f2 = displaced_overlap(n, l, x2);
            for (int it = 0; it < 60; ++it) {
                if (f1 < f2) {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + gr * (hi - lo);
                    f2 = displaced_overlap(n, l, x2);
                } else {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - gr * (hi - lo);
                    f1 = displaced_overlap(n, l, x1);
                }
            }
            const double a_opt = 0.5 * (lo + hi);
            const double v_opt = displaced_overlap(n, l, a_opt);
            if (v_opt > best_v) {
                best_a = a_opt;
                best_v = v_opt;
            }
            t.alpha(n, l) = best_a;
            t.overlap(n, l) = best_v;
        }
    }
    return t;
}

StrongMeasureResult strong_measure_run(int target, const AlphaTable& table, int cutoff,
                                       int max_iters, std::mt19937_64& rng) {
    if (target >= cutoff || target >= table.size())
        throw std::invalid_argument("strong_measure_run: target out of range");
    StrongMeasureResult res;
    int n = 0;
    while (res.iterations < max_iters) {
        if (n == target) {
            res.success = true;
            return res;
        }
        const double alpha = table.alpha(n, target);
        ++res.iterations;
        // Born-rule sample of the displaced state's Fock distribution
        const double u =
            (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
        double acc = 0.0;
        int m = cutoff;  // falling off the end means the cutoff absorbed us
        for (int k = 0; k < cutoff; ++k) {
            acc += displaced_overlap(n, k, alpha);
            if (u <= acc) {
                m = k;
                break;
            }
        }
        if (m >= cutoff) return res;  // failure: escaped above the cutoff
        n = m;
        if (n == target) {
            res.success = true;
            return res;
        }
    }
    return res;
}

cplx greedy_step(const Mat& rho, const CVec& target, const GreedyConfig& cfg,
                 const SmeIntegrator& sim) {
    if (cfg.n_re < 1 || cfg.n_im < 1)
        throw std::invalid_argument("greedy_step: empty grid");
    double best_f = -1.0;
    cplx best_a(0.0, 0.0);
    bool have = false;
    for (int i = 0; i < cfg.n_re; ++i) {
        const double re = (cfg.n_re == 1)
                              ? 0.0
                              : -cfg.beta_max + 2.0 * cfg.beta_max * i / (cfg.n_re - 1);
        for (int j = 0; j < cfg.n_im; ++j) {
            const double im =
                (cfg.n_im == 1) ? 0.0
                                : -cfg.beta_max + 2.0 * cfg.beta_max * j / (cfg.n_im - 1);
            const cplx a(re, im);
            Mat r = rho;
            sim.drift_step(r, a, {});
            const double f = fidelity(r, target);
            const bool better =
                !have || f > best_f + 1e-12 ||
                (std::abs(f - best_f) <= 1e-12 &&
                 (std::abs(a) < std::abs(best_a) - 1e-12 ||
                  (std::abs(std::abs(a) - std::abs(best_a)) <= 1e-12 &&
                   (re < std::real(best_a) ||
                    (re == std::real(best_a) && im < std::imag(best_a))))));
            if (better) {
                best_f = f;
                best_a = a;
                have = true;
            }
        }
    }
    return best_a;
}

double greedy_episode(const EnvConfig& env_cfg, const GreedyConfig& cfg,
                      std::uint64_t seed, std::uint64_t traj_index) {
    EnvConfig ec = env_cfg;
    ec.control_channels = false;  // greedy drives only; all channels stay ON
    FeedbackEnv env(ec, seed, traj_index);
    SmeIntegrator lookahead(ec.dim, ec.channels, ec.noise, ec.integ);
    const CVec target = ec.target.state_vector(ec.dim);
    env.reset();
    Eigen::VectorXd raw(2);
    bool done = false;
    while (!done) {
        const cplx a = greedy_step(env.state(), target, cfg, lookahead);
        raw(0) = std::real(a) / ec.beta_mult;
        raw(1) = std::imag(a) / ec.beta_mult;
        done = env.step(raw).done;
    }
    return env.fidelity_now();
}

}  // namespace fockctl
