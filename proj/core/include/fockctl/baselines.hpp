#pragma once

#include <random>

#include <Eigen/Dense>

#include "fockctl/env.hpp"
#include "fockctl/sme.hpp"

namespace fockctl {

/// |<l| D(alpha) |n>|^2 from the closed-form displaced-number series,
/// evaluated with log-factorial accumulation. Depends on |alpha| only.
double displaced_overlap(int n, int l, double alpha);

/// Optimal real displacements alpha_optim(n, l) maximizing
/// displaced_overlap(n, l, .), with the achieved overlaps.
struct AlphaTable {
    Eigen::MatrixXd alpha;    // (n, l)
    Eigen::MatrixXd overlap;  // value at the optimum
    int size() const { return static_cast<int>(alpha.rows()); }
};

/// Grid seeding plus golden-section refinement over alpha in [0, 2 sqrt(N)].
AlphaTable build_alpha_table(int n_table);

struct StrongMeasureResult {
    bool success = false;
    int iterations = 0;  // displacement+measurement rounds used
};

/// Iterate: displace the current Fock state by alpha_optim(n, l), projectively
/// sample the next Fock state by the Born rule, stop on reaching l. A sample
/// at or above `cutoff`, or exhausting `max_iters`, counts as failure.
StrongMeasureResult strong_measure_run(int target, const AlphaTable& table, int cutoff,
                                       int max_iters, std::mt19937_64& rng);

struct GreedyConfig {
    int n_re = 21;
    int n_im = 21;
    double beta_max = 20.0;
};

/// One-step greedy drive choice: evolve rho through the deterministic drift
/// (dW = 0) under every candidate displacement and return the one maximizing
/// post-step fidelity. Ties break toward smaller |alpha|, then
/// lexicographically on (Re, Im).
cplx greedy_step(const Mat& rho, const CVec& target, const GreedyConfig& cfg,
                 const SmeIntegrator& sim);

/// Full stochastic episode driven by the greedy controller (replanned every
/// step on the realized state). Returns the final fidelity.
double greedy_episode(const EnvConfig& env_cfg, const GreedyConfig& cfg,
                      std::uint64_t seed, std::uint64_t traj_index);

}  // namespace fockctl
