#pragma once

#include <random>
#include <vector>

#include <Eigen/Dense>

#include "fockctl/fock.hpp"

namespace fockctl {

/// Lindblad dissipator D[A]rho = A rho A^dag - 1/2 {A^dag A, rho}.
Mat lindblad_D(const Mat& a, const Mat& rho);

/// Measurement superoperator H[A]rho = A rho + rho A - <A + A^dag> rho.
Mat stoch_H(const Mat& a, const Mat& rho);

/// Drive Hamiltonian i (beta a^dag - beta^* a).
Mat drive_hamiltonian(cplx beta, int dim);

/// Homodyne record increment sqrt(gamma/2) tr(A rho + rho A) dt + dW for the
/// photon-number channel n.
double homodyne_record(const Mat& rho_pre, int n, double dw, double dt, double gamma);

enum class EfficiencyMode {
    /// Deterministic (gamma/2) D[P], stochastic sqrt(gamma/2) H[P]: a
    /// unit-efficiency unraveling of the effective rate gamma/2 that keeps
    /// trajectories pure in the absence of decay/dephasing.
    PurityPreserving,
    /// Stochastic coefficient sqrt(gamma)/2 exactly as in the printed Ito
    /// equation; effective efficiency 1/2, trajectories mix.
    LiteralEq6,
};

enum class Scheme {
    EulerMaruyama,
    StochasticHeun,
    /// Normalized Kraus-map step (Rouchon-style). Positivity- and, at unit
    /// efficiency, purity-preserving at any step size; consistent with the
    /// same Ito equation to O(dt).
    KrausMap,
};

struct ChannelConfig {
    int num_channels = 0;       // channels monitor P_0 .. P_{M-1}
    double gamma_meas = 0.0;    // same rate for every channel
    EfficiencyMode mode = EfficiencyMode::PurityPreserving;
};

struct NoiseConfig {
    double gamma_decay = 0.0;
    double gamma_dephasing = 0.0;
};

struct IntegratorConfig {
    double dt = 1e-3;  // time per action step
    int n_sub = 4;     // substeps per action step
    Scheme scheme = Scheme::KrausMap;
};

struct ControlAction {
    cplx beta{0.0, 0.0};
    std::vector<bool> gates;  // one per channel; empty means all ON
};

/// Per-action-step record: total Wiener increment and integrated homodyne
/// record per channel, aggregated over substeps. Entries for gated-OFF
/// channels are zero.
struct StepRecord {
    Eigen::VectorXd dw;
    Eigen::VectorXd homodyne;
};

/// Thrown when the integrator drives the state outside the positivity bound.
struct IntegratorInstability : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Integrates the conditional master equation for one cavity under
/// multiplexed photon-number monitoring, a linear drive, and optional decay
/// and dephasing. Immutable after construction; safe to share across
/// trajectories that own their own state and RNG.
class SmeIntegrator {
  public:
    SmeIntegrator(int dim, ChannelConfig channels, NoiseConfig noise,
                  IntegratorConfig integ);

    /// Advance rho by one action step (n_sub substeps). rho is hermitized and
    /// trace-renormalized after every substep. Throws IntegratorInstability
    /// if an eigenvalue falls below -1e-6.
    StepRecord step(Mat& rho, const ControlAction& action, std::mt19937_64& rng) const;

    /// One action step of the expectation dynamics (dW = 0): drift of the Ito
    /// equation only. Used by the greedy baseline's lookahead.
    void drift_step(Mat& rho, cplx beta, const std::vector<bool>& gates) const;

    int dim() const { return dim_; }
    const ChannelConfig& channels() const { return channels_; }
    const NoiseConfig& noise() const { return noise_; }
    const IntegratorConfig& integ() const { return integ_; }

  private:
    void substep_euler(Mat& rho, cplx beta, const std::vector<bool>& gates,
                       const Eigen::VectorXd& dw, double dts) const;
    void substep_heun(Mat& rho, cplx beta, const std::vector<bool>& gates,
                      const Eigen::VectorXd& dw, double dts) const;
    void substep_kraus(Mat& rho, cplx beta, const std::vector<bool>& gates,
                       const Eigen::VectorXd& dw, double dts) const;
    Mat ito_drift(const Mat& rho, cplx beta, const std::vector<bool>& gates) const;
    void postprocess(Mat& rho) const;
    bool gate_on(const std::vector<bool>& gates, int n) const;

    int dim_;
    ChannelConfig channels_;
    NoiseConfig noise_;
    IntegratorConfig integ_;
    Mat a_;        // annihilation operator
    Mat ad_a_;     // a^dag a
    double stoch_coeff_;  // c_eta: sqrt(gamma/2) or sqrt(gamma)/2
    double kraus_gamma_m_;  // monitored rate in the Kraus map
};

}  // namespace fockctl
