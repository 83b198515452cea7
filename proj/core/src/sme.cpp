#include "fockctl/sme.hpp"

#include <cmath>
#include <stdexcept>

#include "fockctl/rng.hpp"

namespace fockctl {

Mat lindblad_D(const Mat& a, const Mat& rho) {
    const Mat ada = a.adjoint() * a;
    return a * rho * a.adjoint() - 0.5 * (rho * ada + ada * rho);
}

Mat stoch_H(const Mat& a, const Mat& rho) {
    const cplx mean = (a * rho).trace() + (a.adjoint() * rho).trace();
    return a * rho + rho * a - mean * rho;
}

Mat drive_hamiltonian(cplx beta, int dim) {
    const Mat a = annihilation_op(dim);
    const cplx i(0.0, 1.0);
    return i * (beta * a.adjoint() - std::conj(beta) * a);
}

double homodyne_record(const Mat& rho_pre, int n, double dw, double dt, double gamma) {
    const double pn = std::real(rho_pre(n, n));
    return std::sqrt(2.0 * gamma) * pn * dt + dw;
}

SmeIntegrator::SmeIntegrator(int dim, ChannelConfig channels, NoiseConfig noise,
                             IntegratorConfig integ)
    : dim_(dim), channels_(channels), noise_(noise), integ_(integ) {
    if (dim < 2) throw std::invalid_argument("SmeIntegrator: dim must be >= 2");
    if (channels_.num_channels < 0 || channels_.num_channels > dim)
        throw std::invalid_argument("SmeIntegrator: need 0 <= M <= dim");
    if (channels_.gamma_meas < 0 || noise_.gamma_decay < 0 || noise_.gamma_dephasing < 0)
        throw std::invalid_argument("SmeIntegrator: negative rate");
    if (integ_.dt <= 0 || integ_.n_sub < 1)
        throw std::invalid_argument("SmeIntegrator: bad integrator config");
    a_ = annihilation_op(dim);
    ad_a_ = a_.adjoint() * a_;
    const double g = channels_.gamma_meas;
    if (channels_.mode == EfficiencyMode::PurityPreserving) {
        stoch_coeff_ = std::sqrt(0.5 * g);
        kraus_gamma_m_ = 0.5 * g;
    } else {
        stoch_coeff_ = 0.5 * std::sqrt(g);
        kraus_gamma_m_ = 0.25 * g;
    }
}

bool SmeIntegrator::gate_on(const std::vector<bool>& gates, int n) const {
    return gates.empty() || gates[static_cast<std::size_t>(n)];
}

// Deterministic part of the Ito equation. Measurement and dephasing channels
// are projectors, so their dissipators reduce to row/column/diagonal updates.
Mat SmeIntegrator::ito_drift(const Mat& rho, cplx beta, const std::vector<bool>& gates) const {
    Mat drift = Mat::Zero(dim_, dim_);
    if (beta != cplx(0.0, 0.0)) {
        // -i[H, rho] with H = i(beta a^dag - beta^* a)
        const Mat b = beta * a_.adjoint() - std::conj(beta) * a_;
        drift.noalias() = b * rho - rho * b;
    }
    const double gd = 0.5 * channels_.gamma_meas;  // deterministic rate gamma/2
    for (int n = 0; n < channels_.num_channels; ++n) {
        if (!gate_on(gates, n)) continue;
        drift.row(n) -= gd * 0.5 * rho.row(n);
        drift.col(n) -= gd * 0.5 * rho.col(n);
        drift(n, n) += gd * std::real(rho(n, n));
    }
    if (noise_.gamma_decay > 0.0) {
        const double g = noise_.gamma_decay;
        for (int i = 0; i < dim_; ++i) {
            for (int j = 0; j < dim_; ++j) {
                cplx v(0.0, 0.0);
                if (i + 1 < dim_ && j + 1 < dim_)
                    v = std::sqrt(double(i + 1)) * std::sqrt(double(j + 1)) * rho(i + 1, j + 1);
                drift(i, j) += g * (v - 0.5 * double(i + j) * rho(i, j));
            }
        }
    }
    if (noise_.gamma_dephasing > 0.0) {
        // sum_n D[P_n] rho = diag(rho) - rho over the full space
        const double g = 0.5 * noise_.gamma_dephasing;
        drift -= g * rho;
        drift.diagonal() += g * rho.diagonal();
    }
    return drift;
}

void SmeIntegrator::substep_euler(Mat& rho, cplx beta, const std::vector<bool>& gates,
                                  const Eigen::VectorXd& dw, double dts) const {
    Mat next = rho + ito_drift(rho, beta, gates) * dts;
    for (int n = 0; n < channels_.num_channels; ++n) {
        if (!gate_on(gates, n)) continue;
        const double c = stoch_coeff_ * dw(n);
        next.row(n) += c * rho.row(n);
        next.col(n) += c * rho.col(n);
        next -= 2.0 * c * std::real(rho(n, n)) * rho;
    }
    rho = next;
}

void SmeIntegrator::substep_heun(Mat& rho, cplx beta, const std::vector<bool>& gates,
                                 const Eigen::VectorXd& dw, double dts) const {
    // Predictor-corrector on the drift; diffusion stays evaluated at the left
    // point so the scheme remains an Ito integrator.
    Mat diffusion = Mat::Zero(dim_, dim_);
    for (int n = 0; n < channels_.num_channels; ++n) {
        if (!gate_on(gates, n)) continue;
        const double c = stoch_coeff_ * dw(n);
        diffusion.row(n) += c * rho.row(n);
        diffusion.col(n) += c * rho.col(n);
        diffusion -= 2.0 * c * std::real(rho(n, n)) * rho;
    }
    const Mat d0 = ito_drift(rho, beta, gates);
    const Mat pred = rho + d0 * dts + diffusion;
    const Mat d1 = ito_drift(pred, beta, gates);
    rho += 0.5 * (d0 + d1) * dts + diffusion;
}

void SmeIntegrator::substep_kraus(Mat& rho, cplx beta, const std::vector<bool>& gates,
                                  const Eigen::VectorXd& dw, double dts) const {
    // rho' ~ M rho M^dag + dt * (unmonitored Kraus terms), normalized.
    // M = 1 + K dt + 1/2 K^2 dt^2 + sum_n sqrt(Gm) P_n dy_n with
    // dy_n = 2 sqrt(Gm) <P_n> dt + dW_n. Positive by construction.
    const double gd = 0.5 * channels_.gamma_meas;
    const double gm = kraus_gamma_m_;
    Mat k = Mat::Zero(dim_, dim_);
    if (beta != cplx(0.0, 0.0)) k = beta * a_.adjoint() - std::conj(beta) * a_;
    for (int n = 0; n < channels_.num_channels; ++n)
        if (gate_on(gates, n)) k(n, n) -= 0.5 * gd;
    if (noise_.gamma_decay > 0.0) k -= 0.5 * noise_.gamma_decay * ad_a_;
    if (noise_.gamma_dephasing > 0.0)
        k.diagonal().array() -= 0.25 * noise_.gamma_dephasing;

    Mat m = Mat::Identity(dim_, dim_) + k * dts + 0.5 * dts * dts * (k * k);
    for (int n = 0; n < channels_.num_channels; ++n) {
        if (!gate_on(gates, n)) continue;
        const double dy = 2.0 * std::sqrt(gm) * std::real(rho(n, n)) * dts + dw(n);
        m(n, n) += std::sqrt(gm) * dy;
    }
    Mat next = m * rho * m.adjoint();
    if (noise_.gamma_decay > 0.0)
        next += (noise_.gamma_decay * dts) * (a_ * rho * a_.adjoint());
    if (noise_.gamma_dephasing > 0.0) {
        const double g = 0.5 * noise_.gamma_dephasing * dts;
        next.diagonal() += g * rho.diagonal();
    }
    if (gd > gm) {
        for (int n = 0; n < channels_.num_channels; ++n)
            if (gate_on(gates, n)) next(n, n) += (gd - gm) * dts * std::real(rho(n, n));
    }
    rho = next;
}

void SmeIntegrator::postprocess(Mat& rho) const {
    rho = 0.5 * (rho + rho.adjoint()).eval();
    const double tr = std::real(rho.trace());
    if (!(tr > 0.0) || !std::isfinite(tr))
        throw IntegratorInstability("sme: non-positive trace after substep");
    rho /= tr;
    if (integ_.scheme == Scheme::KrausMap) {
        // Positivity is structural for the Kraus map; a diagonal check guards
        // against arithmetic blowup only.
        if (rho.diagonal().real().minCoeff() < -1e-6)
            throw IntegratorInstability("sme: negative population");
    } else {
        Eigen::SelfAdjointEigenSolver<Mat> es(rho, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -1e-6)
            throw IntegratorInstability("sme: negative eigenvalue");
    }
}

StepRecord SmeIntegrator::step(Mat& rho, const ControlAction& action,
                               std::mt19937_64& rng) const {
    const int m = channels_.num_channels;
    if (!action.gates.empty() && static_cast<int>(action.gates.size()) != m)
        throw std::invalid_argument("sme: gate count mismatch");
    StepRecord rec{Eigen::VectorXd::Zero(m), Eigen::VectorXd::Zero(m)};
    const double dts = integ_.dt / integ_.n_sub;
    const double sqdts = std::sqrt(dts);
    Eigen::VectorXd dw(m);
    for (int s = 0; s < integ_.n_sub; ++s) {
        for (int n = 0; n < m; ++n)
            dw(n) = gate_on(action.gates, n) ? sqdts * standard_normal(rng) : 0.0;
        for (int n = 0; n < m; ++n) {
            if (!gate_on(action.gates, n)) continue;
            rec.dw(n) += dw(n);
            rec.homodyne(n) += homodyne_record(rho, n, dw(n), dts, channels_.gamma_meas);
        }
        switch (integ_.scheme) {
            case Scheme::EulerMaruyama:
                substep_euler(rho, action.beta, action.gates, dw, dts);
                break;
            case Scheme::StochasticHeun:
                substep_heun(rho, action.beta, action.gates, dw, dts);
                break;
            case Scheme::KrausMap:
                substep_kraus(rho, action.beta, action.gates, dw, dts);
                break;
        }
        postprocess(rho);
    }
    return rec;
}

void SmeIntegrator::drift_step(Mat& rho, cplx beta, const std::vector<bool>& gates) const {
    const double dts = integ_.dt / integ_.n_sub;
    for (int s = 0; s < integ_.n_sub; ++s) {
        rho += ito_drift(rho, beta, gates) * dts;
        rho = 0.5 * (rho + rho.adjoint()).eval();
        rho /= std::real(rho.trace());
    }
}

}  // namespace fockctl
