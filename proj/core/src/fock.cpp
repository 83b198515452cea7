#include "fockctl/fock.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fockctl {

Mat annihilation_op(int dim) {
    if (dim < 2) throw std::invalid_argument("annihilation_op: dim must be >= 2");
    Mat a = Mat::Zero(dim, dim);
    for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return a;
}

Mat number_op(int dim) {
    Mat n = Mat::Zero(dim, dim);
    for (int k = 0; k < dim; ++k) n(k, k) = static_cast<double>(k);
    return n;
}

Mat projector(int n, int dim) {
    if (n < 0 || n >= dim) throw std::invalid_argument("projector: index out of range");
    Mat p = Mat::Zero(dim, dim);
    p(n, n) = 1.0;
    return p;
}

namespace {
double lfact(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }
}  // namespace

double generalized_laguerre(int k, int a, double x) {
    if (k < 0 || a < 0) throw std::invalid_argument("generalized_laguerre: bad order");
    if (k == 0) return 1.0;
    double prev = 1.0;
    double cur = 1.0 + a - x;
    for (int i = 1; i < k; ++i) {
        const double next = ((2 * i + 1 + a - x) * cur - (i + a) * prev) / (i + 1);
        prev = cur;
        cur = next;
    }
    return cur;
}

Mat displacement_series(cplx alpha, int dim) {
    if (dim < 2) throw std::invalid_argument("displacement_series: dim must be >= 2");
    if (alpha == cplx(0.0, 0.0)) return Mat::Identity(dim, dim);

    const double x = std::norm(alpha);
    const double lx = 0.5 * std::log(x);  // log |alpha|
    // unit phases of alpha^d and (-alpha^*)^d, magnitudes handled in log space
    const cplx up = alpha / std::abs(alpha);
    const cplx un = -std::conj(alpha) / std::abs(alpha);
    std::vector<cplx> ppow(dim + 1), npow(dim + 1);
    ppow[0] = npow[0] = cplx(1.0, 0.0);
    for (int k = 1; k <= dim; ++k) {
        ppow[k] = ppow[k - 1] * up;
        npow[k] = npow[k - 1] * un;
    }
    Mat d = Mat::Zero(dim, dim);
    for (int n = 0; n < dim; ++n) {
        for (int m = 0; m < dim; ++m) {
            // <m|D(alpha)|n> = sqrt(k_min!/k_max!) z^{|m-n|} e^{-x/2}
            //                  L_{k_min}^{(|m-n|)}(x), with z = alpha for m >= n
            //                  and z = -alpha^* for m < n.
            const int kmin = std::min(m, n);
            const int kmax = std::max(m, n);
            const int a = kmax - kmin;
            const double logmag =
                0.5 * (lfact(kmin) - lfact(kmax)) + a * lx - 0.5 * x;
            const double lag = generalized_laguerre(kmin, a, x);
            const cplx phase = (m >= n) ? ppow[a] : npow[a];
            d(m, n) = phase * (std::exp(logmag) * lag);
        }
    }
    return d;
}

Mat displacement_exp_oracle(cplx alpha, int dim) {
    if (dim < 2) throw std::invalid_argument("displacement_exp_oracle: dim must be >= 2");
    // alpha a^dag - alpha^* a = i H with H Hermitian; exponentiate by
    // eigendecomposition of H.
    const Mat a = annihilation_op(dim);
    const cplx i(0.0, 1.0);
    const Mat h = -i * (alpha * a.adjoint() - std::conj(alpha) * a);
    Eigen::SelfAdjointEigenSolver<Mat> es(h);
    const Eigen::VectorXd& ev = es.eigenvalues();
    CVec phases(dim);
    for (int k = 0; k < dim; ++k) phases(k) = std::exp(i * ev(k));
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

CVec TargetSpec::state_vector(int dim) const {
    CVec psi = CVec::Zero(dim);
    for (const auto& [n, amp] : components) {
        if (n < 0 || n >= dim)
            throw std::invalid_argument("TargetSpec: fock index out of range");
        psi(n) += amp;
    }
    const double nrm = psi.norm();
    if (nrm <= 0.0) throw std::invalid_argument("TargetSpec: zero norm");
    return psi / nrm;
}

int TargetSpec::max_index() const {
    int m = 0;
    for (const auto& [n, amp] : components) m = std::max(m, n);
    return m;
}

double fidelity(const Mat& rho, const CVec& target) {
    if (rho.rows() != target.size())
        throw std::invalid_argument("fidelity: dimension mismatch");
    const double f = std::real(target.dot(rho * target));
    return std::clamp(f, 0.0, 1.0);
}

double fidelity(const Mat& rho, const TargetSpec& target) {
    return fidelity(rho, target.state_vector(static_cast<int>(rho.rows())));
}

double purity(const Mat& rho) { return std::real((rho * rho).trace()); }

double truncation_leakage(const Mat& rho) {
    const int d = static_cast<int>(rho.rows());
    return std::real(rho(d - 1, d - 1)) + (d >= 2 ? std::real(rho(d - 2, d - 2)) : 0.0);
}

void validate_density(const Mat& rho) {
    if (rho.rows() != rho.cols()) throw std::invalid_argument("density: not square");
    const double herm = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
    if (herm > 1e-10) throw std::invalid_argument("density: not Hermitian");
    if (std::abs(rho.trace() - cplx(1.0, 0.0)) > 1e-9)
        throw std::invalid_argument("density: trace != 1");
    Eigen::SelfAdjointEigenSolver<Mat> es(rho, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-6)
        throw std::invalid_argument("density: negative eigenvalue");
}

Eigen::MatrixXd wigner_grid(const Mat& rho, const std::vector<double>& xs,
                            const std::vector<double>& ps) {
    const int dim = static_cast<int>(rho.rows());
    double max_r2 = 0.0;
    for (double x : xs)
        for (double p : ps) max_r2 = std::max(max_r2, 0.5 * (x * x + p * p));
    // Pad the cutoff so truncated displacement columns stay accurate even at
    // the far corners of the grid.
    const int pad = std::max(dim, dim + static_cast<int>(std::ceil(
                                      max_r2 + 8.0 * std::sqrt(max_r2) + 10.0)));

    Eigen::MatrixXd w(static_cast<int>(xs.size()), static_cast<int>(ps.size()));
    for (std::size_t ix = 0; ix < xs.size(); ++ix) {
        for (std::size_t ip = 0; ip < ps.size(); ++ip) {
            const cplx alpha = cplx(xs[ix], ps[ip]) / std::sqrt(2.0);
            const Mat d = displacement_series(alpha, pad);
            // W = (2/pi) sum_k (-1)^k <col_k| rho |col_k>, col_k = D e_k
            // restricted to the rho support.
            const Mat b = d.topRows(dim);
            const Mat rb = rho * b;
            cplx acc(0.0, 0.0);
            for (int k = 0; k < pad; ++k) {
                const cplx term = b.col(k).dot(rb.col(k));
                acc += (k % 2 == 0) ? term : -term;
            }
            w(static_cast<int>(ix), static_cast<int>(ip)) = (2.0 / M_PI) * std::real(acc);
        }
    }
    return w;
}

}  // namespace fockctl
