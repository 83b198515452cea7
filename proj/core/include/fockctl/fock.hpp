#pragma once

#include <complex>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace fockctl {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

/// Ladder operator a on the truncated Fock space: (n-1, n) entry = sqrt(n).
Mat annihilation_op(int dim);

/// Number operator a^dag a (diagonal 0..dim-1).
Mat number_op(int dim);

/// Projector |n><n|.
Mat projector(int n, int dim);

/// Generalized Laguerre polynomial L_k^{(a)}(x) by the three-term recurrence.
/// Numerically stable over the (k, a, x) ranges reachable here, unlike the
/// explicit alternating sum.
double generalized_laguerre(int k, int a, double x);

/// Displacement operator D(alpha), column n built from the displaced-number
/// series (closed Laguerre form), truncated to `dim` rows.
Mat displacement_series(cplx alpha, int dim);

/// Independent route to D(alpha): dense matrix exponential of
/// alpha a^dag - alpha^* a via Hermitian eigendecomposition of the
/// quadrature it generates.
Mat displacement_exp_oracle(cplx alpha, int dim);

/// Pure target state as a sparse list of (fock index, amplitude) components.
struct TargetSpec {
    std::vector<std::pair<int, cplx>> components;

    static TargetSpec fock(int n) { return TargetSpec{{{n, cplx(1.0, 0.0)}}}; }

    /// Normalized state vector of length dim. Throws if an index is out of
    /// range or the amplitudes have zero norm.
    CVec state_vector(int dim) const;
    int max_index() const;
};

/// <psi|rho|psi> for a pure target. Clamped to [0,1] against roundoff.
double fidelity(const Mat& rho, const CVec& target);
double fidelity(const Mat& rho, const TargetSpec& target);

/// tr(rho^2).
double purity(const Mat& rho);

/// Combined population of the top two Fock levels; used as a truncation
/// leakage guard.
double truncation_leakage(const Mat& rho);

/// Throws std::invalid_argument if rho is not Hermitian (1e-10), trace-1
/// (1e-9) and positive down to -1e-6.
void validate_density(const Mat& rho);

/// Wigner function W(x_i, p_j) on the cartesian grid xs × ps, via the
/// displaced-parity formula W = (2/pi) tr(rho D Pi D^dag) with
/// alpha = (x + i p)/sqrt(2). Internally pads the cutoff so the displacement
/// stays accurate out to the grid corners. Row i corresponds to xs[i].
Eigen::MatrixXd wigner_grid(const Mat& rho, const std::vector<double>& xs,
                            const std::vector<double>& ps);

}  // namespace fockctl
