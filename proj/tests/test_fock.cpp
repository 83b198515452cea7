#include <doctest.h>

#include <cmath>
#include <complex>

#include "fockctl/fock.hpp"
#include "fockctl/rng.hpp"

using namespace fockctl;

namespace {

Mat random_density(int dim, std::mt19937_64& rng) {
    Mat g(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
            g(i, j) = cplx(standard_normal(rng), standard_normal(rng));
    Mat rho = g * g.adjoint();
    rho /= rho.trace();
    return rho;
}

}  // namespace

TEST_CASE("ladder and number operators") {
    const Mat a = annihilation_op(5);
    CHECK(std::abs(a(0, 1) - cplx(1.0, 0.0)) < 1e-15);
    CHECK(std::abs(a(2, 3) - cplx(std::sqrt(3.0), 0.0)) < 1e-15);
    CHECK(a(3, 2) == cplx(0.0, 0.0));

    const Mat n = number_op(5);
    CHECK((a.adjoint() * a - n).cwiseAbs().maxCoeff() < 1e-14);

    // [a, a^dag] = 1 on the bulk (truncation corrupts only the last diagonal)
    const Mat comm = a * a.adjoint() - a.adjoint() * a;
    for (int k = 0; k < 4; ++k) CHECK(std::abs(comm(k, k) - cplx(1.0, 0.0)) < 1e-14);

    CHECK_THROWS_AS(annihilation_op(1), std::invalid_argument);
}

TEST_CASE("projectors") {
    const Mat p2 = projector(2, 6);
    CHECK((p2 * p2 - p2).cwiseAbs().maxCoeff() == 0.0);
    CHECK(std::real(p2.trace()) == 1.0);
    Mat sum = Mat::Zero(6, 6);
    for (int n = 0; n < 6; ++n) sum += projector(n, 6);
    CHECK((sum - Mat::Identity(6, 6)).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(projector(6, 6), std::invalid_argument);
    CHECK_THROWS_AS(projector(-1, 6), std::invalid_argument);
}

TEST_CASE("generalized Laguerre polynomials") {
    CHECK(generalized_laguerre(0, 3, 1.7) == 1.0);
    CHECK(generalized_laguerre(1, 2, 0.5) == doctest::Approx(1.0 + 2.0 - 0.5));
    // L_2^{(0)}(x) = 1 - 2x + x^2/2
    const double x = 1.3;
    CHECK(generalized_laguerre(2, 0, x) ==
          doctest::Approx(1.0 - 2.0 * x + 0.5 * x * x).epsilon(1e-14));
    // L_3^{(1)}(x) = 4 - 6x + 2x^2 - x^3/6
    CHECK(generalized_laguerre(3, 1, x) ==
          doctest::Approx(4.0 - 6.0 * x + 2.0 * x * x - x * x * x / 6.0).epsilon(1e-13));
}

TEST_CASE("displacement series matches matrix-exponential oracle") {
    for (const cplx alpha : {cplx(0.7, 0.0), cplx(0.9, -0.4), cplx(-1.6, 2.1)}) {
        const int dim = 80;
        const Mat s = displacement_series(alpha, dim);
        const Mat o = displacement_exp_oracle(alpha, dim);
        // compare away from the truncation edge, where both are converged
        const double err =
            (s.topLeftCorner(24, 24) - o.topLeftCorner(24, 24)).cwiseAbs().maxCoeff();
        CHECK(err < 1e-10);
    }
}

TEST_CASE("displacement special values") {
    CHECK((displacement_series(cplx(0, 0), 8) - Mat::Identity(8, 8))
              .cwiseAbs()
              .maxCoeff() == 0.0);

    const cplx alpha(0.8, 0.3);
    const Mat d = displacement_series(alpha, 60);
    // coherent-state column: <n|D|0> = e^{-|a|^2/2} a^n / sqrt(n!)
    const double pref = std::exp(-0.5 * std::norm(alpha));
    cplx an(1.0, 0.0);
    double fact = 1.0;
    for (int n = 0; n < 8; ++n) {
        CHECK(std::abs(d(n, 0) - pref * an / std::sqrt(fact)) < 1e-13);
        an *= alpha;
        fact *= n + 1.0;
    }
    // <0|D|1> = -alpha^* e^{-|alpha|^2/2}: the alternating sign must survive
    CHECK(std::abs(d(0, 1) - (-std::conj(alpha)) * pref) < 1e-13);
    // unitarity on the well-converged block
    const Mat gram = d.adjoint() * d;
    CHECK((gram.topLeftCorner(20, 20) - Mat::Identity(20, 20)).cwiseAbs().maxCoeff() <
          1e-10);
}

TEST_CASE("target spec") {
    const TargetSpec t = TargetSpec::fock(3);
    const CVec v = t.state_vector(6);
    CHECK(std::abs(v(3) - cplx(1.0, 0.0)) < 1e-15);
    CHECK(v.norm() == doctest::Approx(1.0));
    CHECK(t.max_index() == 3);

    TargetSpec sup{{{1, cplx(1.0, 0.0)}, {3, cplx(0.0, 1.0)}}};
    const CVec s = sup.state_vector(5);
    CHECK(std::abs(s(1)) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(std::abs(s(3)) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(sup.max_index() == 3);

    CHECK_THROWS_AS(TargetSpec::fock(7).state_vector(5), std::invalid_argument);
    CHECK_THROWS_AS((TargetSpec{{{0, cplx(0.0, 0.0)}}}).state_vector(4),
                    std::invalid_argument);
}

TEST_CASE("fidelity and purity") {
    auto rng = make_stream(11);
    Mat rho = Mat::Zero(4, 4);
    rho(2, 2) = 1.0;
    CHECK(fidelity(rho, TargetSpec::fock(2)) == 1.0);
    CHECK(fidelity(rho, TargetSpec::fock(1)) == 0.0);
    CHECK(purity(rho) == doctest::Approx(1.0));

    const Mat mixed = 0.5 * (projector(0, 4) + projector(1, 4));
    CHECK(purity(mixed) == doctest::Approx(0.5));
    CHECK(fidelity(mixed, TargetSpec::fock(0)) == doctest::Approx(0.5));

    const Mat r = random_density(4, rng);
    // fidelity against each basis state sums to the trace
    double sum = 0.0;
    for (int n = 0; n < 4; ++n) sum += fidelity(r, TargetSpec::fock(n));
    CHECK(sum == doctest::Approx(1.0));
    CHECK(purity(r) <= 1.0 + 1e-12);
}

TEST_CASE("density validation and leakage") {
    Mat rho = Mat::Zero(4, 4);
    rho(0, 0) = 1.0;
    CHECK_NOTHROW(validate_density(rho));

    Mat bad_tr = rho * 1.5;
    CHECK_THROWS_AS(validate_density(bad_tr), std::invalid_argument);

    Mat bad_h = rho;
    bad_h(0, 1) = cplx(0.0, 1e-3);
    CHECK_THROWS_AS(validate_density(bad_h), std::invalid_argument);

    Mat bad_pos = Mat::Zero(4, 4);
    bad_pos(0, 0) = 1.5;
    bad_pos(1, 1) = -0.5;
    CHECK_THROWS_AS(validate_density(bad_pos), std::invalid_argument);

    Mat leaky = Mat::Zero(4, 4);
    leaky(1, 1) = 0.9;
    leaky(2, 2) = 0.04;
    leaky(3, 3) = 0.06;
    CHECK(truncation_leakage(leaky) == doctest::Approx(0.1));
}

TEST_CASE("wigner function") {
    const int dim = 10;
    Mat vac = Mat::Zero(dim, dim);
    vac(0, 0) = 1.0;

    SUBCASE("vacuum peak and gaussian profile") {
        const auto w = wigner_grid(vac, {0.0, 1.0}, {0.0, 0.5});
        CHECK(w(0, 0) == doctest::Approx(2.0 / M_PI).epsilon(1e-10));
        CHECK(w(1, 0) == doctest::Approx(2.0 / M_PI * std::exp(-1.0)).epsilon(1e-9));
        CHECK(w(1, 1) == doctest::Approx(2.0 / M_PI * std::exp(-1.25)).epsilon(1e-9));
    }

    SUBCASE("fock 1 is negative at the origin") {
        Mat f1 = Mat::Zero(dim, dim);
        f1(1, 1) = 1.0;
        const auto w = wigner_grid(f1, {0.0}, {0.0});
        CHECK(w(0, 0) == doctest::Approx(-2.0 / M_PI).epsilon(1e-9));
    }

    SUBCASE("coherent state is a displaced vacuum peak") {
        const cplx alpha(1.2, -0.7);
        const Mat d = displacement_series(alpha, dim + 30);
        const CVec coh = d.col(0).head(dim);
        const Mat rho = coh * coh.adjoint();
        const double x0 = std::sqrt(2.0) * std::real(alpha);
        const double p0 = std::sqrt(2.0) * std::imag(alpha);
        const auto w = wigner_grid(rho, {x0}, {p0});
        // truncated coherent state at dim 10 loses ~1e-6 of norm
        CHECK(w(0, 0) == doctest::Approx(2.0 / M_PI).epsilon(1e-4));
    }

    SUBCASE("normalization over a wide grid") {
        Mat f2 = Mat::Zero(dim, dim);
        f2(2, 2) = 1.0;
        const int npts = 81;
        std::vector<double> xs(npts);
        const double h = 12.0 / (npts - 1);
        for (int i = 0; i < npts; ++i) xs[i] = -6.0 + h * i;
        const auto w = wigner_grid(f2, xs, xs);
        // integral over dx dp equals 2 in this convention
        CHECK(w.sum() * h * h == doctest::Approx(2.0).epsilon(1e-4));
    }
}
