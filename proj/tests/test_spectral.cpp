#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <numbers>

#include "sirlab/grid.hpp"
#include "sirlab/rng.hpp"
#include "sirlab/spectral.hpp"

using namespace sirlab;
using Catch::Approx;

namespace {

LatticeField random_field(GridSpec g, Rng& rng) {
    LatticeField f(g);
    for (int i = 0; i < g.ell; ++i) f[i] = 2.0 * rng.uniform() - 1.0;
    return f;
}

Eigen::MatrixXd dense_laplacian(GridSpec g) {
    const int n = g.ell;
    const double inv_eps2 = static_cast<double>(n) * static_cast<double>(n);
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        L(i, i) = -2.0 * inv_eps2;
        L(i, (i + 1) % n) = inv_eps2;
        L(i, (i + n - 1) % n) = inv_eps2;
    }
    return L;
}

}  // namespace

TEST_CASE("discrete eigenvalues", "[spectral]") {
    REQUIRE(eigenvalue_discrete(0, make_grid(5)) == 0.0);

    GridSpec g5 = make_grid(5);
    REQUIRE(eigenvalue_discrete(2, g5) ==
            Approx(50.0 * (1.0 - std::cos(2.0 * std::numbers::pi / 5.0))).epsilon(1e-14));

    REQUIRE_THROWS_AS(eigenvalue_discrete(3, g5), std::invalid_argument);
    REQUIRE_THROWS_AS(eigenvalue_discrete(6, g5), std::invalid_argument);

    // lambda_2^eps -> 4 pi^2 as eps -> 0; at ell=101 within 0.2%.
    GridSpec g101 = make_grid(101);
    const double lim = 4.0 * std::numbers::pi * std::numbers::pi;
    REQUIRE(std::abs(eigenvalue_discrete(2, g101) - lim) / lim < 0.002);
}

TEST_CASE("continuous eigenvalues", "[spectral]") {
    REQUIRE(eigenvalue_continuous(0) == 0.0);
    REQUIRE(eigenvalue_continuous(2) == Approx(4.0 * std::numbers::pi * std::numbers::pi));
    REQUIRE(eigenvalue_continuous(4) == Approx(16.0 * std::numbers::pi * std::numbers::pi));
    REQUIRE_THROWS_AS(eigenvalue_continuous(1), std::invalid_argument);
}

TEST_CASE("basis fields: constant mode, orthonormality, eigen relation", "[spectral]") {
    GridSpec g = make_grid(5);
    LatticeField one = basis_field({0, ModeKind::cos}, g);
    for (int i = 0; i < g.ell; ++i) REQUIRE(one[i] == 1.0);

    REQUIRE_THROWS_AS(basis_field({0, ModeKind::sin}, g), std::invalid_argument);
    REQUIRE_THROWS_AS(basis_field({1, ModeKind::cos}, g), std::invalid_argument);

    SpectralBasis basis(g);
    for (int a = 0; a < basis.n_modes(); ++a) {
        for (int b = 0; b < basis.n_modes(); ++b) {
            LatticeField fa = basis_field(basis.mode(a), g);
            LatticeField fb = basis_field(basis.mode(b), g);
            REQUIRE(inner(fa, fb) == Approx(a == b ? 1.0 : 0.0).margin(1e-12));
        }
    }
}

TEST_CASE("eigen residual across grids", "[spectral]") {
    for (int ell : {3, 5, 31, 101}) {
        GridSpec g = make_grid(ell);
        SpectralBasis basis(g);
        for (int a = 0; a < basis.n_modes(); ++a) {
            LatticeField f = basis_field(basis.mode(a), g);
            LatticeField lf = laplacian(f);
            const double lam = basis.lambda(a);
            double residual = 0.0;
            for (int i = 0; i < ell; ++i) residual = std::max(residual, std::abs(lf[i] + lam * f[i]));
            REQUIRE(residual <= 1e-10 * std::max(lam, 1.0));
        }
    }
}

TEST_CASE("analyze/synthesize round trip with Parseval oracle", "[spectral]") {
    GridSpec g = make_grid(31);
    SpectralBasis basis(g);
    Rng rng(7);
    for (int k = 0; k < 100; ++k) {
        LatticeField f = random_field(g, rng);
        SpectralCoeffs c = analyze(f, basis);
        LatticeField back = synthesize(c, basis);
        for (int i = 0; i < g.ell; ++i) REQUIRE(back[i] == Approx(f[i]).margin(1e-12));

        double sum_c2 = 0.0;
        for (double v : c.coeffs) sum_c2 += v * v;
        REQUIRE(sum_c2 == Approx(inner(f, f)).margin(1e-12));
    }

    // Single mode in, single unit coefficient out.
    LatticeField phi2 = basis_field({2, ModeKind::cos}, g);
    SpectralCoeffs c = analyze(phi2, basis);
    for (int a = 0; a < basis.n_modes(); ++a) {
        const double expect = (a == basis.index_of({2, ModeKind::cos})) ? 1.0 : 0.0;
        REQUIRE(c.coeffs[a] == Approx(expect).margin(1e-12));
    }

    LatticeField constant(g, 3.0);
    SpectralCoeffs cc = analyze(constant, basis);
    REQUIRE(cc.coeffs[0] == Approx(3.0).margin(1e-12));
    for (int a = 1; a < basis.n_modes(); ++a) REQUIRE(cc.coeffs[a] == Approx(0.0).margin(1e-12));
}

TEST_CASE("semigroup identity, constants, and matrix exponential oracle", "[spectral]") {
    GridSpec g = make_grid(31);
    SpectralBasis basis(g);
    Rng rng(8);
    LatticeField f = random_field(g, rng);

    LatticeField at0 = semigroup_apply(0.0, 0.5, f, basis);
    for (int i = 0; i < g.ell; ++i) REQUIRE(at0[i] == Approx(f[i]).margin(1e-12));

    LatticeField c(g, 2.0);
    LatticeField ct = semigroup_apply(5.0, 0.5, c, basis);
    for (int i = 0; i < g.ell; ++i) REQUIRE(ct[i] == Approx(2.0).margin(1e-12));

    REQUIRE_THROWS_AS(semigroup_apply(-1.0, 0.5, f, basis), std::invalid_argument);

    const double mu = 0.37;
    Eigen::MatrixXd L = dense_laplacian(g);
    Eigen::Map<const Eigen::VectorXd> fv(f.values.data(), g.ell);
    for (double t : {0.01, 0.1, 1.0}) {
        Eigen::MatrixXd E = (mu * t * L).exp();
        Eigen::VectorXd expect = E * fv;
        LatticeField got = semigroup_apply(t, mu, f, basis);
        double err = 0.0;
        for (int i = 0; i < g.ell; ++i) err = std::max(err, std::abs(got[i] - expect(i)));
        REQUIRE(err <= 1e-8 * norm_inf(f));
    }
}

TEST_CASE("semigroup algebra: contraction, composition, commutation", "[spectral]") {
    GridSpec g = make_grid(31);
    SpectralBasis basis(g);
    Rng rng(9);
    LatticeField f = random_field(g, rng);
    const double mu = 0.2;

    for (double t : {0.0, 0.05, 0.4, 2.0})
        REQUIRE(norm_l2(semigroup_apply(t, mu, f, basis)) <= norm_l2(f) + 1e-12);

    LatticeField ab = semigroup_apply(0.07, mu, semigroup_apply(0.05, mu, f, basis), basis);
    LatticeField onestep = semigroup_apply(0.12, mu, f, basis);
    for (int i = 0; i < g.ell; ++i) REQUIRE(ab[i] == Approx(onestep[i]).margin(1e-12));

    LatticeField lhs = semigroup_apply(0.1, mu, laplacian(f), basis);
    LatticeField rhs = laplacian(semigroup_apply(0.1, mu, f, basis));
    for (int i = 0; i < g.ell; ++i)
        REQUIRE(lhs[i] == Approx(rhs[i]).margin(1e-10 / (g.eps() * g.eps())));
}

TEST_CASE("discrete Sobolev norm values", "[spectral]") {
    GridSpec g = make_grid(31);
    SpectralBasis basis(g);
    LatticeField one(g, 1.0);
    for (double gamma : {-2.0, 0.0, 1.5, 3.0})
        REQUIRE(sobolev_norm_discrete(one, gamma, basis) == Approx(1.0).margin(1e-12));

    const double gamma = 2.0;
    LatticeField phi4 = basis_field({4, ModeKind::cos}, g);
    const double lam = eigenvalue_discrete(4, g);
    REQUIRE(sobolev_norm_discrete(phi4, -gamma, basis) ==
            Approx(std::pow(1.0 + lam, -gamma / 2.0)).epsilon(1e-12));

    Rng rng(10);
    LatticeField f = random_field(g, rng);
    REQUIRE(sobolev_norm_discrete(f, 0.0, basis) == Approx(norm_l2(f)).margin(1e-12));
}

TEST_CASE("continuous Sobolev norm, duality, equivalence bracket", "[spectral]") {
    LatticeField one(make_grid(9), 1.0);
    for (double gamma : {-2.0, 0.0, 2.0})
        for (int M : {2, 16, 64})
            REQUIRE(sobolev_norm_continuous(one, gamma, M) == Approx(1.0).margin(1e-12));

    REQUIRE_THROWS_AS(sobolev_norm_continuous(one, 1.0, 1024), std::invalid_argument);
    REQUIRE_THROWS_AS(sobolev_norm_continuous(one, 1.0, 3), std::invalid_argument);

    Rng rng(12);
    const double gamma = 2.0;
    for (int ell : {5, 9, 31, 81}) {
        GridSpec g = make_grid(ell);
        SpectralBasis basis(g);
        for (int k = 0; k < 20; ++k) {
            LatticeField f = random_field(g, rng);
            LatticeField h = random_field(g, rng);
            REQUIRE(std::abs(inner(f, h)) <=
                    sobolev_norm_discrete(f, -gamma, basis) * sobolev_norm_discrete(h, gamma, basis) +
                        1e-12);

            const double ratio =
                sobolev_norm_continuous(f, -gamma, 64) / sobolev_norm_discrete(f, -gamma, basis);
            REQUIRE(ratio >= 0.25);
            REQUIRE(ratio <= 4.0);
        }
    }
}

TEST_CASE("spectral gradient norm identity", "[spectral]") {
    GridSpec g = make_grid(31);
    SpectralBasis basis(g);
    const double gamma = 2.0;

    LatticeField c(g, 5.0);
    REQUIRE(grad_norm_spectral(c, gamma, basis) == Approx(0.0).margin(1e-12));

    Rng rng(13);
    for (int k = 0; k < 20; ++k) {
        LatticeField f = random_field(g, rng);
        const double spec = grad_norm_spectral(f, gamma, basis);
        const double via_plus = sobolev_norm_discrete(grad_plus(f), -gamma, basis);
        const double via_minus = sobolev_norm_discrete(grad_minus(f), -gamma, basis);
        REQUIRE(std::abs(spec - via_plus) <= 1e-10 * (1.0 + spec));
        REQUIRE(std::abs(spec - via_minus) <= 1e-10 * (1.0 + spec));
    }

    LatticeField phi6 = basis_field({6, ModeKind::cos}, g);
    const double lam = eigenvalue_discrete(6, g);
    REQUIRE(grad_norm_spectral(phi6, gamma, basis) ==
            Approx(std::sqrt(lam * std::pow(1.0 + lam, -gamma))).epsilon(1e-12));
}

TEST_CASE("spectral gap constant c=2 over all modes up to ell=201", "[spectral]") {
    for (int ell = 3; ell <= 201; ell += 2) {
        GridSpec g = make_grid(ell);
        for (int m = 2; m <= ell - 1; m += 2) {
            const double lhs = 0.5 * eigenvalue_discrete(m, g);  // eps^-2 (1 - cos(pi m eps))
            REQUIRE(lhs > 2.0 * m * m);
        }
    }
}
