#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include <cmath>

#include "sirlab/deterministic.hpp"
#include "sirlab/rng.hpp"
#include "sirlab/stats.hpp"

using namespace sirlab;
using Catch::Approx;

TEST_CASE("lyapunov core: zero diffusion and scalar analytic variance", "[stats]") {
    // Q = 0 keeps P identically zero whatever the drift is.
    const double dt = 1e-3;
    const int half_steps = 401;
    std::vector<Eigen::MatrixXd> A(half_steps, Eigen::MatrixXd::Constant(2, 2, 0.7));
    std::vector<Eigen::MatrixXd> Q(half_steps, Eigen::MatrixXd::Zero(2, 2));
    CovarianceMatrix P0 = lyapunov_cov_core(A, Q, dt);
    REQUIRE(P0.norm() == 0.0);

    // Scalar frozen OU: P(T) = sigma^2 (1 - e^{-2aT}) / (2a).
    const double a = 1.7, sigma2 = 0.31;
    const double T = static_cast<double>(half_steps - 1) * dt;
    std::vector<Eigen::MatrixXd> As(half_steps, Eigen::MatrixXd::Constant(1, 1, -a));
    std::vector<Eigen::MatrixXd> Qs(half_steps, Eigen::MatrixXd::Constant(1, 1, sigma2));
    CovarianceMatrix P = lyapunov_cov_core(As, Qs, dt);
    const double exact = sigma2 * (1.0 - std::exp(-2.0 * a * T)) / (2.0 * a);
    REQUIRE(P(0, 0) == Approx(exact).epsilon(1e-10));

    REQUIRE_THROWS_AS(lyapunov_cov_core(As, Qs, -1.0), std::invalid_argument);
    std::vector<Eigen::MatrixXd> even(4, Eigen::MatrixXd::Zero(1, 1));
    REQUIRE_THROWS_AS(lyapunov_cov_core(even, even, dt), std::invalid_argument);
}

TEST_CASE("empirical moments on hand ensembles", "[stats]") {
    Eigen::VectorXd x(3);
    x << 1.0, -2.0, 0.5;

    std::vector<Eigen::VectorXd> identical(5, x);
    Moments mi = empirical_moments(identical);
    REQUIRE(mi.covariance.norm() == Approx(0.0).margin(1e-14));
    REQUIRE((mi.mean - x).norm() == Approx(0.0).margin(1e-14));

    // Two-point ensemble {+x, -x}: mean 0, covariance 2 x x^T.
    std::vector<Eigen::VectorXd> pm{x, -x};
    Moments m2 = empirical_moments(pm);
    REQUIRE(m2.mean.norm() == Approx(0.0).margin(1e-14));
    Eigen::MatrixXd expect = 2.0 * x * x.transpose();
    REQUIRE((m2.covariance - expect).norm() <= 1e-12 * expect.norm());

    std::vector<Eigen::VectorXd> one{x};
    REQUIRE_THROWS_AS(empirical_moments(one), std::invalid_argument);
}

TEST_CASE("bootstrap standard errors shrink like 1/sqrt(n)", "[stats]") {
    Rng rng(606);
    auto make_ensemble = [&](int n) {
        std::vector<Eigen::VectorXd> out;
        out.reserve(n);
        for (int k = 0; k < n; ++k) {
            Eigen::VectorXd v(2);
            v << rng.normal(), 0.5 * rng.normal();
            out.push_back(v);
        }
        return out;
    };
    Moments m500 = empirical_moments(make_ensemble(500), 17);
    Moments m2000 = empirical_moments(make_ensemble(2000), 17);
    const double ratio = m500.cov_se(0, 0) / m2000.cov_se(0, 0);
    REQUIRE(ratio > 1.5);
    REQUIRE(ratio < 2.7);
}

TEST_CASE("empirical moments are invariant under replica order", "[stats]") {
    Rng rng(607);
    std::vector<Eigen::VectorXd> ens;
    for (int k = 0; k < 64; ++k) {
        Eigen::VectorXd v(2);
        v << rng.normal(), rng.normal();
        ens.push_back(v);
    }
    std::vector<Eigen::VectorXd> shuffled(ens.rbegin(), ens.rend());
    // The reduction itself is a plain sum over slots; with the same multiset
    // of replicas the mean/cov agree to roundoff (the contract is that the
    // caller keys results by replica index before reduction).
    Moments a = empirical_moments(ens, 3);
    std::sort(shuffled.begin(), shuffled.end(),
              [](const Eigen::VectorXd& l, const Eigen::VectorXd& r) { return l(0) < r(0); });
    std::vector<Eigen::VectorXd> resorted = ens;
    std::sort(resorted.begin(), resorted.end(),
              [](const Eigen::VectorXd& l, const Eigen::VectorXd& r) { return l(0) < r(0); });
    Moments b = empirical_moments(resorted, 3);
    Moments c = empirical_moments(shuffled, 3);
    REQUIRE((b.mean - c.mean).norm() == 0.0);
    REQUIRE((b.covariance - c.covariance).norm() == 0.0);
    REQUIRE((a.mean - b.mean).norm() <= 1e-12);
}

TEST_CASE("sup_norm_error uses the sum-of-sups vector norm", "[stats]") {
    GridSpec g = make_grid(3);
    Trajectory<SIRState> a, b;
    a.times = b.times = {0.0, 1.0};
    SIRState s(g);
    a.states = {s, s};
    b.states = {s, s};
    REQUIRE(sup_norm_error(a, b) == 0.0);

    b.states[1].I[2] = 0.25;
    REQUIRE(sup_norm_error(a, b) == Approx(0.25));

    // Hand case: sups 0.1 (S), 0.25 (I), 0.05 (R) add up.
    b.states[1].S[0] = 0.1;
    b.states[1].R[1] = 0.05;
    REQUIRE(sup_norm_error(a, b) == Approx(0.40));

    Trajectory<SIRState> skewed = b;
    skewed.times[1] = 2.0;
    REQUIRE_THROWS_AS(sup_norm_error(a, skewed), std::invalid_argument);
}

TEST_CASE("negative Sobolev distance", "[stats]") {
    GridSpec g = make_grid(9);
    LatticeField f(g, 0.7);
    REQUIRE(neg_sobolev_distance(f, f, 2.0, 64) == Approx(0.0).margin(1e-13));

    // Single continuous mode difference: (1 + lambda_m)^{-gamma/2} |dc|.
    const int m = 2;
    const double gamma = 2.0;
    LatticeField diff(g);
    for (int i = 0; i < g.ell; ++i) diff[i] = 0.0;
    LatticeField a = f, b = f;
    // b - a equals 0.3 * (cell averages of phi_2), whose continuous mode-2
    // coefficient is 0.3 * (1 + O(eps^2) quadrature factor).
    const double amp = 0.3;
    LatticeField phi2_avg = project([](double x) { return phi_continuous(2, x); }, g);
    for (int i = 0; i < g.ell; ++i) b[i] += amp * phi2_avg[i];
    double cc, cs;
    continuous_mode_pair(b - a, m, cc, cs);
    // The step-function field carries O(eps^2) aliased tail modes on top of
    // the dominant mode-2 term, so the closed form is a tight lower bound.
    const double expect =
        std::sqrt(cc * cc + cs * cs) * std::pow(1.0 + eigenvalue_continuous(m), -gamma / 2.0);
    const double got = neg_sobolev_distance(a, b, gamma, 64);
    REQUIRE(got >= expect - 1e-12);
    REQUIRE(got == Approx(expect).epsilon(1e-4));

    // Monotone nonincreasing in gamma.
    REQUIRE(neg_sobolev_distance(a, b, 1.0, 64) >= neg_sobolev_distance(a, b, 2.0, 64));
    REQUIRE(neg_sobolev_distance(a, b, 2.0, 64) >= neg_sobolev_distance(a, b, 3.0, 64));

    REQUIRE_THROWS_AS(neg_sobolev_distance(a, b, -1.0, 64), std::invalid_argument);
}

TEST_CASE("loglog slope", "[stats]") {
    std::vector<double> xs{1e3, 1e4, 1e5};
    std::vector<double> exact;
    for (double x : xs) exact.push_back(std::pow(x, -0.5));
    REQUIRE(loglog_slope(xs, exact) == Approx(-0.5).margin(1e-12));

    std::vector<double> flat{2.0, 2.0, 2.0};
    REQUIRE(loglog_slope(xs, flat) == Approx(0.0).margin(1e-12));

    // Noisy synthetic slope recovered within a loose CI.
    Rng rng(505);
    std::vector<double> noisy;
    for (double x : xs) noisy.push_back(std::pow(x, -0.5) * std::exp(0.05 * rng.normal()));
    REQUIRE(loglog_slope(xs, noisy) == Approx(-0.5).margin(0.1));

    std::vector<double> bad{1.0, -1.0, 2.0};
    REQUIRE_THROWS_AS(loglog_slope(xs, bad), std::invalid_argument);
    REQUIRE_THROWS_AS(loglog_slope({1.0, 2.0}, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("Jarque-Bera normality test", "[stats]") {
    Rng rng(909);
    std::vector<double> normal(5000);
    for (double& v : normal) v = rng.normal();
    NormalityResult n = normality_test(normal);
    REQUIRE_FALSE(n.degenerate);
    REQUIRE(n.pass);

    std::vector<double> expo(5000);
    for (double& v : expo) v = rng.exponential();
    NormalityResult e = normality_test(expo);
    REQUIRE_FALSE(e.pass);  // skewness 2 blows past the 9.21 critical value

    std::vector<double> constant(5000, 3.0);
    NormalityResult c = normality_test(constant);
    REQUIRE(c.degenerate);
    REQUIRE_FALSE(c.pass);

    std::vector<double> tiny(10, 0.0);
    REQUIRE_THROWS_AS(normality_test(tiny), std::invalid_argument);
}
