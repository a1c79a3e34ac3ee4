#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <unordered_set>

#include "sirlab/grid.hpp"
#include "sirlab/rng.hpp"

using namespace sirlab;
using Catch::Approx;

namespace {

LatticeField random_field(GridSpec g, Rng& rng) {
    LatticeField f(g);
    for (int i = 0; i < g.ell; ++i) f[i] = 2.0 * rng.uniform() - 1.0;
    return f;
}

}  // namespace

TEST_CASE("make_grid accepts odd ell >= 3 and fills geometry", "[grid]") {
    GridSpec g = make_grid(3);
    REQUIRE(g.eps() == Approx(1.0 / 3.0).epsilon(0));
    REQUIRE(g.site(0) == 0.0);
    REQUIRE(g.site(1) == Approx(1.0 / 3.0));
    REQUIRE(g.site(2) == Approx(2.0 / 3.0));

    GridSpec g101 = make_grid(101);
    REQUIRE(g101.ell == 101);
    REQUIRE(g101.eps() == Approx(0.00990099).epsilon(1e-6));
    for (int i = 0; i < 101; ++i) REQUIRE(g101.site(i) == Approx(i / 101.0).margin(1e-15));
}

TEST_CASE("make_grid rejects even or tiny ell", "[grid]") {
    REQUIRE_THROWS_AS(make_grid(4), std::invalid_argument);
    REQUIRE_THROWS_AS(make_grid(1), std::invalid_argument);
    REQUIRE_THROWS_AS(make_grid(0), std::invalid_argument);
    REQUIRE_THROWS_WITH(make_grid(4), Catch::Matchers::ContainsSubstring("odd"));
}

TEST_CASE("laplacian of a constant vanishes", "[grid]") {
    GridSpec g = make_grid(7);
    LatticeField f(g, 3.25);
    LatticeField lf = laplacian(f);
    for (int i = 0; i < g.ell; ++i) REQUIRE(lf[i] == 0.0);
}

TEST_CASE("laplacian on ell=3 impulse", "[grid]") {
    GridSpec g = make_grid(3);
    LatticeField f(g, std::vector<double>{1.0, 0.0, 0.0});
    LatticeField lf = laplacian(f);
    REQUIRE(lf[0] == Approx(-18.0));
    REQUIRE(lf[1] == Approx(9.0));
    REQUIRE(lf[2] == Approx(9.0));
}

TEST_CASE("gradients on ell=3 impulse and constants", "[grid]") {
    GridSpec g = make_grid(3);
    LatticeField f(g, std::vector<double>{1.0, 0.0, 0.0});
    LatticeField gp = grad_plus(f);
    REQUIRE(gp[0] == Approx(-3.0));
    REQUIRE(gp[1] == Approx(0.0).margin(0));
    REQUIRE(gp[2] == Approx(3.0));

    LatticeField c(g, -7.5);
    REQUIRE(norm_inf(grad_plus(c)) == 0.0);
    REQUIRE(norm_inf(grad_minus(c)) == 0.0);
}

TEST_CASE("laplacian factorizes through both gradient orders", "[grid]") {
    Rng rng(11);
    for (int ell : {3, 5, 31, 101}) {
        GridSpec g = make_grid(ell);
        LatticeField f = random_field(g, rng);
        LatticeField lf = laplacian(f);
        LatticeField mp = grad_minus(grad_plus(f));
        LatticeField pm = grad_plus(grad_minus(f));
        const double scale = std::max(1.0, norm_inf(f) / (g.eps() * g.eps()));
        for (int i = 0; i < ell; ++i) {
            REQUIRE(std::abs(lf[i] - mp[i]) <= 1e-12 * scale);
            REQUIRE(std::abs(lf[i] - pm[i]) <= 1e-12 * scale);
        }
    }
}

TEST_CASE("summation by parts over random pairs", "[grid]") {
    Rng rng(22);
    for (int ell : {3, 5, 31}) {
        GridSpec g = make_grid(ell);
        for (int k = 0; k < 100; ++k) {
            LatticeField f = random_field(g, rng);
            LatticeField h = random_field(g, rng);
            const double lhs = inner(grad_plus(f), h);
            const double rhs = -inner(f, grad_minus(h));
            REQUIRE(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, norm_l2(f) * norm_l2(h)));
        }
    }
}

TEST_CASE("inner product basics", "[grid]") {
    GridSpec g = make_grid(3);
    LatticeField ones(g, 1.0);
    REQUIRE(inner(ones, ones) == Approx(1.0));

    LatticeField e0(g, std::vector<double>{1.0, 0.0, 0.0});
    LatticeField e1(g, std::vector<double>{0.0, 1.0, 0.0});
    REQUIRE(inner(e0, e1) == 0.0);

    GridSpec g5 = make_grid(5);
    LatticeField other(g5, 1.0);
    REQUIRE_THROWS_AS(inner(ones, other), std::invalid_argument);
}

TEST_CASE("mass neutrality and dissipativity", "[grid]") {
    Rng rng(33);
    for (int ell : {5, 31}) {
        GridSpec g = make_grid(ell);
        LatticeField f = random_field(g, rng);
        LatticeField lf = laplacian(f);
        double total = 0.0;
        for (int i = 0; i < ell; ++i) total += lf[i];
        REQUIRE(std::abs(total) <= 1e-10 * norm_inf(f) / (g.eps() * g.eps()));

        const double lhs = inner(lf, f);
        LatticeField gp = grad_plus(f);
        REQUIRE(lhs == Approx(-inner(gp, gp)).margin(1e-10 * norm_inf(f) / (g.eps() * g.eps())));
        REQUIRE(lhs <= 0.0);
    }
}

TEST_CASE("project reproduces constants and cos(2 pi x) cell averages", "[grid]") {
    GridSpec g = make_grid(5);
    LatticeField c = project([](double) { return 4.5; }, g);
    for (int i = 0; i < g.ell; ++i) REQUIRE(c[i] == Approx(4.5).margin(1e-13));

    // Antiderivative oracle: cell average of cos(2 pi x) over V_i.
    const double eps = g.eps();
    const double twopi = 2.0 * std::numbers::pi;
    LatticeField f = project([&](double x) { return std::cos(twopi * x); }, g);
    for (int i = 0; i < g.ell; ++i) {
        const double a = g.site(i) - 0.5 * eps;
        const double b = g.site(i) + 0.5 * eps;
        const double exact = (std::sin(twopi * b) - std::sin(twopi * a)) / (twopi * eps);
        REQUIRE(f[i] == Approx(exact).margin(1e-12));
    }
}

TEST_CASE("project preserves the total integral", "[grid]") {
    GridSpec g = make_grid(9);
    // cos^2(2 pi x) integrates to 1/2 over the torus.
    LatticeField f = project([](double x) { return std::pow(std::cos(2.0 * std::numbers::pi * x), 2); }, g);
    LatticeField ones(g, 1.0);
    REQUIRE(inner(f, ones) == Approx(0.5).margin(1e-12));
}

TEST_CASE("project rejects non-finite integrands", "[grid]") {
    GridSpec g = make_grid(3);
    REQUIRE_THROWS_AS(project([](double x) { return 1.0 / (x - x); }, g), std::domain_error);
}

TEST_CASE("splitmix64 reference vector and replica seed derivation", "[grid][rng]") {
    std::uint64_t s = 0;
    REQUIRE(splitmix64_next(s) == 0xE220A8397B1DCDAFull);
    REQUIRE(derive_replica_seed(0, 0) == 0xE220A8397B1DCDAFull);
    REQUIRE(derive_replica_seed(42, 7) == derive_replica_seed(42, 7));
    REQUIRE(derive_replica_seed(42, 7) != derive_replica_seed(42, 8));
}

TEST_CASE("replica seeds are collision-free over 1e6 indices", "[grid][rng]") {
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(1 << 21);
    for (std::uint64_t k = 0; k < 1000000; ++k) seen.insert(derive_replica_seed(2024, k));
    REQUIRE(seen.size() == 1000000);
}

TEST_CASE("rng normal moments sane", "[grid][rng]") {
    Rng rng(2024);
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        double z = rng.normal();
        sum += z;
        sum2 += z * z;
    }
    REQUIRE(sum / n == Approx(0.0).margin(0.01));
    REQUIRE(sum2 / n == Approx(1.0).margin(0.02));
}
