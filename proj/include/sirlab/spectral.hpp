/// @file spectral.hpp
/// @brief Eigenbasis of the discrete Laplacian, heat semigroups, Sobolev norms.
///
/// The basis on an odd grid of ell cells is {phi_0 = 1} plus, for even
/// m in {2, 4, ..., ell-1}, the pair phi_m(x_j) = sqrt(2) cos(pi m j eps),
/// psi_m(x_j) = sqrt(2) sin(pi m j eps). These are eigenvectors of the
/// discrete Laplacian with eigenvalues -lambda_m^eps,
/// lambda_m^eps = 2 eps^-2 (1 - cos(m pi eps)), and they converge to the
/// continuous eigenpairs with lambda_m = pi^2 m^2. Only even m appear; the
/// count 1 + (ell-1) = ell works precisely because ell is odd.

#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "sirlab/grid.hpp"

namespace sirlab {

enum class ModeKind { cos, sin };

struct ModeIndex {
    int m = 0;  ///< even, 0 <= m <= ell-1
    ModeKind kind = ModeKind::cos;
};

inline void validate_mode(ModeIndex mode, GridSpec grid) {
    if (mode.m < 0 || mode.m % 2 != 0)
        throw std::invalid_argument("spectral: mode m must be even and nonnegative, got " +
                                    std::to_string(mode.m));
    if (mode.m > grid.ell - 1)
        throw std::invalid_argument("spectral: mode m exceeds ell-1");
    if (mode.m == 0 && mode.kind == ModeKind::sin)
        throw std::invalid_argument("spectral: sin mode is identically zero at m=0");
}

/// lambda_m^eps = 2 eps^-2 (1 - cos(m pi eps)), evaluated as
/// 4 eps^-2 sin^2(m pi eps / 2) to avoid cancellation at small m.
inline double eigenvalue_discrete(int m, GridSpec grid) {
    validate_mode({m, ModeKind::cos}, grid);
    const double ell = static_cast<double>(grid.ell);
    const double s = std::sin(0.5 * std::numbers::pi * static_cast<double>(m) / ell);
    return 4.0 * ell * ell * s * s;
}

/// Continuous eigenvalue lambda_m = pi^2 m^2.
inline double eigenvalue_continuous(int m) {
    if (m < 0 || m % 2 != 0)
        throw std::invalid_argument("spectral: continuous mode m must be even and nonnegative");
    return std::numbers::pi * std::numbers::pi * static_cast<double>(m) * static_cast<double>(m);
}

/// Sampled eigenvector as a lattice field. The angle pi*m*j/ell is reduced
/// with integer arithmetic (m*j mod 2*ell) before multiplying by pi/ell, so
/// values keep full precision and the periodicity j -> j+ell is exact.
inline LatticeField basis_field(ModeIndex mode, GridSpec grid) {
    validate_mode(mode, grid);
    LatticeField out(grid);
    if (mode.m == 0) {
        for (int j = 0; j < grid.ell; ++j) out[j] = 1.0;
        return out;
    }
    const double sqrt2 = std::numbers::sqrt2;
    const long two_ell = 2L * grid.ell;
    for (int j = 0; j < grid.ell; ++j) {
        const long k = (static_cast<long>(mode.m) * j) % two_ell;
        const double angle = std::numbers::pi * static_cast<double>(k) / static_cast<double>(grid.ell);
        out[j] = sqrt2 * (mode.kind == ModeKind::cos ? std::cos(angle) : std::sin(angle));
    }
    return out;
}

/// Continuous eigenfunctions evaluated pointwise (phi_0 = 1, psi_0 = 0).
inline double phi_continuous(int m, double x) {
    if (m == 0) return 1.0;
    return std::numbers::sqrt2 * std::cos(std::numbers::pi * m * x);
}
inline double psi_continuous(int m, double x) {
    if (m == 0) return 0.0;
    return std::numbers::sqrt2 * std::sin(std::numbers::pi * m * x);
}

/// Precomputed orthonormal basis table for one grid. Build once per GridSpec
/// and share read-only; all functions below are pure.
///
/// Flat mode order: index 0 is (0,cos); for k >= 1, index 2k-1 is (2k,cos)
/// and index 2k is (2k,sin).
class SpectralBasis {
public:
    explicit SpectralBasis(GridSpec grid) : grid_(grid) {
        const int n = grid.ell;
        modes_.reserve(n);
        lambda_.reserve(n);
        modes_.push_back({0, ModeKind::cos});
        lambda_.push_back(0.0);
        for (int m = 2; m <= n - 1; m += 2) {
            modes_.push_back({m, ModeKind::cos});
            lambda_.push_back(eigenvalue_discrete(m, grid));
            modes_.push_back({m, ModeKind::sin});
            lambda_.push_back(eigenvalue_discrete(m, grid));
        }
        vecs_.resize(static_cast<std::size_t>(n) * n);
        for (int a = 0; a < n; ++a) {
            LatticeField f = basis_field(modes_[static_cast<std::size_t>(a)], grid);
            for (int j = 0; j < n; ++j) vecs_[static_cast<std::size_t>(a) * n + j] = f[j];
        }
    }

    GridSpec grid() const { return grid_; }
    int n_modes() const { return grid_.ell; }
    ModeIndex mode(int a) const { return modes_[static_cast<std::size_t>(a)]; }
    double lambda(int a) const { return lambda_[static_cast<std::size_t>(a)]; }
    const double* vec(int a) const { return vecs_.data() + static_cast<std::size_t>(a) * grid_.ell; }

    /// Flat index of a mode (inverse of mode()).
    int index_of(ModeIndex mode) const {
        validate_mode(mode, grid_);
        if (mode.m == 0) return 0;
        return mode.m - 1 + (mode.kind == ModeKind::sin ? 1 : 0);
    }

    void analyze_into(const double* field, double* coeffs) const {
        const int n = grid_.ell;
        const double eps = grid_.eps();
        for (int a = 0; a < n; ++a) {
            const double* row = vec(a);
            double acc = 0.0;
            for (int j = 0; j < n; ++j) acc += row[j] * field[j];
            coeffs[a] = acc * eps;
        }
    }

    void synthesize_into(const double* coeffs, double* field) const {
        const int n = grid_.ell;
        for (int j = 0; j < n; ++j) field[j] = 0.0;
        for (int a = 0; a < n; ++a) {
            const double c = coeffs[a];
            if (c == 0.0) continue;
            const double* row = vec(a);
            for (int j = 0; j < n; ++j) field[j] += c * row[j];
        }
    }

private:
    GridSpec grid_;
    std::vector<ModeIndex> modes_;
    std::vector<double> lambda_;
    std::vector<double> vecs_;  // row-major, one basis vector per row
};

/// Coefficients of a lattice field in the discrete eigenbasis.
struct SpectralCoeffs {
    GridSpec grid;
    std::vector<double> coeffs;  // flat mode order of SpectralBasis
};

inline SpectralCoeffs analyze(const LatticeField& f, const SpectralBasis& basis) {
    if (!(f.grid == basis.grid())) throw std::invalid_argument("analyze: grid mismatch");
    SpectralCoeffs c{f.grid, std::vector<double>(static_cast<std::size_t>(f.size()))};
    basis.analyze_into(f.values.data(), c.coeffs.data());
    return c;
}

inline LatticeField synthesize(const SpectralCoeffs& c, const SpectralBasis& basis) {
    if (!(c.grid == basis.grid())) throw std::invalid_argument("synthesize: grid mismatch");
    LatticeField f(c.grid);
    basis.synthesize_into(c.coeffs.data(), f.values.data());
    return f;
}

/// Heat semigroup exp(mu t Laplacian): scales each eigencoefficient by
/// exp(-mu lambda_m^eps t).
inline LatticeField semigroup_apply(double t, double mu, const LatticeField& f,
                                    const SpectralBasis& basis) {
    if (t < 0.0) throw std::invalid_argument("semigroup_apply: negative time");
    if (mu <= 0.0) throw std::invalid_argument("semigroup_apply: diffusivity must be positive");
    SpectralCoeffs c = analyze(f, basis);
    for (int a = 0; a < basis.n_modes(); ++a)
        c.coeffs[static_cast<std::size_t>(a)] *= std::exp(-mu * basis.lambda(a) * t);
    return synthesize(c, basis);
}

/// Discrete Sobolev norm over all ell modes:
/// [sum_m (<f,phi_m>^2 + <f,psi_m>^2)(1 + lambda_m^eps)^gamma]^(1/2);
/// gamma may be negative.
inline double sobolev_norm_discrete(const LatticeField& f, double gamma, const SpectralBasis& basis) {
    SpectralCoeffs c = analyze(f, basis);
    double acc = 0.0;
    for (int a = 0; a < basis.n_modes(); ++a) {
        const double v = c.coeffs[static_cast<std::size_t>(a)];
        acc += v * v * std::pow(1.0 + basis.lambda(a), gamma);
    }
    return std::sqrt(acc);
}

inline constexpr int kMaxTruncation = 512;

/// <f, phi_m> and <f, psi_m> against the continuous eigenfunctions, with the
/// cell integrals int_{V_i} sqrt(2) cos/sin(m pi x) dx in closed form.
inline void continuous_mode_pair(const LatticeField& f, int m, double& c_cos, double& c_sin) {
    const int n = f.size();
    const double eps = f.grid.eps();
    if (m == 0) {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) acc += f[i];
        c_cos = acc * eps;
        c_sin = 0.0;
        return;
    }
    const double w = std::numbers::pi * static_cast<double>(m);
    const double scale = std::numbers::sqrt2 / w;
    double acc_c = 0.0, acc_s = 0.0;
    for (int i = 0; i < n; ++i) {
        const double a = (static_cast<double>(i) - 0.5) * eps;
        const double b = (static_cast<double>(i) + 0.5) * eps;
        acc_c += f[i] * (std::sin(w * b) - std::sin(w * a));
        acc_s += f[i] * (std::cos(w * a) - std::cos(w * b));
    }
    c_cos = scale * acc_c;
    c_sin = scale * acc_s;
}

/// Precomputed cell integrals of the continuous eigenfunctions up to a
/// truncation M, for repeated coefficient extraction against step functions.
class ContinuousModeTable {
public:
    ContinuousModeTable(GridSpec grid, int M) : grid_(grid), M_(M) {
        if (M < 2 || M % 2 != 0)
            throw std::invalid_argument("ContinuousModeTable: truncation must be even and >= 2");
        const int n = grid.ell;
        const int pairs = M / 2 + 1;
        i_cos_.assign(static_cast<std::size_t>(pairs) * n, 0.0);
        i_sin_.assign(static_cast<std::size_t>(pairs) * n, 0.0);
        const double eps = grid.eps();
        for (int p = 0; p < pairs; ++p) {
            const int m = 2 * p;
            for (int i = 0; i < n; ++i) {
                const double a = (static_cast<double>(i) - 0.5) * eps;
                const double b = (static_cast<double>(i) + 0.5) * eps;
                if (m == 0) {
                    i_cos_[static_cast<std::size_t>(p) * n + i] = eps;
                    continue;
                }
                const double w = std::numbers::pi * static_cast<double>(m);
                const double scale = std::numbers::sqrt2 / w;
                i_cos_[static_cast<std::size_t>(p) * n + i] =
                    scale * (std::sin(w * b) - std::sin(w * a));
                i_sin_[static_cast<std::size_t>(p) * n + i] =
                    scale * (std::cos(w * a) - std::cos(w * b));
            }
        }
    }

    GridSpec grid() const { return grid_; }
    int truncation() const { return M_; }

    /// <f, phi_m> and <f, psi_m> for even m <= M.
    void mode_pair(const LatticeField& f, int m, double& c_cos, double& c_sin) const {
        const int n = grid_.ell;
        const double* rc = i_cos_.data() + static_cast<std::size_t>(m / 2) * n;
        const double* rs = i_sin_.data() + static_cast<std::size_t>(m / 2) * n;
        double ac = 0.0, as = 0.0;
        for (int i = 0; i < n; ++i) {
            ac += f[i] * rc[i];
            as += f[i] * rs[i];
        }
        c_cos = ac;
        c_sin = as;
    }

    /// Truncated squared H^gamma norm of a step function.
    double sobolev_norm_sq(const LatticeField& f, double gamma) const {
        double acc = 0.0;
        for (int m = 0; m <= M_; m += 2) {
            double cc, cs;
            mode_pair(f, m, cc, cs);
            acc += (cc * cc + cs * cs) * std::pow(1.0 + eigenvalue_continuous(m), gamma);
        }
        return acc;
    }

private:
    GridSpec grid_;
    int M_;
    std::vector<double> i_cos_, i_sin_;
};

/// Continuous-basis Sobolev norm truncated at even mode M.
inline double sobolev_norm_continuous(const LatticeField& f, double gamma, int M) {
    if (M < 2 || M % 2 != 0)
        throw std::invalid_argument("sobolev_norm_continuous: truncation M must be even and >= 2");
    if (M > kMaxTruncation)
        throw std::invalid_argument("sobolev_norm_continuous: truncation M exceeds cap");
    double acc = 0.0;
    for (int m = 0; m <= M; m += 2) {
        double cc, cs;
        continuous_mode_pair(f, m, cc, cs);
        acc += (cc * cc + cs * cs) * std::pow(1.0 + eigenvalue_continuous(m), gamma);
    }
    return std::sqrt(acc);
}

/// Spectral form of the gradient norm:
/// [sum_m (c_m^2) lambda_m^eps (1 + lambda_m^eps)^(-gamma)]^(1/2),
/// which equals |grad+ f| and |grad- f| in the H^{-gamma,eps} norm
/// (the mode pair rotates under grad with |a|^2 + |b|^2 = lambda_m^eps).
inline double grad_norm_spectral(const LatticeField& f, double gamma, const SpectralBasis& basis) {
    SpectralCoeffs c = analyze(f, basis);
    double acc = 0.0;
    for (int a = 0; a < basis.n_modes(); ++a) {
        const double v = c.coeffs[static_cast<std::size_t>(a)];
        const double lam = basis.lambda(a);
        acc += v * v * lam * std::pow(1.0 + lam, -gamma);
    }
    return std::sqrt(acc);
}

}  // namespace sirlab
