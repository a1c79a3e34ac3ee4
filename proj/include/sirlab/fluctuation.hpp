/// @file fluctuation.hpp
/// @brief Rescaled deviations sqrt(N)(Z_N - Z) and their fixed-grid
/// Ornstein-Uhlenbeck limit.
///
/// Vectors over the 3*ell phase space are packed (S-block, I-block, R-block).
/// The OU drift is the exact Jacobian of the deterministic right-hand side;
/// with the incidence inc = beta S I / A its site-diagonal partials are
///   d(inc)/dS = beta I (I+R) / A^2,
///   d(inc)/dI = beta S (S+R) / A^2,
///   d(inc)/dR = -beta S I / A^2.
/// A published variant of this limit system pairs the U/V coefficients the
/// other way around (the transpose of the Jacobian's reaction block) and
/// drops the R-coupling; `paper_literal = true` reproduces that variant so
/// both readings can be compared. The default follows the exact Jacobian.
///
/// The noise has one independent Brownian channel per jump channel (8*ell of
/// them), entering through the jump directions h_j with instantaneous rates
/// in proportion units: beta S I / A, alpha I, mu_J eps^-2 X_J.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "sirlab/deterministic.hpp"
#include "sirlab/grid.hpp"
#include "sirlab/jump.hpp"
#include "sirlab/rng.hpp"

namespace sirlab {

/// Signed fluctuation fields, units sqrt(population) * proportion.
struct FluctuationState {
    LatticeField U, V, W;

    FluctuationState() = default;
    explicit FluctuationState(GridSpec g) : U(g), V(g), W(g) {}
    GridSpec grid() const { return U.grid; }
};

inline Eigen::VectorXd pack_state(const FluctuationState& st) {
    const int n = st.grid().ell;
    Eigen::VectorXd v(3 * n);
    for (int i = 0; i < n; ++i) {
        v(i) = st.U[i];
        v(n + i) = st.V[i];
        v(2 * n + i) = st.W[i];
    }
    return v;
}

inline FluctuationState unpack_state(const Eigen::VectorXd& v, GridSpec grid) {
    const int n = grid.ell;
    if (v.size() != 3 * n) throw std::invalid_argument("unpack_state: size mismatch");
    FluctuationState st(grid);
    for (int i = 0; i < n; ++i) {
        st.U[i] = v(i);
        st.V[i] = v(n + i);
        st.W[i] = v(2 * n + i);
    }
    return st;
}

/// sqrt(N) * (jump proportions - deterministic state), per sample time.
inline Trajectory<FluctuationState> psi(const Trajectory<JumpState>& jump_traj,
                                        const Trajectory<SIRState>& det_traj, std::int64_t N) {
    if (jump_traj.size() != det_traj.size())
        throw std::invalid_argument("psi: trajectories have different sample counts");
    Trajectory<FluctuationState> out;
    out.times = jump_traj.times;
    out.states.reserve(jump_traj.size());
    const double root_n = std::sqrt(static_cast<double>(N));
    for (std::size_t k = 0; k < jump_traj.size(); ++k) {
        if (std::abs(jump_traj.times[k] - det_traj.times[k]) > 1e-12)
            throw std::invalid_argument("psi: sample times differ");
        const SIRState props = to_proportions(jump_traj.states[k]);
        if (!(props.grid() == det_traj.states[k].grid()))
            throw std::invalid_argument("psi: grids differ");
        FluctuationState f(props.grid());
        for (int i = 0; i < props.grid().ell; ++i) {
            f.U[i] = root_n * (props.S[i] - det_traj.states[k].S[i]);
            f.V[i] = root_n * (props.I[i] - det_traj.states[k].I[i]);
            f.W[i] = root_n * (props.R[i] - det_traj.states[k].R[i]);
        }
        out.states.push_back(std::move(f));
    }
    return out;
}

/// Jacobian of the deterministic right-hand side at a state: diffusion
/// blocks mu_J Laplacian on the diagonal plus site-diagonal reaction blocks.
/// Requires A > 0 at every site.
inline Eigen::MatrixXd drift_jacobian(const SIRState& state, const ModelParams& params,
                                      bool paper_literal = false) {
    const int n = state.grid().ell;
    const double inv_eps2 = static_cast<double>(n) * static_cast<double>(n);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(3 * n, 3 * n);

    const double mus[3] = {params.mu_S, params.mu_I, params.mu_R};
    for (int b = 0; b < 3; ++b) {
        const int off = b * n;
        for (int i = 0; i < n; ++i) {
            A(off + i, off + i) += -2.0 * mus[b] * inv_eps2;
            A(off + i, off + (i + 1) % n) += mus[b] * inv_eps2;
            A(off + i, off + (i + n - 1) % n) += mus[b] * inv_eps2;
        }
    }

    for (int i = 0; i < n; ++i) {
        const double s = state.S[i], v = state.I[i], r = state.R[i];
        const double a = s + v + r;
        if (a <= 0.0)
            throw std::domain_error("drift_jacobian: nonpositive total mass at site " +
                                    std::to_string(i));
        const double b = params.beta[i];
        const double al = params.alpha[i];
        double dS, dI, dR;  // partials of the incidence w.r.t. (S, I, R)
        if (paper_literal) {
            dS = b * s * (s + r) / (a * a);  // f_eps paired with U
            dI = b * v * (v + r) / (a * a);  // g_eps paired with V
            dR = 0.0;
        } else {
            dS = b * v * (v + r) / (a * a);
            dI = b * s * (s + r) / (a * a);
            dR = -b * s * v / (a * a);
        }
        A(i, i) += -dS;
        A(i, n + i) += -dI;
        A(i, 2 * n + i) += -dR;
        A(n + i, i) += dS;
        A(n + i, n + i) += dI - al;
        A(n + i, 2 * n + i) += dR;
        A(2 * n + i, n + i) += al;
    }
    return A;
}

/// Per-channel instantaneous rates in proportion units, fixed channel layout
/// shared with the jump engine.
inline void proportion_rates_into(const SIRState& state, const ModelParams& params,
                                  std::vector<double>& rates) {
    const int n = state.grid().ell;
    const double inv_eps2 = static_cast<double>(n) * static_cast<double>(n);
    rates.resize(static_cast<std::size_t>(8) * n);
    for (int i = 0; i < n; ++i) {
        const double s = state.S[i], v = state.I[i], r = state.R[i];
        const double a = s + v + r;
        double* out = rates.data() + static_cast<std::size_t>(8) * i;
        out[0] = (a > 0.0) ? params.beta[i] * s * v / a : 0.0;
        out[1] = params.alpha[i] * v;
        out[2] = out[3] = params.mu_S * inv_eps2 * s;
        out[4] = out[5] = params.mu_I * inv_eps2 * v;
        out[6] = out[7] = params.mu_R * inv_eps2 * r;
    }
}

namespace detail {

/// Sparse description of one jump direction h: up to two (index, sign) pairs.
struct ChannelStencil {
    int idx_minus = -1;
    int idx_plus = -1;
};

inline std::vector<ChannelStencil> channel_stencils(GridSpec grid) {
    const int n = grid.ell;
    std::vector<ChannelStencil> st(static_cast<std::size_t>(8) * n);
    for (int i = 0; i < n; ++i) {
        const int ip = (i + 1) % n, im = (i + n - 1) % n;
        ChannelStencil* c = st.data() + static_cast<std::size_t>(8) * i;
        c[0] = {i, n + i};               // infection: S-1, I+1
        c[1] = {n + i, 2 * n + i};       // recovery: I-1, R+1
        c[2] = {i, ip};                  // S migration +
        c[3] = {i, im};                  // S migration -
        c[4] = {n + i, n + ip};          // I migration +
        c[5] = {n + i, n + im};          // I migration -
        c[6] = {2 * n + i, 2 * n + ip};  // R migration +
        c[7] = {2 * n + i, 2 * n + im};  // R migration -
    }
    return st;
}

}  // namespace detail

/// Q(t) = sum_j h_j h_j^T rate_j, symmetric PSD, in proportion units.
inline Eigen::MatrixXd diffusion_matrix(const SIRState& state, const ModelParams& params) {
    const int n = state.grid().ell;
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(3 * n, 3 * n);
    std::vector<double> rates;
    proportion_rates_into(state, params, rates);
    const std::vector<detail::ChannelStencil> stencils = detail::channel_stencils(state.grid());
    for (std::size_t c = 0; c < rates.size(); ++c) {
        const double r = rates[c];
        if (r == 0.0) continue;
        const int a = stencils[c].idx_minus;
        const int b = stencils[c].idx_plus;
        Q(a, a) += r;
        Q(b, b) += r;
        Q(a, b) -= r;
        Q(b, a) -= r;
    }
    return Q;
}

/// Time-indexed OU coefficients along a deterministic trajectory, built once
/// and shared read-only across paths.
struct OuCoefficients {
    GridSpec grid;
    double dt = 0.0;
    std::vector<Eigen::MatrixXd> drift;       // A(t_k), one per step start
    std::vector<std::vector<double>> rates;   // channel rates at t_k
    std::vector<detail::ChannelStencil> stencils;
};

inline OuCoefficients build_ou_coefficients(const Trajectory<SIRState>& det_traj,
                                            const ModelParams& params,
                                            bool paper_literal = false) {
    if (det_traj.size() < 2) throw std::invalid_argument("build_ou_coefficients: trajectory too short");
    OuCoefficients co;
    co.grid = det_traj.states.front().grid();
    co.dt = det_traj.times[1] - det_traj.times[0];
    const double guard = 0.1 * co.grid.eps() * co.grid.eps() / params.max_mu();
    if (co.dt > guard * (1.0 + 1e-12))
        throw std::invalid_argument("build_ou_coefficients: dt violates the explicit-scheme guard");
    for (std::size_t k = 0; k + 1 < det_traj.size(); ++k) {
        const double step = det_traj.times[k + 1] - det_traj.times[k];
        if (std::abs(step - co.dt) > 1e-12 * std::max(1.0, std::abs(co.dt)))
            throw std::invalid_argument("build_ou_coefficients: nonuniform sampling");
        co.drift.push_back(drift_jacobian(det_traj.states[k], params, paper_literal));
        std::vector<double> r;
        proportion_rates_into(det_traj.states[k], params, r);
        co.rates.push_back(std::move(r));
    }
    co.stencils = detail::channel_stencils(co.grid);
    return co;
}

/// Euler-Maruyama for the linear fluctuation SDE:
/// Psi_{k+1} = Psi_k + A(t_k) Psi_k dt + sum_j h_j sqrt(rate_j dt) xi_{j,k}.
/// Starts from psi0 (zero by default). `noise_scale = 0` switches the noise
/// off, which makes the map linear in psi0.
inline Trajectory<FluctuationState> simulate_ou_fixed_eps(const OuCoefficients& co,
                                                          std::uint64_t seed,
                                                          const FluctuationState* psi0 = nullptr,
                                                          double noise_scale = 1.0) {
    const int dim = 3 * co.grid.ell;
    const double h = co.dt;
    Rng rng(seed);

    Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
    if (psi0) x = pack_state(*psi0);

    Trajectory<FluctuationState> out;
    out.times.push_back(0.0);
    out.states.push_back(unpack_state(x, co.grid));

    const double sqrt_h = std::sqrt(h);
    for (std::size_t k = 0; k < co.drift.size(); ++k) {
        Eigen::VectorXd drift = co.drift[k] * x;
        x += h * drift;
        if (noise_scale != 0.0) {
            const std::vector<double>& rates = co.rates[k];
            for (std::size_t c = 0; c < rates.size(); ++c) {
                const double amp = noise_scale * std::sqrt(rates[c]) * sqrt_h * rng.normal();
                x(co.stencils[c].idx_minus) -= amp;
                x(co.stencils[c].idx_plus) += amp;
            }
        }
        out.times.push_back(static_cast<double>(k + 1) * h);
        out.states.push_back(unpack_state(x, co.grid));
    }
    return out;
}

/// Convenience wrapper building the coefficients on the fly.
inline Trajectory<FluctuationState> simulate_ou_fixed_eps(const Trajectory<SIRState>& det_traj,
                                                          const ModelParams& params,
                                                          std::uint64_t seed,
                                                          bool paper_literal = false) {
    OuCoefficients co = build_ou_coefficients(det_traj, params, paper_literal);
    return simulate_ou_fixed_eps(co, seed);
}

/// Step-function embedding scale eps^{-1/2} used by the SPDE-limit fields.
inline LatticeField rescale_field(const LatticeField& f) {
    return (1.0 / std::sqrt(f.grid.eps())) * f;
}

}  // namespace sirlab
