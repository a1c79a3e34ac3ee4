/// @file spde.hpp
/// @brief Gaussian limit martingales, the linear stochastic system, the
/// forced deterministic system, and their sum.
///
/// Five mutually independent discretized space-time white noises W1..W5
/// drive the limit martingales: per time step and cell the increments are
/// i.i.d. N(0, dt*eps). With coefficient fields (s, i, r) along a
/// deterministic trajectory the cumulative martingale increments per cell
/// are
///   dM_S = ( -sqrt(beta s i / a) dW1 + sqrt(2 mu_S) grad+( sqrt(s) dW2 ) ) / eps
///   dM_I = ( +sqrt(beta s i / a) dW1 + sqrt(alpha i) dW3
///                                    + sqrt(2 mu_I) grad+( sqrt(i) dW4 ) ) / eps
///   dM_R = ( -sqrt(alpha i) dW3      + sqrt(2 mu_R) grad+( sqrt(r) dW5 ) ) / eps
/// The migration noise enters through a discrete divergence so that pairing
/// with a test field phi reproduces the displayed weak form after summation
/// by parts: <dM_S, phi> has variance dt [ <beta s i/a, phi^2>
/// + 2 mu_S <s, (grad- phi)^2> ]. Each compartment carries its own
/// independent migration family (the source display reuses one label across
/// compartments; independence follows the fixed-grid limit theorem).
///
/// The linear system du = mu Delta u dt + dM uses exponential Euler in the
/// eigenbasis (exact on the deterministic part, no step restriction); the
/// forced bar system uses explicit RK4 and therefore inherits the
/// h <= 0.1 eps^2 / max(mu) guard, with the (u, v) forcing held constant
/// over each step.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "sirlab/deterministic.hpp"
#include "sirlab/fluctuation.hpp"
#include "sirlab/grid.hpp"
#include "sirlab/rng.hpp"
#include "sirlab/spectral.hpp"

namespace sirlab {

/// One step of the five-stream white noise: dW[s][i] ~ N(0, dt*eps),
/// generated stream-major (all cells of W1, then W2, ...). The draw order is
/// part of the reproducibility contract.
class NoiseGenerator {
public:
    NoiseGenerator(GridSpec grid, double dt, std::uint64_t seed, double scale = 1.0)
        : grid_(grid), amp_(scale * std::sqrt(dt * grid.eps())), rng_(seed) {}

    void next_step(std::array<std::vector<double>, 5>& dW) {
        for (auto& stream : dW) {
            stream.resize(static_cast<std::size_t>(grid_.ell));
            for (double& v : stream) v = amp_ * rng_.normal();
        }
    }

private:
    GridSpec grid_;
    double amp_;
    Rng rng_;
};

/// Cumulative martingale fields, adapted: M(0) = 0 and step k uses only
/// increments up to k.
struct MartingaleFields {
    Trajectory<LatticeField> M_S, M_I, M_R;
};

/// Cell-average restriction of a fine step function onto a coarser nested
/// grid (fine.ell must be an odd multiple of coarse.ell).
inline LatticeField restrict_field(const LatticeField& fine, GridSpec coarse) {
    const int m = fine.grid.ell / coarse.ell;
    if (coarse.ell * m != fine.grid.ell)
        throw std::invalid_argument("restrict_field: grids do not nest");
    LatticeField out(coarse);
    const int half = (m - 1) / 2;
    for (int i = 0; i < coarse.ell; ++i) {
        double acc = 0.0;
        for (int j = -half; j <= half; ++j) {
            const int idx = (m * i + j + fine.grid.ell) % fine.grid.ell;
            acc += fine[idx];
        }
        out[i] = acc / static_cast<double>(m);
    }
    return out;
}

inline Trajectory<SIRState> restrict_trajectory(const Trajectory<SIRState>& fine, GridSpec coarse) {
    Trajectory<SIRState> out;
    out.times = fine.times;
    out.states.reserve(fine.size());
    for (const SIRState& st : fine.states) {
        SIRState c(coarse);
        c.S = restrict_field(st.S, coarse);
        c.I = restrict_field(st.I, coarse);
        c.R = restrict_field(st.R, coarse);
        out.states.push_back(std::move(c));
    }
    return out;
}

namespace detail {

inline double sqrt_nonneg(double v, const char* what) {
    if (v < 0.0) {
        if (v > -1e-14) return 0.0;  // integrator-level negative roundoff
        throw std::domain_error(std::string("simulate_martingales: negative value under sqrt in ") +
                                what);
    }
    return std::sqrt(v);
}

}  // namespace detail

/// Simulate the three limit martingales along uniformly sampled coefficient
/// fields. `noise_scale` scales all five streams (the whole downstream
/// pipeline is linear in it).
inline MartingaleFields simulate_martingales(const Trajectory<SIRState>& coeffs,
                                             const ModelParams& params, std::uint64_t seed,
                                             double noise_scale = 1.0) {
    if (coeffs.size() < 2) throw std::invalid_argument("simulate_martingales: trajectory too short");
    const GridSpec grid = coeffs.states.front().grid();
    const double dt = coeffs.times[1] - coeffs.times[0];
    const int n = grid.ell;
    const double inv_eps = static_cast<double>(n);

    NoiseGenerator noise(grid, dt, seed, noise_scale);
    std::array<std::vector<double>, 5> dW;

    MartingaleFields out;
    out.M_S.times = out.M_I.times = out.M_R.times = coeffs.times;
    LatticeField ms(grid), mi(grid), mr(grid);
    out.M_S.states.push_back(ms);
    out.M_I.states.push_back(mi);
    out.M_R.states.push_back(mr);

    LatticeField flux(grid);
    for (std::size_t k = 0; k + 1 < coeffs.size(); ++k) {
        const double step = coeffs.times[k + 1] - coeffs.times[k];
        if (std::abs(step - dt) > 1e-12 * std::max(1.0, dt))
            throw std::invalid_argument("simulate_martingales: nonuniform sampling");
        const SIRState& st = coeffs.states[k];
        noise.next_step(dW);

        // Reaction channels, cellwise.
        for (int i = 0; i < n; ++i) {
            const double s = st.S[i], iv = st.I[i], r = st.R[i];
            const double a = s + iv + r;
            const double c_inf =
                (a > 0.0) ? detail::sqrt_nonneg(params.beta[i] * s * iv / a, "infection") : 0.0;
            const double c_rec = detail::sqrt_nonneg(params.alpha[i] * iv, "recovery");
            ms[i] += inv_eps * (-c_inf * dW[0][i]);
            mi[i] += inv_eps * (c_inf * dW[0][i] + c_rec * dW[2][i]);
            mr[i] += inv_eps * (-c_rec * dW[2][i]);
        }

        // Migration: discrete divergence grad+ of the sqrt-weighted flux.
        auto add_migration = [&](const LatticeField& comp, double mu, const std::vector<double>& w,
                                 LatticeField& target, const char* what) {
            const double amp = std::sqrt(2.0 * mu);
            for (int i = 0; i < n; ++i)
                flux[i] = detail::sqrt_nonneg(comp[i], what) * w[static_cast<std::size_t>(i)];
            for (int i = 0; i < n; ++i) {
                const int ip = (i + 1) % n;
                target[i] += inv_eps * amp * (flux[ip] - flux[i]) * inv_eps;
            }
        };
        add_migration(st.S, params.mu_S, dW[1], ms, "S migration");
        add_migration(st.I, params.mu_I, dW[3], mi, "I migration");
        add_migration(st.R, params.mu_R, dW[4], mr, "R migration");

        out.M_S.states.push_back(ms);
        out.M_I.states.push_back(mi);
        out.M_R.states.push_back(mr);
    }
    return out;
}

/// Trapezoid time quadrature of the fixed-grid S-martingale bracket for a
/// step-function test field:
/// int_0^T [ <beta S I / A, phi^2> + mu_S ( <S, (grad+ phi)^2> + <S, (grad- phi)^2> ) ] dr.
inline double bracket_quadrature_discrete(const LatticeField& phi,
                                          const Trajectory<SIRState>& det_traj,
                                          const ModelParams& params) {
    if (!(phi.grid == det_traj.states.front().grid()))
        throw std::invalid_argument("bracket_quadrature_discrete: grid mismatch");
    const LatticeField gp = grad_plus(phi);
    const LatticeField gm = grad_minus(phi);
    const int n = phi.grid.ell;
    const double eps = phi.grid.eps();

    std::vector<double> integrand(det_traj.size());
    for (std::size_t k = 0; k < det_traj.size(); ++k) {
        const SIRState& st = det_traj.states[k];
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            const double a = st.S[i] + st.I[i] + st.R[i];
            const double reaction = (a > 0.0) ? params.beta[i] * st.S[i] * st.I[i] / a : 0.0;
            acc += reaction * phi[i] * phi[i];
            acc += params.mu_S * st.S[i] * (gp[i] * gp[i] + gm[i] * gm[i]);
        }
        integrand[k] = acc * eps;
    }
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < det_traj.size(); ++k)
        total += 0.5 * (integrand[k] + integrand[k + 1]) * (det_traj.times[k + 1] - det_traj.times[k]);
    return total;
}

/// Linear/forced field triples on shared sample times.
struct FieldTriple {
    Trajectory<LatticeField> u, v, w;
};

/// Exponential Euler in the eigenbasis for du = mu Delta u dt + dM:
/// per mode, c <- exp(-mu lambda_m dt) c + <dM, f_m>; zero initial data.
inline FieldTriple simulate_linear_system(const MartingaleFields& mart, const ModelParams& params,
                                          const SpectralBasis& basis) {
    const std::size_t steps = mart.M_S.size();
    if (steps < 2) throw std::invalid_argument("simulate_linear_system: martingale too short");
    if (!(mart.M_S.states.front().grid == basis.grid()))
        throw std::invalid_argument("simulate_linear_system: grid mismatch");
    const GridSpec grid = basis.grid();
    const int n = grid.ell;
    const double dt = mart.M_S.times[1] - mart.M_S.times[0];

    const double mus[3] = {params.mu_S, params.mu_I, params.mu_R};
    std::array<std::vector<double>, 3> decay;
    for (int c = 0; c < 3; ++c) {
        decay[c].resize(static_cast<std::size_t>(n));
        for (int a = 0; a < n; ++a) decay[c][static_cast<std::size_t>(a)] = std::exp(-mus[c] * basis.lambda(a) * dt);
    }

    FieldTriple out;
    out.u.times = out.v.times = out.w.times = mart.M_S.times;
    out.u.states.emplace_back(grid);
    out.v.states.emplace_back(grid);
    out.w.states.emplace_back(grid);

    std::array<std::vector<double>, 3> coeff;
    for (auto& c : coeff) c.assign(static_cast<std::size_t>(n), 0.0);
    std::vector<double> dm(static_cast<std::size_t>(n)), dc(static_cast<std::size_t>(n));

    const Trajectory<LatticeField>* marts[3] = {&mart.M_S, &mart.M_I, &mart.M_R};
    Trajectory<LatticeField>* outs[3] = {&out.u, &out.v, &out.w};
    for (std::size_t k = 0; k + 1 < steps; ++k) {
        for (int c = 0; c < 3; ++c) {
            const LatticeField& m0 = marts[c]->states[k];
            const LatticeField& m1 = marts[c]->states[k + 1];
            for (int i = 0; i < n; ++i) dm[static_cast<std::size_t>(i)] = m1[i] - m0[i];
            basis.analyze_into(dm.data(), dc.data());
            for (int a = 0; a < n; ++a) {
                const std::size_t ai = static_cast<std::size_t>(a);
                coeff[c][ai] = decay[c][ai] * coeff[c][ai] + dc[ai];
            }
            LatticeField f(grid);
            basis.synthesize_into(coeff[c].data(), f.values.data());
            outs[c]->states.push_back(std::move(f));
        }
    }
    return out;
}

/// RK4 for the forced linear system with time-dependent coefficient fields
/// f, g (interpolated within the step) and the stochastic forcing
/// (f u + g v at the step start) held constant over each step:
///   ubar' = mu_S Delta ubar - f ubar - g vbar - f u - g v
///   vbar' = mu_I Delta vbar + f ubar + (g - alpha) vbar + f u + (g - alpha) v
///   wbar' = mu_R Delta wbar + alpha (v + vbar)
inline FieldTriple simulate_bar_system(const FieldTriple& linear,
                                       const Trajectory<LatticeField>& f_traj,
                                       const Trajectory<LatticeField>& g_traj,
                                       const LatticeField& alpha, const ModelParams& params) {
    const std::size_t steps = linear.u.size();
    if (steps < 2 || f_traj.size() != steps || g_traj.size() != steps)
        throw std::invalid_argument("simulate_bar_system: misaligned inputs");
    const GridSpec grid = linear.u.states.front().grid;
    const int n = grid.ell;
    const double dt = linear.u.times[1] - linear.u.times[0];
    const double guard = 0.1 * grid.eps() * grid.eps() / params.max_mu();
    if (dt > guard * (1.0 + 1e-12))
        throw std::invalid_argument("simulate_bar_system: dt violates stability guard");

    FieldTriple out;
    out.u.times = out.v.times = out.w.times = linear.u.times;
    out.u.states.emplace_back(grid);
    out.v.states.emplace_back(grid);
    out.w.states.emplace_back(grid);

    const double inv_eps2 = static_cast<double>(n) * static_cast<double>(n);
    LatticeField ub(grid), vb(grid), wb(grid);
    LatticeField fu(grid), fv(grid), fw(grid);  // step forcing
    std::array<LatticeField, 3> y{ub, vb, wb}, k1{ub, vb, wb}, k2{ub, vb, wb}, k3{ub, vb, wb},
        k4{ub, vb, wb}, tmp{ub, vb, wb};

    auto rhs = [&](const std::array<LatticeField, 3>& in, const LatticeField& f,
                   const LatticeField& g, std::array<LatticeField, 3>& d) {
        for (int i = 0; i < n; ++i) {
            const int ip = (i + 1) % n, im = (i + n - 1) % n;
            const double lu = ((in[0][ip] - in[0][i]) - (in[0][i] - in[0][im])) * inv_eps2;
            const double lv = ((in[1][ip] - in[1][i]) - (in[1][i] - in[1][im])) * inv_eps2;
            const double lw = ((in[2][ip] - in[2][i]) - (in[2][i] - in[2][im])) * inv_eps2;
            d[0][i] = params.mu_S * lu - f[i] * in[0][i] - g[i] * in[1][i] + fu[i];
            d[1][i] = params.mu_I * lv + f[i] * in[0][i] + (g[i] - alpha[i]) * in[1][i] + fv[i];
            d[2][i] = params.mu_R * lw + alpha[i] * in[1][i] + fw[i];
        }
    };
    auto blend = [&](const std::array<LatticeField, 3>& base, double c,
                     const std::array<LatticeField, 3>& dir, std::array<LatticeField, 3>& dst) {
        for (int comp = 0; comp < 3; ++comp)
            for (int i = 0; i < n; ++i) dst[comp][i] = base[comp][i] + c * dir[comp][i];
    };

    LatticeField f_mid(grid), g_mid(grid);
    for (std::size_t k = 0; k + 1 < steps; ++k) {
        const LatticeField& f0 = f_traj.states[k];
        const LatticeField& f1 = f_traj.states[k + 1];
        const LatticeField& g0 = g_traj.states[k];
        const LatticeField& g1 = g_traj.states[k + 1];
        for (int i = 0; i < n; ++i) {
            f_mid[i] = 0.5 * (f0[i] + f1[i]);
            g_mid[i] = 0.5 * (g0[i] + g1[i]);
        }
        // Stochastic forcing frozen at the step start.
        const LatticeField& lu = linear.u.states[k];
        const LatticeField& lv = linear.v.states[k];
        for (int i = 0; i < n; ++i) {
            fu[i] = -f0[i] * lu[i] - g0[i] * lv[i];
            fv[i] = f0[i] * lu[i] + (g0[i] - alpha[i]) * lv[i];
            fw[i] = alpha[i] * lv[i];
        }

        rhs(y, f0, g0, k1);
        blend(y, 0.5 * dt, k1, tmp);
        rhs(tmp, f_mid, g_mid, k2);
        blend(y, 0.5 * dt, k2, tmp);
        rhs(tmp, f_mid, g_mid, k3);
        blend(y, dt, k3, tmp);
        rhs(tmp, f1, g1, k4);
        for (int comp = 0; comp < 3; ++comp)
            for (int i = 0; i < n; ++i)
                y[comp][i] += dt / 6.0 * (k1[comp][i] + 2.0 * k2[comp][i] + 2.0 * k3[comp][i] +
                                          k4[comp][i]);

        out.u.states.push_back(y[0]);
        out.v.states.push_back(y[1]);
        out.w.states.push_back(y[2]);
    }
    return out;
}

/// Componentwise sum of the linear and forced parts.
inline Trajectory<FluctuationState> combine(const FieldTriple& linear, const FieldTriple& bar) {
    if (linear.u.size() != bar.u.size())
        throw std::invalid_argument("combine: misaligned trajectories");
    Trajectory<FluctuationState> out;
    out.times = linear.u.times;
    for (std::size_t k = 0; k < linear.u.size(); ++k) {
        if (std::abs(linear.u.times[k] - bar.u.times[k]) > 1e-12)
            throw std::invalid_argument("combine: sample times differ");
        FluctuationState st(linear.u.states[k].grid);
        st.U = linear.u.states[k] + bar.u.states[k];
        st.V = linear.v.states[k] + bar.v.states[k];
        st.W = linear.w.states[k] + bar.w.states[k];
        out.states.push_back(std::move(st));
    }
    return out;
}

/// Mild-solution variance of the stochastic convolution:
/// Var<u(t), phi> = int_0^t [ <beta s i / a, psi_r^2>
///                          + 2 mu <s, (grad- psi_r)^2> ] dr,
/// psi_r = T_eps(mu (t - r)) phi, by trapezoid over the coefficient samples.
inline double limit_cov_functional(const LatticeField& phi, const Trajectory<SIRState>& coeffs,
                                   const ModelParams& params, double mu, double t,
                                   const SpectralBasis& basis) {
    if (t < 0.0 || t > coeffs.times.back() + 1e-12)
        throw std::invalid_argument("limit_cov_functional: t outside trajectory");
    const GridSpec grid = basis.grid();
    const int n = grid.ell;

    std::size_t k_end = 0;
    while (k_end + 1 < coeffs.size() && coeffs.times[k_end + 1] <= t + 1e-12) ++k_end;

    std::vector<double> integrand(k_end + 1);
    for (std::size_t k = 0; k <= k_end; ++k) {
        const double r = coeffs.times[k];
        LatticeField psi_r = semigroup_apply(mu * (t - r), 1.0, phi, basis);
        LatticeField gm = grad_minus(psi_r);
        const SIRState& st = coeffs.states[k];
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            const double a = st.S[i] + st.I[i] + st.R[i];
            const double reaction = (a > 0.0) ? params.beta[i] * st.S[i] * st.I[i] / a : 0.0;
            acc += reaction * psi_r[i] * psi_r[i];
            acc += 2.0 * mu * st.S[i] * gm[i] * gm[i];
        }
        integrand[k] = acc * grid.eps();
    }
    double total = 0.0;
    for (std::size_t k = 0; k + 1 <= k_end; ++k)
        total += 0.5 * (integrand[k] + integrand[k + 1]) * (coeffs.times[k + 1] - coeffs.times[k]);
    return total;
}

/// Weak residual of the combined system against a test field, with the
/// trapezoid quadrature error estimate that defines the scheme tolerance.
struct WeakResidual {
    double residual = 0.0;
    double tolerance = 0.0;  // second-difference trapezoid error estimate
};

/// Residual of component `comp` (0=U, 1=V, 2=W) of the combined system:
///   <Y_c(T), phi> - int_0^T <drift_c(Y), phi> dr - <M_c(T), phi>.
inline WeakResidual weak_residual(const Trajectory<FluctuationState>& combined,
                                  const MartingaleFields& mart,
                                  const Trajectory<LatticeField>& f_traj,
                                  const Trajectory<LatticeField>& g_traj,
                                  const LatticeField& alpha, const ModelParams& params,
                                  const LatticeField& phi, int comp) {
    const std::size_t steps = combined.size();
    const GridSpec grid = phi.grid;
    const int n = grid.ell;
    const LatticeField lap_phi = laplacian(phi);

    std::vector<double> integrand(steps);
    for (std::size_t k = 0; k < steps; ++k) {
        const FluctuationState& y = combined.states[k];
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            const double f = f_traj.states[k][i];
            const double g = g_traj.states[k][i];
            double drift;
            switch (comp) {
                case 0:
                    drift = params.mu_S * lap_phi[i] * y.U[i] -
                            (f * y.U[i] + g * y.V[i]) * phi[i];
                    break;
                case 1:
                    drift = params.mu_I * lap_phi[i] * y.V[i] +
                            (f * y.U[i] + (g - alpha[i]) * y.V[i]) * phi[i];
                    break;
                default:
                    drift = params.mu_R * lap_phi[i] * y.W[i] + alpha[i] * y.V[i] * phi[i];
            }
            acc += drift;
        }
        integrand[k] = acc * grid.eps();
    }

    double quad = 0.0;
    for (std::size_t k = 0; k + 1 < steps; ++k)
        quad += 0.5 * (integrand[k] + integrand[k + 1]) * (combined.times[k + 1] - combined.times[k]);

    const FluctuationState& yT = combined.states.back();
    const LatticeField* field = (comp == 0) ? &yT.U : (comp == 1) ? &yT.V : &yT.W;
    const Trajectory<LatticeField>* m =
        (comp == 0) ? &mart.M_S : (comp == 1) ? &mart.M_I : &mart.M_R;

    WeakResidual res;
    res.residual = inner(*field, phi) - quad - inner(m->states.back(), phi);

    // Composite-trapezoid error estimate: (dt/12) * sum |second difference|.
    const double dt = combined.times[1] - combined.times[0];
    double second_diff = 0.0;
    for (std::size_t k = 1; k + 1 < steps; ++k)
        second_diff += std::abs(integrand[k + 1] - 2.0 * integrand[k] + integrand[k - 1]);
    res.tolerance = dt / 12.0 * second_diff + 1e-12;
    return res;
}

}  // namespace sirlab
