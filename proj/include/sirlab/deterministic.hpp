/// @file deterministic.hpp
/// @brief Lattice SIR reaction-diffusion system and its RK4 integrator.
///
/// State per site: proportions (S, I, R) with incidence beta*S*I/A,
/// A = S+I+R, recovery alpha*I, and per-compartment diffusion mu_J Laplacian.
/// The incidence uses the convention 0/0 := 0 so the right-hand side is total
/// even at empty sites. Fixed-step classical RK4 keeps the time grid aligned
/// across the jump and fluctuation pipelines; the step guard
/// h <= 0.1 eps^2 / max(mu) reflects the explicit-scheme stiffness of the
/// discrete Laplacian (cost grows like ell^2 under refinement).

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sirlab/grid.hpp"

namespace sirlab {

struct SIRState {
    LatticeField S, I, R;

    SIRState() = default;
    explicit SIRState(GridSpec g) : S(g), I(g), R(g) {}
    GridSpec grid() const { return S.grid; }
};

/// Infection/recovery rate fields (projected from continuous periodic
/// presets) plus strictly positive diffusivities.
struct ModelParams {
    LatticeField beta;   ///< infection rate per site, >= 0
    LatticeField alpha;  ///< recovery rate per site, >= 0
    double mu_S = 0.0, mu_I = 0.0, mu_R = 0.0;

    void validate() const {
        require_same_grid(beta, alpha);
        for (double b : beta.values)
            if (b < 0.0) throw std::invalid_argument("params: beta must be nonnegative");
        for (double a : alpha.values)
            if (a < 0.0) throw std::invalid_argument("params: alpha must be nonnegative");
        if (mu_S <= 0.0 || mu_I <= 0.0 || mu_R <= 0.0)
            throw std::invalid_argument("params: diffusivities must be strictly positive");
    }
    double max_mu() const { return std::max({mu_S, mu_I, mu_R}); }
    double beta_bar() const { return *std::max_element(beta.values.begin(), beta.values.end()); }
};

template <class State>
struct Trajectory {
    std::vector<double> times;
    std::vector<State> states;

    std::size_t size() const { return times.size(); }
    const State& at(std::size_t k) const { return states[k]; }
};

/// Numeric constants of the smooth periodic preset family:
///   beta(x) = b0 (1 + b_mod cos 2 pi x),  alpha(x) = a0 (1 + a_mod sin 2 pi x),
///   s(0,x) = s0_base + s0_amp cos 2 pi x,  i(0,x) = i0_base + i0_amp sin 2 pi x,
///   r(0,x) = 1 - s(0,x) - i(0,x).
/// The exact constants live in config files, not here.
struct PresetSpec {
    double b0 = 0.0, a0 = 0.0;
    double b_mod = 0.5, a_mod = 0.5;
    double s0_base = 0.0, s0_amp = 0.0;
    double i0_base = 0.0, i0_amp = 0.0;
    double mu_S = 0.0, mu_I = 0.0, mu_R = 0.0;
};

inline ModelParams make_params(const PresetSpec& p, GridSpec grid) {
    const double twopi = 6.283185307179586476925286766559;
    ModelParams params;
    params.beta =
        project([&](double x) { return p.b0 * (1.0 + p.b_mod * std::cos(twopi * x)); }, grid);
    params.alpha =
        project([&](double x) { return p.a0 * (1.0 + p.a_mod * std::sin(twopi * x)); }, grid);
    params.mu_S = p.mu_S;
    params.mu_I = p.mu_I;
    params.mu_R = p.mu_R;
    params.validate();
    return params;
}

inline SIRState make_initial_state(const PresetSpec& p, GridSpec grid) {
    const double twopi = 6.283185307179586476925286766559;
    auto s0 = [&](double x) { return p.s0_base + p.s0_amp * std::cos(twopi * x); };
    auto i0 = [&](double x) { return p.i0_base + p.i0_amp * std::sin(twopi * x); };
    SIRState st(grid);
    st.S = project(s0, grid);
    st.I = project(i0, grid);
    st.R = project([&](double x) { return 1.0 - s0(x) - i0(x); }, grid);
    return st;
}

/// Right-hand side of the lattice system. Out-of-place variant of the
/// integrator core; degenerate sites (A = 0) contribute no incidence.
inline void reaction_rhs_into(const SIRState& state, const ModelParams& params, SIRState& out) {
    const int n = state.grid().ell;
    const double inv_eps2 = static_cast<double>(n) * static_cast<double>(n);
    for (int i = 0; i < n; ++i) {
        const int ip = (i + 1) % n;
        const int im = (i + n - 1) % n;
        const double s = state.S[i], v = state.I[i], r = state.R[i];
        const double a = s + v + r;
        const double inc = (a > 0.0) ? params.beta[i] * s * v / a : 0.0;
        const double rec = params.alpha[i] * v;
        const double lap_s = ((state.S[ip] - s) - (s - state.S[im])) * inv_eps2;
        const double lap_i = ((state.I[ip] - v) - (v - state.I[im])) * inv_eps2;
        const double lap_r = ((state.R[ip] - r) - (r - state.R[im])) * inv_eps2;
        out.S[i] = params.mu_S * lap_s - inc;
        out.I[i] = params.mu_I * lap_i + inc - rec;
        out.R[i] = params.mu_R * lap_r + rec;
    }
}

inline SIRState reaction_rhs(const SIRState& state, const ModelParams& params) {
    SIRState out(state.grid());
    reaction_rhs_into(state, params, out);
    return out;
}

/// Fixed-step schedule with records on exact step multiples.
struct OdeSchedule {
    double h = 0.0;
    long n_steps = 0;
    long record_every = 1;

    double horizon() const { return h * static_cast<double>(n_steps); }
};

/// Largest admissible explicit step for this grid and parameter set.
inline double max_stable_step(GridSpec grid, const ModelParams& params) {
    return 0.1 * grid.eps() * grid.eps() / params.max_mu();
}

/// Schedule with n_records equal intervals over [0, T] and the largest step
/// h <= h_cap that divides the record interval exactly.
inline OdeSchedule make_schedule(double T, double h_cap, long n_records) {
    if (T <= 0.0 || h_cap <= 0.0 || n_records < 1)
        throw std::invalid_argument("make_schedule: T, h_cap, n_records must be positive");
    const double interval = T / static_cast<double>(n_records);
    const long per = std::max(1L, static_cast<long>(std::ceil(interval / h_cap - 1e-12)));
    OdeSchedule s;
    s.record_every = per;
    s.n_steps = per * n_records;
    s.h = T / static_cast<double>(s.n_steps);
    return s;
}

namespace detail {

inline void axpy_state(SIRState& y, double c, const SIRState& x) {
    const int n = y.grid().ell;
    for (int i = 0; i < n; ++i) {
        y.S[i] += c * x.S[i];
        y.I[i] += c * x.I[i];
        y.R[i] += c * x.R[i];
    }
}

inline bool state_finite(const SIRState& st) {
    double acc = 0.0;
    for (int i = 0; i < st.grid().ell; ++i) acc += st.S[i] + st.I[i] + st.R[i];
    return std::isfinite(acc);
}

}  // namespace detail

/// Classical RK4 with fixed step; samples recorded every record_every steps
/// (including t = 0). Throws if the step guard is violated or the state
/// leaves the finite range.
inline Trajectory<SIRState> integrate_ode(const SIRState& state0, const ModelParams& params,
                                          const OdeSchedule& schedule) {
    params.validate();
    const GridSpec grid = state0.grid();
    if (!(params.beta.grid == grid)) throw std::invalid_argument("integrate_ode: grid mismatch");
    const double h_max = max_stable_step(grid, params);
    if (schedule.h > h_max * (1.0 + 1e-12))
        throw std::invalid_argument("integrate_ode: step " + std::to_string(schedule.h) +
                                    " violates stability guard h <= 0.1 eps^2 / max(mu) = " +
                                    std::to_string(h_max));

    Trajectory<SIRState> traj;
    traj.times.reserve(static_cast<std::size_t>(schedule.n_steps / schedule.record_every) + 1);
    traj.times.push_back(0.0);
    traj.states.push_back(state0);

    SIRState y = state0;
    SIRState k1(grid), k2(grid), k3(grid), k4(grid), tmp(grid);
    const double h = schedule.h;
    for (long step = 1; step <= schedule.n_steps; ++step) {
        reaction_rhs_into(y, params, k1);
        tmp = y;
        detail::axpy_state(tmp, 0.5 * h, k1);
        reaction_rhs_into(tmp, params, k2);
        tmp = y;
        detail::axpy_state(tmp, 0.5 * h, k2);
        reaction_rhs_into(tmp, params, k3);
        tmp = y;
        detail::axpy_state(tmp, h, k3);
        reaction_rhs_into(tmp, params, k4);
        detail::axpy_state(y, h / 6.0, k1);
        detail::axpy_state(y, h / 3.0, k2);
        detail::axpy_state(y, h / 3.0, k3);
        detail::axpy_state(y, h / 6.0, k4);

        if (step % schedule.record_every == 0) {
            if (!detail::state_finite(y))
                throw std::runtime_error("integrate_ode: non-finite state at t = " +
                                         std::to_string(static_cast<double>(step) * h));
            traj.times.push_back(static_cast<double>(step) * h);
            traj.states.push_back(y);
        }
    }
    return traj;
}

/// f_eps = beta S (S+R) / A^2 and g_eps = beta I (I+R) / A^2. Requires the
/// positive total-mass floor; sites with A below 1e-12 are an error because
/// the fluctuation pipeline divides by A^2.
inline std::pair<LatticeField, LatticeField> coefficient_fields(const SIRState& state,
                                                                const ModelParams& params) {
    const int n = state.grid().ell;
    LatticeField f(state.grid()), g(state.grid());
    for (int i = 0; i < n; ++i) {
        const double s = state.S[i], v = state.I[i], r = state.R[i];
        const double a = s + v + r;
        if (a < 1e-12)
            throw std::domain_error("coefficient_fields: total mass below floor at site " +
                                    std::to_string(i));
        f[i] = params.beta[i] * s * (s + r) / (a * a);
        g[i] = params.beta[i] * v * (v + r) / (a * a);
    }
    return {f, g};
}

/// Minimum of A = S+I+R over all recorded times and sites. The caller checks
/// it against assumption_floor below.
inline double lower_bound_certificate(const Trajectory<SIRState>& traj) {
    double m = std::numeric_limits<double>::infinity();
    for (const SIRState& st : traj.states)
        for (int i = 0; i < st.grid().ell; ++i)
            m = std::min(m, st.S[i] + st.I[i] + st.R[i]);
    return m;
}

/// The explicit lower-bound constant c_T = c exp(-beta_bar T): total mass
/// stays above it whenever inf_x S(0,x) >= c.
inline double assumption_floor(const ModelParams& params, double c, double T) {
    return c * std::exp(-params.beta_bar() * T);
}

/// Sup-norm distance between solutions on two grids, the fine one standing
/// in for the PDE. Step functions are compared at the common sample points
/// x_j = (j + 1/2) / (ell_coarse * ell_fine); the error is the max over
/// recorded times of the sum over compartments of the pointwise sup.
struct RefineResult {
    double error = 0.0;
    Trajectory<SIRState> coarse, fine;
};

inline int cell_of(double x, GridSpec grid) {
    const double scaled = x * static_cast<double>(grid.ell) + 0.5;
    long idx = static_cast<long>(std::floor(scaled));
    idx %= grid.ell;
    if (idx < 0) idx += grid.ell;
    return static_cast<int>(idx);
}

inline RefineResult refine_compare(const PresetSpec& preset, int ell_coarse, int ell_fine, double T,
                                   long n_records = 10) {
    GridSpec gc = make_grid(ell_coarse);
    GridSpec gf = make_grid(ell_fine);
    ModelParams pc = make_params(preset, gc);
    ModelParams pf = make_params(preset, gf);

    RefineResult out;
    out.coarse = integrate_ode(make_initial_state(preset, gc), pc,
                               make_schedule(T, max_stable_step(gc, pc), n_records));
    out.fine = integrate_ode(make_initial_state(preset, gf), pf,
                             make_schedule(T, max_stable_step(gf, pf), n_records));

    const long n_pts = static_cast<long>(ell_coarse) * ell_fine;
    double err = 0.0;
    for (std::size_t k = 0; k < out.coarse.size(); ++k) {
        const SIRState& a = out.coarse.states[k];
        const SIRState& b = out.fine.states[k];
        double ds = 0.0, di = 0.0, dr = 0.0;
        for (long j = 0; j < n_pts; ++j) {
            const double x = (static_cast<double>(j) + 0.5) / static_cast<double>(n_pts);
            const int ic = cell_of(x, gc);
            const int jf = cell_of(x, gf);
            ds = std::max(ds, std::abs(a.S[ic] - b.S[jf]));
            di = std::max(di, std::abs(a.I[ic] - b.I[jf]));
            dr = std::max(dr, std::abs(a.R[ic] - b.R[jf]));
        }
        err = std::max(err, ds + di + dr);
    }
    out.error = err;
    return out;
}

}  // namespace sirlab
