/// @file jump.hpp
/// @brief Exact stochastic simulation of the density-dependent jump process.
///
/// Counts per compartment per site evolve by unit jumps with rates (in count
/// units; the population scale N cancels):
///   infection at i:  beta_i n_S n_I / (n_S + n_I + n_R)   (0 if the site is empty)
///   recovery at i:   alpha_i n_I
///   migration J,i,+/-: mu_J eps^-2 n_J[i] to each periodic neighbor
///
/// Channel layout (part of the reproducibility contract): 8 channels per
/// site, site-major, offsets
///   0 infection, 1 recovery, 2 S+, 3 S-, 4 I+, 5 I-, 6 R+, 7 R-,
/// so channel index = 8*site + offset. Every event consumes exactly two
/// uniforms, waiting time first (-log(1-u)/Lambda), then the categorical
/// channel choice by cumulative scan. Direct method with a linear scan:
/// 8*ell channels stay small at desk scale, and any internal speedup must
/// keep this consumption order.

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sirlab/deterministic.hpp"
#include "sirlab/grid.hpp"
#include "sirlab/rng.hpp"

namespace sirlab {

/// Integer counts per compartment per site at population scale N.
/// Counts are 64-bit; N up to 1e9 stays clear of overflow, rates are
/// computed in floating point. Every channel conserves the total count.
struct JumpState {
    GridSpec grid;
    std::int64_t N = 0;  ///< population scale: proportions are counts / N
    std::vector<std::int64_t> n_S, n_I, n_R;

    JumpState() = default;
    JumpState(GridSpec g, std::int64_t scale)
        : grid(g), N(scale), n_S(g.ell, 0), n_I(g.ell, 0), n_R(g.ell, 0) {
        if (scale <= 0) throw std::invalid_argument("JumpState: N must be positive");
    }

    std::int64_t total() const {
        std::int64_t t = 0;
        for (int i = 0; i < grid.ell; ++i) t += n_S[i] + n_I[i] + n_R[i];
        return t;
    }
};

enum class Compartment { S, I, R };

struct EventChannel {
    enum class Kind { infection, recovery, migration };
    Kind kind = Kind::infection;
    int site = 0;
    Compartment compartment = Compartment::S;  // migration only
    int direction = +1;                        // migration only: +1 or -1
};

inline int channel_count(GridSpec grid) { return 8 * grid.ell; }

/// Decode a flat channel index into its description.
inline EventChannel decode_channel(int index, GridSpec grid) {
    if (index < 0 || index >= channel_count(grid))
        throw std::out_of_range("decode_channel: index out of range");
    EventChannel ch;
    ch.site = index / 8;
    const int off = index % 8;
    switch (off) {
        case 0: ch.kind = EventChannel::Kind::infection; break;
        case 1: ch.kind = EventChannel::Kind::recovery; break;
        default:
            ch.kind = EventChannel::Kind::migration;
            ch.compartment = static_cast<Compartment>((off - 2) / 2);
            ch.direction = (off % 2 == 0) ? +1 : -1;
    }
    return ch;
}

/// All 8*ell channel rates in the fixed layout, in count units.
inline void channel_rates_into(const JumpState& state, const ModelParams& params,
                               std::vector<double>& rates) {
    const int n = state.grid.ell;
    const double inv_eps2 = static_cast<double>(n) * static_cast<double>(n);
    rates.resize(static_cast<std::size_t>(8) * n);
    for (int i = 0; i < n; ++i) {
        const double ns = static_cast<double>(state.n_S[i]);
        const double ni = static_cast<double>(state.n_I[i]);
        const double nr = static_cast<double>(state.n_R[i]);
        const double tot = ns + ni + nr;
        double* r = rates.data() + static_cast<std::size_t>(8) * i;
        r[0] = (tot > 0.0) ? params.beta[i] * ns * ni / tot : 0.0;
        r[1] = params.alpha[i] * ni;
        r[2] = r[3] = params.mu_S * inv_eps2 * ns;
        r[4] = r[5] = params.mu_I * inv_eps2 * ni;
        r[6] = r[7] = params.mu_R * inv_eps2 * nr;
    }
}

inline std::vector<double> channel_rates(const JumpState& state, const ModelParams& params) {
    std::vector<double> rates;
    channel_rates_into(state, params, rates);
    return rates;
}

/// Apply one event in place. Throws when the channel cannot fire (zero rate
/// at this state, e.g. migrating from an empty site).
inline void apply_event(JumpState& state, EventChannel ch) {
    const int n = state.grid.ell;
    const int i = ch.site;
    auto counts_of = [&](Compartment c) -> std::vector<std::int64_t>& {
        switch (c) {
            case Compartment::S: return state.n_S;
            case Compartment::I: return state.n_I;
            default: return state.n_R;
        }
    };
    switch (ch.kind) {
        case EventChannel::Kind::infection:
            if (state.n_S[i] <= 0 || state.n_I[i] <= 0)
                throw std::logic_error("apply_event: infection channel has zero rate at site " +
                                       std::to_string(i));
            state.n_S[i] -= 1;
            state.n_I[i] += 1;
            break;
        case EventChannel::Kind::recovery:
            if (state.n_I[i] <= 0)
                throw std::logic_error("apply_event: recovery channel has zero rate at site " +
                                       std::to_string(i));
            state.n_I[i] -= 1;
            state.n_R[i] += 1;
            break;
        case EventChannel::Kind::migration: {
            std::vector<std::int64_t>& c = counts_of(ch.compartment);
            if (c[i] <= 0)
                throw std::logic_error("apply_event: migration from empty site " + std::to_string(i));
            const int j = (ch.direction > 0) ? (i + 1) % n : (i + n - 1) % n;
            c[i] -= 1;
            c[j] += 1;
            break;
        }
    }
}

/// One simulated event, kept for the optional JSONL event log.
struct EventRecord {
    double t = 0.0;
    EventChannel channel;
};

/// Exact simulation (direct method) over [0, sample_times.back()]; state is
/// recorded by last-value interpolation at each sample time. Deterministic
/// given (seed, inputs). Optionally records the full event log and asserts
/// count conservation after every event.
inline Trajectory<JumpState> gillespie(const JumpState& state0, const ModelParams& params,
                                       const std::vector<double>& sample_times, std::uint64_t seed,
                                       std::vector<EventRecord>* event_log = nullptr,
                                       bool check_conservation = false) {
    if (sample_times.empty()) throw std::invalid_argument("gillespie: no sample times");
    for (std::size_t k = 0; k + 1 < sample_times.size(); ++k)
        if (sample_times[k] > sample_times[k + 1])
            throw std::invalid_argument("gillespie: sample times must be sorted");
    if (sample_times.front() < 0.0)
        throw std::invalid_argument("gillespie: sample times must be nonnegative");

    Rng rng(seed);
    JumpState state = state0;
    const std::int64_t conserved_total = state.total();
    std::vector<double> rates;
    Trajectory<JumpState> traj;
    traj.times = sample_times;
    traj.states.reserve(sample_times.size());

    double t = 0.0;
    std::size_t next_sample = 0;
    while (next_sample < sample_times.size()) {
        channel_rates_into(state, params, rates);
        double total_rate = 0.0;
        for (double r : rates) total_rate += r;
        if (!std::isfinite(total_rate))
            throw std::runtime_error("gillespie: total rate overflowed at t = " + std::to_string(t));

        double t_next;
        if (total_rate <= 0.0) {
            t_next = std::numeric_limits<double>::infinity();
        } else {
            t_next = t + rng.exponential() / total_rate;
        }

        // Emit samples that fall strictly before the next event.
        while (next_sample < sample_times.size() && sample_times[next_sample] < t_next) {
            traj.states.push_back(state);
            ++next_sample;
        }
        if (next_sample >= sample_times.size()) break;
        if (!std::isfinite(t_next)) break;

        // Categorical channel choice, cumulative linear scan.
        const double target = rng.uniform() * total_rate;
        double acc = 0.0;
        int chosen = static_cast<int>(rates.size()) - 1;
        for (std::size_t c = 0; c < rates.size(); ++c) {
            acc += rates[c];
            if (target < acc) {
                chosen = static_cast<int>(c);
                break;
            }
        }
        apply_event(state, decode_channel(chosen, state.grid));
        if (check_conservation && state.total() != conserved_total)
            throw std::logic_error("gillespie: total count not conserved");
        if (event_log) event_log->push_back({t_next, decode_channel(chosen, state.grid)});
        t = t_next;
    }
    return traj;
}

/// Counts divided by the population scale.
inline SIRState to_proportions(const JumpState& state) {
    if (state.N <= 0) throw std::invalid_argument("to_proportions: N must be positive");
    SIRState out(state.grid);
    const double inv = 1.0 / static_cast<double>(state.N);
    for (int i = 0; i < state.grid.ell; ++i) {
        out.S[i] = static_cast<double>(state.n_S[i]) * inv;
        out.I[i] = static_cast<double>(state.n_I[i]) * inv;
        out.R[i] = static_cast<double>(state.n_R[i]) * inv;
    }
    return out;
}

/// Nearest-integer counts N * proportions; the per-site rounding error is
/// O(1/N) and vanishes in the fluctuation scaling.
inline JumpState from_proportions(const SIRState& st, std::int64_t N) {
    JumpState out(st.grid(), N);
    for (int i = 0; i < st.grid().ell; ++i) {
        out.n_S[i] = std::llround(static_cast<double>(N) * st.S[i]);
        out.n_I[i] = std::llround(static_cast<double>(N) * st.I[i]);
        out.n_R[i] = std::llround(static_cast<double>(N) * st.R[i]);
        if (out.n_S[i] < 0 || out.n_I[i] < 0 || out.n_R[i] < 0)
            throw std::invalid_argument("from_proportions: negative proportions");
    }
    return out;
}

}  // namespace sirlab
