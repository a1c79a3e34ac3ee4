/// @file io.hpp
/// @brief CSV/JSON/JSONL writers with a reproducible rendering contract.
///
/// Every floating-point value is rendered with "%.17g" so doubles round-trip
/// exactly and repeated runs diff byte-identically. Wall-clock data never
/// goes into CSV outputs (only into the manifest).

#pragma once

#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sirlab/deterministic.hpp"
#include "sirlab/fluctuation.hpp"
#include "sirlab/grid.hpp"
#include "sirlab/jump.hpp"
#include "sirlab/spde.hpp"
#include "sirlab/spectral.hpp"

namespace sirlab {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::string format_g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open output file " + path.string());
    return out;
}

/// LatticeField as CSV rows "site_index,x,value".
inline void write_field_csv(const std::filesystem::path& path, const LatticeField& f) {
    std::ofstream out = open_output(path);
    out << "site_index,x,value\n";
    for (int i = 0; i < f.size(); ++i)
        out << i << ',' << format_g17(f.grid.site(i)) << ',' << format_g17(f[i]) << '\n';
}

/// LatticeField as a flat JSON array of values.
inline void write_field_json(const std::filesystem::path& path, const LatticeField& f) {
    nlohmann::json arr = nlohmann::json::array();
    for (double v : f.values) arr.push_back(v);
    std::ofstream out = open_output(path);
    out << arr.dump() << '\n';
}

/// SpectralCoeffs as CSV rows "m,kind,coeff".
inline void write_coeffs_csv(const std::filesystem::path& path, const SpectralCoeffs& c,
                             const SpectralBasis& basis) {
    std::ofstream out = open_output(path);
    out << "m,kind,coeff\n";
    for (int a = 0; a < basis.n_modes(); ++a) {
        const ModeIndex mode = basis.mode(a);
        out << mode.m << ',' << (mode.kind == ModeKind::cos ? "cos" : "sin") << ','
            << format_g17(c.coeffs[static_cast<std::size_t>(a)]) << '\n';
    }
}

/// Deterministic trajectory as "t,site,S,I,R".
inline void write_sir_trajectory_csv(const std::filesystem::path& path,
                                     const Trajectory<SIRState>& traj) {
    std::ofstream out = open_output(path);
    out << "t,site,S,I,R\n";
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const SIRState& st = traj.states[k];
        for (int i = 0; i < st.grid().ell; ++i)
            out << format_g17(traj.times[k]) << ',' << i << ',' << format_g17(st.S[i]) << ','
                << format_g17(st.I[i]) << ',' << format_g17(st.R[i]) << '\n';
    }
}

/// Jump ensemble as "replica,t,site,nS,nI,nR", replicas in index order.
inline void write_jump_ensemble_csv(const std::filesystem::path& path,
                                    const std::vector<Trajectory<JumpState>>& replicas) {
    std::ofstream out = open_output(path);
    out << "replica,t,site,nS,nI,nR\n";
    for (std::size_t r = 0; r < replicas.size(); ++r)
        for (std::size_t k = 0; k < replicas[r].size(); ++k) {
            const JumpState& st = replicas[r].states[k];
            for (int i = 0; i < st.grid.ell; ++i)
                out << r << ',' << format_g17(replicas[r].times[k]) << ',' << i << ','
                    << st.n_S[i] << ',' << st.n_I[i] << ',' << st.n_R[i] << '\n';
        }
}

/// Fluctuation ensemble as "replica,t,site,U,V,W".
inline void write_fluctuation_ensemble_csv(
    const std::filesystem::path& path,
    const std::vector<Trajectory<FluctuationState>>& replicas) {
    std::ofstream out = open_output(path);
    out << "replica,t,site,U,V,W\n";
    for (std::size_t r = 0; r < replicas.size(); ++r)
        for (std::size_t k = 0; k < replicas[r].size(); ++k) {
            const FluctuationState& st = replicas[r].states[k];
            for (int i = 0; i < st.grid().ell; ++i)
                out << r << ',' << format_g17(replicas[r].times[k]) << ',' << i << ','
                    << format_g17(st.U[i]) << ',' << format_g17(st.V[i]) << ','
                    << format_g17(st.W[i]) << '\n';
        }
}

/// Combined SPDE ensemble as "replica,t,site,u,v,w,ubar,vbar,wbar".
struct SpdePathOutput {
    FieldTriple linear;
    FieldTriple bar;
};

inline void write_spde_ensemble_csv(const std::filesystem::path& path,
                                    const std::vector<SpdePathOutput>& replicas) {
    std::ofstream out = open_output(path);
    out << "replica,t,site,u,v,w,ubar,vbar,wbar\n";
    for (std::size_t r = 0; r < replicas.size(); ++r) {
        const SpdePathOutput& p = replicas[r];
        for (std::size_t k = 0; k < p.linear.u.size(); ++k) {
            const GridSpec g = p.linear.u.states[k].grid;
            for (int i = 0; i < g.ell; ++i)
                out << r << ',' << format_g17(p.linear.u.times[k]) << ',' << i << ','
                    << format_g17(p.linear.u.states[k][i]) << ','
                    << format_g17(p.linear.v.states[k][i]) << ','
                    << format_g17(p.linear.w.states[k][i]) << ','
                    << format_g17(p.bar.u.states[k][i]) << ','
                    << format_g17(p.bar.v.states[k][i]) << ','
                    << format_g17(p.bar.w.states[k][i]) << '\n';
        }
    }
}

/// Dense symmetric matrix as "i,j,value" triplets.
inline void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
    std::ofstream out = open_output(path);
    out << "i,j,value\n";
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            out << r << ',' << c << ',' << format_g17(m(r, c)) << '\n';
}

/// Event log as JSONL: {"t": ..., "kind": ..., "site": ...,
/// "compartment": ..., "direction": ...}.
inline void write_event_log_jsonl(const std::filesystem::path& path,
                                  const std::vector<EventRecord>& events) {
    std::ofstream out = open_output(path);
    for (const EventRecord& e : events) {
        nlohmann::json row;
        row["t"] = e.t;
        switch (e.channel.kind) {
            case EventChannel::Kind::infection: row["kind"] = "infection"; break;
            case EventChannel::Kind::recovery: row["kind"] = "recovery"; break;
            case EventChannel::Kind::migration: row["kind"] = "migration"; break;
        }
        row["site"] = e.channel.site;
        if (e.channel.kind == EventChannel::Kind::migration) {
            row["compartment"] = (e.channel.compartment == Compartment::S)   ? "S"
                                 : (e.channel.compartment == Compartment::I) ? "I"
                                                                             : "R";
            row["direction"] = (e.channel.direction > 0) ? "+" : "-";
        }
        out << row.dump() << '\n';
    }
}

}  // namespace sirlab
