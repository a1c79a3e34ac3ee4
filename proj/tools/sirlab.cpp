/// sirlab command line: experiment orchestration for the lattice SIR lab.
///
/// Usage: sirlab <subcommand> --config path [--out dir] [--jobs n]
///
/// Subcommands: simulate-ode, simulate-jump, fluctuations, spde, spectra,
/// verify-lln, verify-clt-fixed-eps, verify-bracket-refinement, verify-all.
///
/// Exit codes: 0 success / all checks pass; 1 unexpected runtime error;
/// 2 verification check failed; 3 unknown subcommand; 4 invalid config or
/// parameters; 5 I/O failure. SIRLAB_SEED overrides the config master_seed.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "sirlab/config.hpp"
#include "sirlab/deterministic.hpp"
#include "sirlab/fluctuation.hpp"
#include "sirlab/io.hpp"
#include "sirlab/jump.hpp"
#include "sirlab/parallel.hpp"
#include "sirlab/spde.hpp"
#include "sirlab/spectral.hpp"
#include "sirlab/stats.hpp"
#include "sirlab/verification.hpp"

namespace fs = std::filesystem;
using namespace sirlab;

namespace {

struct CliOptions {
    std::string config_path;
    std::string out_override;
    int jobs_override = -1;
    bool event_log = false;
};

fs::path prepare_output_dir(const ExperimentConfig& cfg, const CliOptions& opt) {
    fs::path dir = opt.out_override.empty() ? fs::path(cfg.output_dir) : fs::path(opt.out_override);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string());
    return dir;
}

void start_manifest(const fs::path& dir, const nlohmann::json& config_doc,
                    const ExperimentConfig& cfg, const std::vector<std::string>& outputs) {
    write_manifest(dir, make_manifest(config_doc, cfg.master_seed, cfg.replicas, outputs));
}

std::vector<double> sample_times(double T, int n_intervals) {
    std::vector<double> times;
    for (int k = 0; k <= n_intervals; ++k)
        times.push_back(T * static_cast<double>(k) / static_cast<double>(n_intervals));
    return times;
}

/// Deterministic run on the config grid, recorded at every step.
Trajectory<SIRState> config_ode_run(const ExperimentConfig& cfg) {
    GridSpec g = make_grid(cfg.ell);
    ModelParams params = make_params(cfg.preset, g);
    const long n_steps = std::max(1L, static_cast<long>(std::llround(cfg.T / cfg.h)));
    OdeSchedule sched{cfg.T / static_cast<double>(n_steps), n_steps, 1};
    return integrate_ode(make_initial_state(cfg.preset, g), params, sched);
}

int cmd_simulate_ode(const ExperimentConfig& cfg, const nlohmann::json& doc,
                     const CliOptions& opt) {
    fs::path dir = prepare_output_dir(cfg, opt);
    start_manifest(dir, doc, cfg, {"trajectory.csv"});
    Trajectory<SIRState> traj = config_ode_run(cfg);
    // Subsample to at most 51 output instants to keep the CSV reviewable.
    Trajectory<SIRState> out;
    const std::size_t stride = std::max<std::size_t>(1, (traj.size() - 1) / 50);
    for (std::size_t k = 0; k < traj.size(); k += stride) {
        out.times.push_back(traj.times[k]);
        out.states.push_back(traj.states[k]);
    }
    write_sir_trajectory_csv(dir / "trajectory.csv", out);
    std::printf("simulate-ode: wrote %zu samples to %s\n", out.size(),
                (dir / "trajectory.csv").string().c_str());
    return 0;
}

int cmd_simulate_jump(const ExperimentConfig& cfg, const nlohmann::json& doc,
                      const CliOptions& opt) {
    fs::path dir = prepare_output_dir(cfg, opt);
    std::vector<std::string> outputs{"jump.csv"};
    if (opt.event_log)
        for (int r = 0; r < cfg.replicas; ++r)
            outputs.push_back("events_r" + std::to_string(r) + ".jsonl");
    start_manifest(dir, doc, cfg, outputs);

    GridSpec g = make_grid(cfg.ell);
    ModelParams params = make_params(cfg.preset, g);
    SIRState det0 = make_initial_state(cfg.preset, g);
    const std::vector<double> times = sample_times(cfg.T, 10);

    std::vector<Trajectory<JumpState>> replicas(static_cast<std::size_t>(cfg.replicas));
    std::vector<std::vector<EventRecord>> logs(static_cast<std::size_t>(cfg.replicas));
    parallel_for_index(static_cast<std::size_t>(cfg.replicas), cfg.jobs, [&](std::size_t rep) {
        JumpState j0 = from_proportions(det0, cfg.N);
        std::vector<EventRecord>* log = opt.event_log ? &logs[rep] : nullptr;
        replicas[rep] = gillespie(j0, params, times, derive_replica_seed(cfg.master_seed, rep), log);
    });
    write_jump_ensemble_csv(dir / "jump.csv", replicas);
    if (opt.event_log)
        for (int r = 0; r < cfg.replicas; ++r)
            write_event_log_jsonl(dir / ("events_r" + std::to_string(r) + ".jsonl"),
                                  logs[static_cast<std::size_t>(r)]);
    std::printf("simulate-jump: %d replicas, N=%lld, %zu sample times\n", cfg.replicas,
                static_cast<long long>(cfg.N), times.size());
    return 0;
}

int cmd_fluctuations(const ExperimentConfig& cfg, const nlohmann::json& doc,
                     const CliOptions& opt) {
    fs::path dir = prepare_output_dir(cfg, opt);
    start_manifest(dir, doc, cfg, {"psi.csv", "ou.csv"});

    Trajectory<SIRState> det = config_ode_run(cfg);
    GridSpec g = det.states.front().grid();
    ModelParams params = make_params(cfg.preset, g);
    SIRState det0 = det.states.front();

    // Psi = sqrt(N) (jump - ode) at 11 sample instants.
    const std::vector<double> times = sample_times(cfg.T, 10);
    Trajectory<SIRState> det_sub;
    for (double t : times) {
        const std::size_t k = static_cast<std::size_t>(
            std::llround(t / (det.times[1] - det.times[0])));
        det_sub.times.push_back(det.times[k]);
        det_sub.states.push_back(det.states[k]);
    }
    std::vector<Trajectory<FluctuationState>> psis(static_cast<std::size_t>(cfg.replicas));
    parallel_for_index(static_cast<std::size_t>(cfg.replicas), cfg.jobs, [&](std::size_t rep) {
        JumpState j0 = from_proportions(det0, cfg.N);
        Trajectory<JumpState> jt =
            gillespie(j0, params, det_sub.times, derive_replica_seed(cfg.master_seed, rep));
        psis[rep] = psi(jt, det_sub, cfg.N);
    });
    write_fluctuation_ensemble_csv(dir / "psi.csv", psis);

    // Fixed-grid OU paths on the shared time grid, subsampled for output.
    OuCoefficients co = build_ou_coefficients(det, params, cfg.paper_literal_drift);
    const std::uint64_t ou_base = derive_replica_seed(cfg.master_seed, 0x0Bull << 32);
    std::vector<Trajectory<FluctuationState>> ou(static_cast<std::size_t>(cfg.replicas));
    parallel_for_index(static_cast<std::size_t>(cfg.replicas), cfg.jobs, [&](std::size_t rep) {
        Trajectory<FluctuationState> full =
            simulate_ou_fixed_eps(co, derive_replica_seed(ou_base, rep));
        Trajectory<FluctuationState> sub;
        const std::size_t stride = std::max<std::size_t>(1, (full.size() - 1) / 10);
        for (std::size_t k = 0; k < full.size(); k += stride) {
            sub.times.push_back(full.times[k]);
            sub.states.push_back(full.states[k]);
        }
        ou[rep] = std::move(sub);
    });
    write_fluctuation_ensemble_csv(dir / "ou.csv", ou);
    std::printf("fluctuations: %d psi replicas and %d OU paths\n", cfg.replicas, cfg.replicas);
    return 0;
}

int cmd_spde(const ExperimentConfig& cfg, const nlohmann::json& doc, const CliOptions& opt) {
    fs::path dir = prepare_output_dir(cfg, opt);
    start_manifest(dir, doc, cfg, {"martingales.csv", "spde.csv"});

    GridSpec g = make_grid(cfg.ell);
    SpectralBasis basis(g);
    ModelParams params = make_params(cfg.preset, g);

    // Limit coefficients from the fine surrogate, restricted to the grid.
    GridSpec gs = make_grid(cfg.surrogate_ell);
    ModelParams ps = make_params(cfg.preset, gs);
    const long n_records = std::max(1L, static_cast<long>(std::llround(cfg.T / cfg.h)));
    Trajectory<SIRState> fine = integrate_ode(
        make_initial_state(cfg.preset, gs), ps,
        make_schedule(cfg.T, max_stable_step(gs, ps), n_records));
    Trajectory<SIRState> coeffs = restrict_trajectory(fine, g);

    Trajectory<LatticeField> f_traj, g_traj;
    f_traj.times = g_traj.times = coeffs.times;
    for (const SIRState& s : coeffs.states) {
        auto [f, gg] = coefficient_fields(s, params);
        f_traj.states.push_back(f);
        g_traj.states.push_back(gg);
    }

    std::vector<SpdePathOutput> paths(static_cast<std::size_t>(cfg.replicas));
    std::vector<Trajectory<LatticeField>> mart_s(static_cast<std::size_t>(cfg.replicas));
    parallel_for_index(static_cast<std::size_t>(cfg.replicas), cfg.jobs, [&](std::size_t rep) {
        MartingaleFields m =
            simulate_martingales(coeffs, params, derive_replica_seed(cfg.master_seed, rep));
        FieldTriple lin = simulate_linear_system(m, params, basis);
        FieldTriple bar = simulate_bar_system(lin, f_traj, g_traj, params.alpha, params);
        // Subsample to 11 instants for the CSVs.
        auto subsample_triple = [&](const FieldTriple& t) {
            FieldTriple sub;
            const std::size_t stride = std::max<std::size_t>(1, (t.u.size() - 1) / 10);
            for (std::size_t k = 0; k < t.u.size(); k += stride) {
                sub.u.times.push_back(t.u.times[k]);
                sub.v.times.push_back(t.v.times[k]);
                sub.w.times.push_back(t.w.times[k]);
                sub.u.states.push_back(t.u.states[k]);
                sub.v.states.push_back(t.v.states[k]);
                sub.w.states.push_back(t.w.states[k]);
            }
            return sub;
        };
        paths[rep].linear = subsample_triple(lin);
        paths[rep].bar = subsample_triple(bar);
        Trajectory<LatticeField> msub;
        const std::size_t stride = std::max<std::size_t>(1, (m.M_S.size() - 1) / 10);
        for (std::size_t k = 0; k < m.M_S.size(); k += stride) {
            msub.times.push_back(m.M_S.times[k]);
            msub.states.push_back(m.M_S.states[k]);
        }
        mart_s[rep] = std::move(msub);
    });

    std::ofstream mart = open_output(dir / "martingales.csv");
    mart << "replica,t,site,MS\n";
    for (std::size_t r = 0; r < mart_s.size(); ++r)
        for (std::size_t k = 0; k < mart_s[r].size(); ++k)
            for (int i = 0; i < g.ell; ++i)
                mart << r << ',' << format_g17(mart_s[r].times[k]) << ',' << i << ','
                     << format_g17(mart_s[r].states[k][i]) << '\n';
    write_spde_ensemble_csv(dir / "spde.csv", paths);
    std::printf("spde: %d paths on ell=%d with surrogate ell=%d\n", cfg.replicas, cfg.ell,
                cfg.surrogate_ell);
    return 0;
}

int cmd_spectra(const ExperimentConfig& cfg, const nlohmann::json& doc, const CliOptions& opt) {
    fs::path dir = prepare_output_dir(cfg, opt);
    start_manifest(dir, doc, cfg, {"modes.csv", "basis.csv", "ic_coeffs.csv"});
    GridSpec g = make_grid(cfg.ell);
    SpectralBasis basis(g);
    std::ofstream modes = open_output(dir / "modes.csv");
    modes << "m,kind,lambda_eps,lambda_continuous\n";
    for (int a = 0; a < basis.n_modes(); ++a) {
        const ModeIndex mode = basis.mode(a);
        modes << mode.m << ',' << (mode.kind == ModeKind::cos ? "cos" : "sin") << ','
              << format_g17(basis.lambda(a)) << ',' << format_g17(eigenvalue_continuous(mode.m))
              << '\n';
    }
    std::ofstream bf = open_output(dir / "basis.csv");
    bf << "m,kind,site,value\n";
    for (int a = 0; a < basis.n_modes(); ++a) {
        const ModeIndex mode = basis.mode(a);
        for (int i = 0; i < g.ell; ++i)
            bf << mode.m << ',' << (mode.kind == ModeKind::cos ? "cos" : "sin") << ',' << i << ','
               << format_g17(basis.vec(a)[i]) << '\n';
    }
    // Eigen-coefficients of the preset initial susceptible field.
    write_coeffs_csv(dir / "ic_coeffs.csv", analyze(make_initial_state(cfg.preset, g).S, basis),
                     basis);
    std::printf("spectra: %d modes on ell=%d\n", basis.n_modes(), cfg.ell);
    return 0;
}

int report_verdicts(const std::vector<Verdict>& verdicts, const fs::path& dir) {
    bool all = true;
    for (const Verdict& v : verdicts) {
        std::printf("%s criterion %d %s: %s (band %s)\n", v.pass ? "PASS" : "FAIL", v.criterion,
                    v.name.c_str(), v.statistic.c_str(), v.band.c_str());
        all = all && v.pass;
    }
    std::ofstream out = open_output(dir / "verdicts.json");
    out << verdicts_to_json(verdicts).dump(2) << '\n';
    return all ? 0 : 2;
}

int cmd_verify_lln(const ExperimentConfig& cfg, const nlohmann::json& doc, const CliOptions& opt) {
    fs::path dir = prepare_output_dir(cfg, opt);
    start_manifest(dir, doc, cfg, {"verdicts.json", "lln_errors.csv", "lln_medians.csv"});
    return report_verdicts(check_lln(cfg, &dir), dir);
}

int cmd_verify_clt(const ExperimentConfig& cfg, const nlohmann::json& doc, const CliOptions& opt) {
    fs::path dir = prepare_output_dir(cfg, opt);
    start_manifest(dir, doc, cfg,
                   {"verdicts.json", "clt_cov_empirical.csv", "clt_cov_se.csv",
                    "clt_cov_oracle.csv", "clt_ou_cov.csv", "clt_jb.csv"});
    return report_verdicts(check_clt_fixed_eps(cfg, &dir), dir);
}

int cmd_verify_bracket(const ExperimentConfig& cfg, const nlohmann::json& doc,
                       const CliOptions& opt) {
    fs::path dir = prepare_output_dir(cfg, opt);
    start_manifest(dir, doc, cfg, {"verdicts.json", "bracket_refinement.csv", "bracket_mc.csv"});
    return report_verdicts(check_bracket_refinement(cfg, &dir), dir);
}

int cmd_verify_all(const ExperimentConfig& cfg, const nlohmann::json& doc, const CliOptions& opt) {
    fs::path dir = prepare_output_dir(cfg, opt);
    start_manifest(dir, doc, cfg,
                   {"verdicts.json", "deterministic_refinement.csv", "lln_errors.csv",
                    "lln_medians.csv", "clt_cov_empirical.csv", "clt_cov_se.csv",
                    "clt_cov_oracle.csv", "clt_ou_cov.csv", "clt_jb.csv",
                    "bracket_refinement.csv", "bracket_mc.csv", "spde_var_functional.csv"});
    return report_verdicts(run_all_checks(cfg, &dir), dir);
}

}  // namespace

int main(int argc, char** argv) {
    const std::set<std::string> known{"simulate-ode",  "simulate-jump",
                                      "fluctuations",  "spde",
                                      "spectra",       "verify-lln",
                                      "verify-clt-fixed-eps", "verify-bracket-refinement",
                                      "verify-all"};
    if (argc < 2) {
        std::fprintf(stderr,
                     "usage: sirlab <subcommand> --config path [--out dir] [--jobs n]\n"
                     "subcommands:");
        for (const std::string& s : known) std::fprintf(stderr, " %s", s.c_str());
        std::fprintf(stderr, "\n");
        return 3;
    }
    const std::string sub = argv[1];
    if (!known.count(sub)) {
        std::fprintf(stderr, "sirlab: unknown subcommand \"%s\"\n", sub.c_str());
        return 3;
    }

    CliOptions opt;
    CLI::App app{"lattice SIR simulation and verification lab"};
    app.add_option("--config", opt.config_path, "JSON config path")->required();
    app.add_option("--out", opt.out_override, "output directory (overrides config)");
    app.add_option("--jobs", opt.jobs_override, "max parallel replica jobs (0 = all cores)");
    app.add_flag("--events", opt.event_log, "write per-replica JSONL event logs (simulate-jump)");
    try {
        app.parse(argc - 1, argv + 1);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 4;
    }

    try {
        nlohmann::json doc;
        {
            std::ifstream in(opt.config_path);
            if (!in) {
                std::fprintf(stderr, "sirlab: cannot open config %s\n", opt.config_path.c_str());
                return 4;
            }
            in >> doc;
        }
        ExperimentConfig cfg = parse_config(doc);
        if (const char* env_seed = std::getenv("SIRLAB_SEED")) {
            cfg.master_seed = std::strtoull(env_seed, nullptr, 10);
            doc["master_seed"] = cfg.master_seed;
        }
        if (opt.jobs_override >= 0) cfg.jobs = opt.jobs_override;

        if (sub == "simulate-ode") return cmd_simulate_ode(cfg, doc, opt);
        if (sub == "simulate-jump") return cmd_simulate_jump(cfg, doc, opt);
        if (sub == "fluctuations") return cmd_fluctuations(cfg, doc, opt);
        if (sub == "spde") return cmd_spde(cfg, doc, opt);
        if (sub == "spectra") return cmd_spectra(cfg, doc, opt);
        if (sub == "verify-lln") return cmd_verify_lln(cfg, doc, opt);
        if (sub == "verify-clt-fixed-eps") return cmd_verify_clt(cfg, doc, opt);
        if (sub == "verify-bracket-refinement") return cmd_verify_bracket(cfg, doc, opt);
        return cmd_verify_all(cfg, doc, opt);
    } catch (const nlohmann::json::exception& e) {
        std::fprintf(stderr, "sirlab: config error: %s\n", e.what());
        return 4;
    } catch (const IoError& e) {
        std::fprintf(stderr, "sirlab: I/O error: %s\n", e.what());
        return 5;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "sirlab: invalid configuration: %s\n", e.what());
        return 4;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "sirlab: invalid configuration: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "sirlab: error: %s\n", e.what());
        return 1;
    }
}
