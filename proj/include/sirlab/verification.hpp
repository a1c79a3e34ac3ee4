/// @file verification.hpp
/// @brief The acceptance checks: operator identities, spectral correctness,
/// deterministic integrity, LLN slope, fixed-grid CLT, Gaussianity,
/// martingale bracket convergence, and the limit-SPDE pipeline.
///
/// Every tolerance, grid size, replica count, and band below is pinned here;
/// the config supplies only the preset constants, the master seed, and the
/// parallelism. Each check is deterministic given the master seed.
///
/// Known red check: the bracket refinement *ratio band* demands the
/// discrete-to-limit bracket error to shrink by a factor in [1.5, 3] per
/// 3x grid refinement. The symmetric bracket quadrature mandated for this
/// check is second-order accurate, so the measured contraction is ~9 per
/// refinement (faster than the band allows) for every consistent choice of
/// limit surrogate. The check is implemented exactly as stated and reports
/// the measured ratios; the strict-decrease and Monte Carlo clauses pass.

#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sirlab/config.hpp"
#include "sirlab/deterministic.hpp"
#include "sirlab/fluctuation.hpp"
#include "sirlab/grid.hpp"
#include "sirlab/io.hpp"
#include "sirlab/jump.hpp"
#include "sirlab/parallel.hpp"
#include "sirlab/rng.hpp"
#include "sirlab/spde.hpp"
#include "sirlab/spectral.hpp"
#include "sirlab/stats.hpp"

namespace sirlab {

struct Verdict {
    int criterion = 0;
    std::string name;
    std::string statistic;
    std::string band;
    bool pass = false;
};

inline nlohmann::json verdicts_to_json(const std::vector<Verdict>& verdicts) {
    nlohmann::json arr = nlohmann::json::array();
    bool all = true;
    for (const Verdict& v : verdicts) {
        arr.push_back({{"criterion", v.criterion},
                       {"name", v.name},
                       {"statistic", v.statistic},
                       {"band", v.band},
                       {"pass", v.pass}});
        all = all && v.pass;
    }
    return nlohmann::json{{"criteria", arr}, {"all_pass", all}};
}

namespace detail {

inline LatticeField random_field(GridSpec g, Rng& rng) {
    LatticeField f(g);
    for (int i = 0; i < g.ell; ++i) f[i] = 2.0 * rng.uniform() - 1.0;
    return f;
}

inline std::string fmt(double v) { return format_g17(v); }

/// Criterion sub-seed: keeps the per-criterion streams disjoint.
inline std::uint64_t criterion_seed(std::uint64_t master, int criterion, int salt = 0) {
    return derive_replica_seed(master ^ (0xC0DEull * static_cast<unsigned>(criterion)),
                               static_cast<std::uint64_t>(salt));
}

}  // namespace detail

/// Criterion 1: summation by parts, Laplacian factorization, mass
/// neutrality, and the spectral gradient-norm identity, to 1e-10 across
/// ell in {3, 5, 31, 101} on 100 random fields each.
inline std::vector<Verdict> check_operator_identities(const ExperimentConfig& cfg) {
    Rng rng(detail::criterion_seed(cfg.master_seed, 1));
    double worst = 0.0;
    for (int ell : {3, 5, 31, 101}) {
        GridSpec g = make_grid(ell);
        SpectralBasis basis(g);
        const double inv_eps2 = static_cast<double>(ell) * static_cast<double>(ell);
        for (int rep = 0; rep < 100; ++rep) {
            LatticeField f = detail::random_field(g, rng);
            LatticeField h = detail::random_field(g, rng);

            const double sbp = std::abs(inner(grad_plus(f), h) + inner(f, grad_minus(h)));
            worst = std::max(worst, sbp / std::max(1.0, norm_l2(f) * norm_l2(h)));

            LatticeField lf = laplacian(f);
            LatticeField mp = grad_minus(grad_plus(f));
            LatticeField pm = grad_plus(grad_minus(f));
            const double scale = std::max(1.0, inv_eps2 * norm_inf(f));
            double fact = 0.0, total = 0.0;
            for (int i = 0; i < ell; ++i) {
                fact = std::max({fact, std::abs(lf[i] - mp[i]), std::abs(lf[i] - pm[i])});
                total += lf[i];
            }
            worst = std::max(worst, fact / scale);
            worst = std::max(worst, std::abs(total) / scale);

            const double gspec = grad_norm_spectral(f, cfg.gamma, basis);
            const double gplus = sobolev_norm_discrete(grad_plus(f), -cfg.gamma, basis);
            const double gminus = sobolev_norm_discrete(grad_minus(f), -cfg.gamma, basis);
            worst = std::max(worst, std::abs(gspec - gplus) / (1.0 + gspec));
            worst = std::max(worst, std::abs(gspec - gminus) / (1.0 + gspec));
        }
    }
    Verdict v{1, "operator-identities", "max normalized violation " + detail::fmt(worst),
              "<= 1e-10", worst <= 1e-10};
    return {v};
}

/// Criterion 2: eigen residuals <= 1e-10 relative to lambda across
/// ell in {3, 5, 31, 101}; semigroup vs dense matrix exponential at ell=31,
/// t in {0.01, 0.1, 1}, relative error <= 1e-8.
inline std::vector<Verdict> check_spectral_correctness(const ExperimentConfig& cfg) {
    double worst_resid = 0.0;
    for (int ell : {3, 5, 31, 101}) {
        GridSpec g = make_grid(ell);
        SpectralBasis basis(g);
        for (int a = 0; a < basis.n_modes(); ++a) {
            LatticeField f = basis_field(basis.mode(a), g);
            LatticeField lf = laplacian(f);
            const double lam = basis.lambda(a);
            double resid = 0.0;
            for (int i = 0; i < ell; ++i) resid = std::max(resid, std::abs(lf[i] + lam * f[i]));
            worst_resid = std::max(worst_resid, resid / std::max(lam, 1.0));
        }
    }

    GridSpec g31 = make_grid(31);
    SpectralBasis basis31(g31);
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(31, 31);
    const double inv_eps2 = 31.0 * 31.0;
    for (int i = 0; i < 31; ++i) {
        L(i, i) = -2.0 * inv_eps2;
        L(i, (i + 1) % 31) = inv_eps2;
        L(i, (i + 31 - 1) % 31) = inv_eps2;
    }
    Rng rng(detail::criterion_seed(cfg.master_seed, 2));
    const double mu = cfg.preset.mu_S;
    double worst_semi = 0.0;
    for (int rep = 0; rep < 5; ++rep) {
        LatticeField f = detail::random_field(g31, rng);
        Eigen::Map<const Eigen::VectorXd> fv(f.values.data(), 31);
        for (double t : {0.01, 0.1, 1.0}) {
            Eigen::VectorXd oracle = (mu * t * L).exp() * fv;
            LatticeField got = semigroup_apply(t, mu, f, basis31);
            double err = 0.0;
            for (int i = 0; i < 31; ++i) err = std::max(err, std::abs(got[i] - oracle(i)));
            worst_semi = std::max(worst_semi, err / norm_inf(f));
        }
    }

    return {Verdict{2, "eigen-residuals", "max residual/lambda " + detail::fmt(worst_resid),
                    "<= 1e-10", worst_resid <= 1e-10},
            Verdict{2, "semigroup-vs-expm", "max relative error " + detail::fmt(worst_semi),
                    "<= 1e-8", worst_semi <= 1e-8}};
}

/// Criterion 3: mass conservation to 1e-9 over [0,1]; the total-mass floor
/// min A >= c exp(-beta_bar T); refinement errors against an ell=243
/// reference strictly decreasing by a factor >= 2 across 9 -> 27 -> 81.
inline std::vector<Verdict> check_deterministic_integrity(
    const ExperimentConfig& cfg, const std::filesystem::path* outdir = nullptr) {
    const PresetSpec& preset = cfg.preset;

    GridSpec g = make_grid(27);
    ModelParams params = make_params(preset, g);
    SIRState st0 = make_initial_state(preset, g);
    Trajectory<SIRState> traj =
        integrate_ode(st0, params, make_schedule(1.0, max_stable_step(g, params), 20));
    LatticeField ones(g, 1.0);
    const double m0 = inner(st0.S + st0.I + st0.R, ones);
    double dmass = 0.0;
    for (const SIRState& st : traj.states)
        dmass = std::max(dmass, std::abs(inner(st.S + st.I + st.R, ones) - m0));

    const double c = *std::min_element(st0.S.values.begin(), st0.S.values.end());
    const double floor = assumption_floor(params, c, 1.0);
    const double min_a = lower_bound_certificate(traj);

    std::vector<double> errors;
    for (int ell : {9, 27, 81}) {
        RefineResult r = refine_compare(preset, ell, 243, 1.0, 10);
        errors.push_back(r.error);
    }
    const bool decreasing = errors[0] > 2.0 * errors[1] && errors[1] > 2.0 * errors[2];

    if (outdir) {
        std::ofstream out = open_output(*outdir / "deterministic_refinement.csv");
        out << "ell,ref_ell,sup_error\n";
        const int ells[3] = {9, 27, 81};
        for (int k = 0; k < 3; ++k)
            out << ells[k] << ",243," << format_g17(errors[static_cast<std::size_t>(k)]) << '\n';
    }

    return {Verdict{3, "mass-conservation", "max |mass drift| " + detail::fmt(dmass), "<= 1e-9",
                    dmass <= 1e-9},
            Verdict{3, "total-mass-floor",
                    "min A " + detail::fmt(min_a) + " vs floor " + detail::fmt(floor),
                    ">= c exp(-beta_bar T)", min_a >= floor},
            Verdict{3, "refinement-decrease",
                    "errors " + detail::fmt(errors[0]) + ", " + detail::fmt(errors[1]) + ", " +
                        detail::fmt(errors[2]),
                    "factor >= 2 per step", decreasing}};
}

/// Criterion 4: LLN slope. ell=11, T=1, N in {1e3, 1e4, 1e5}, 20 replicas
/// each; the median sup-norm error has log-log slope in [-0.65, -0.35].
inline std::vector<Verdict> check_lln(const ExperimentConfig& cfg,
                                      const std::filesystem::path* outdir = nullptr) {
    GridSpec g = make_grid(11);
    ModelParams params = make_params(cfg.preset, g);
    SIRState det0 = make_initial_state(cfg.preset, g);
    Trajectory<SIRState> det =
        integrate_ode(det0, params, make_schedule(1.0, max_stable_step(g, params), 10));

    const std::vector<std::int64_t> pops{1000, 10000, 100000};
    const int replicas = 20;
    std::vector<double> medians;
    std::ofstream errcsv;
    if (outdir) {
        errcsv = open_output(*outdir / "lln_errors.csv");
        errcsv << "N,replica,sup_error\n";
    }
    for (std::size_t ni = 0; ni < pops.size(); ++ni) {
        const std::int64_t N = pops[ni];
        const std::uint64_t base =
            detail::criterion_seed(cfg.master_seed, 4, static_cast<int>(ni));
        std::vector<double> errs(replicas);
        parallel_for_index(replicas, cfg.jobs, [&](std::size_t rep) {
            JumpState j0 = from_proportions(det0, N);
            Trajectory<JumpState> jt =
                gillespie(j0, params, det.times, derive_replica_seed(base, rep));
            Trajectory<SIRState> props;
            props.times = jt.times;
            for (const JumpState& s : jt.states) props.states.push_back(to_proportions(s));
            errs[rep] = sup_norm_error(props, det);
        });
        if (outdir)
            for (int rep = 0; rep < replicas; ++rep)
                errcsv << N << ',' << rep << ',' << format_g17(errs[static_cast<std::size_t>(rep)])
                       << '\n';
        std::sort(errs.begin(), errs.end());
        medians.push_back(0.5 * (errs[replicas / 2 - 1] + errs[replicas / 2]));
    }

    std::vector<double> xs(pops.begin(), pops.end());
    const double slope = loglog_slope(xs, medians);
    if (outdir) {
        std::ofstream med = open_output(*outdir / "lln_medians.csv");
        med << "N,median_sup_error\n";
        for (std::size_t k = 0; k < pops.size(); ++k)
            med << pops[k] << ',' << format_g17(medians[k]) << '\n';
    }
    return {Verdict{4, "lln-slope", "slope " + detail::fmt(slope), "[-0.65, -0.35]",
                    slope >= -0.65 && slope <= -0.35}};
}

/// Criteria 5 and 6: fixed-grid CLT covariance and Gaussianity.
/// ell=5, N=1e5, T=0.5, 2000 jump replicas; empirical covariance of
/// Psi(T) within 4 bootstrap SEs of the Lyapunov P(T) for >= 95% of
/// entries; the independently simulated OU ensemble under the same band;
/// 20 random linear functionals pass Jarque-Bera at 0.01 for >= 18/20.
inline std::vector<Verdict> check_clt_fixed_eps(const ExperimentConfig& cfg,
                                                const std::filesystem::path* outdir = nullptr) {
    GridSpec g = make_grid(5);
    ModelParams params = make_params(cfg.preset, g);
    SIRState det0 = make_initial_state(cfg.preset, g);
    const double T = 0.5;
    const double h = 1e-3;  // well under the guard 0.1 eps^2 / mu
    const long n_steps = static_cast<long>(std::llround(T / h));
    Trajectory<SIRState> det = integrate_ode(det0, params, OdeSchedule{h, n_steps, 1});

    CovarianceMatrix P = lyapunov_cov(det, params, cfg.paper_literal_drift);
    const int dim = 3 * g.ell;

    // Jump ensemble at the pinned scale.
    const std::int64_t N = 100000;
    const int replicas = 2000;
    const double root_n = std::sqrt(static_cast<double>(N));
    const std::uint64_t jump_base = detail::criterion_seed(cfg.master_seed, 5);
    std::vector<Eigen::VectorXd> psi_T(replicas);
    const SIRState det_T = det.states.back();
    parallel_for_index(replicas, cfg.jobs, [&](std::size_t rep) {
        JumpState j0 = from_proportions(det0, N);
        Trajectory<JumpState> jt = gillespie(j0, params, {T}, derive_replica_seed(jump_base, rep));
        const SIRState props = to_proportions(jt.states.back());
        Eigen::VectorXd v(dim);
        for (int i = 0; i < g.ell; ++i) {
            v(i) = root_n * (props.S[i] - det_T.S[i]);
            v(g.ell + i) = root_n * (props.I[i] - det_T.I[i]);
            v(2 * g.ell + i) = root_n * (props.R[i] - det_T.R[i]);
        }
        psi_T[rep] = v;
    });
    Moments jump_m = empirical_moments(psi_T, detail::criterion_seed(cfg.master_seed, 5, 101));

    auto band_fraction = [&](const Moments& m) {
        int within = 0;
        for (int r = 0; r < dim; ++r)
            for (int c = 0; c < dim; ++c)
                if (std::abs(m.covariance(r, c) - P(r, c)) <= 4.0 * m.cov_se(r, c)) ++within;
        return static_cast<double>(within) / static_cast<double>(dim * dim);
    };
    const double jump_frac = band_fraction(jump_m);

    // Independent OU ensemble under the same band.
    OuCoefficients co = build_ou_coefficients(det, params, cfg.paper_literal_drift);
    const std::uint64_t ou_base = detail::criterion_seed(cfg.master_seed, 5, 202);
    std::vector<Eigen::VectorXd> ou_T(replicas);
    parallel_for_index(replicas, cfg.jobs, [&](std::size_t rep) {
        Trajectory<FluctuationState> tr =
            simulate_ou_fixed_eps(co, derive_replica_seed(ou_base, rep));
        ou_T[rep] = pack_state(tr.states.back());
    });
    Moments ou_m = empirical_moments(ou_T, detail::criterion_seed(cfg.master_seed, 5, 303));
    const double ou_frac = band_fraction(ou_m);

    // Criterion 6: Jarque-Bera on 20 random unit functionals of Psi(T).
    Rng func_rng(detail::criterion_seed(cfg.master_seed, 6));
    int jb_passes = 0;
    std::vector<std::pair<double, bool>> jb_rows;
    for (int f = 0; f < 20; ++f) {
        Eigen::VectorXd w(dim);
        for (int d = 0; d < dim; ++d) w(d) = func_rng.normal();
        w /= w.norm();
        std::vector<double> samples(replicas);
        for (int rep = 0; rep < replicas; ++rep)
            samples[static_cast<std::size_t>(rep)] = w.dot(psi_T[static_cast<std::size_t>(rep)]);
        NormalityResult res = normality_test(samples);
        jb_rows.emplace_back(res.statistic, res.pass);
        if (res.pass) ++jb_passes;
    }

    if (outdir) {
        write_matrix_csv(*outdir / "clt_cov_empirical.csv", jump_m.covariance);
        write_matrix_csv(*outdir / "clt_cov_se.csv", jump_m.cov_se);
        write_matrix_csv(*outdir / "clt_cov_oracle.csv", P);
        write_matrix_csv(*outdir / "clt_ou_cov.csv", ou_m.covariance);
        std::ofstream jb = open_output(*outdir / "clt_jb.csv");
        jb << "functional,jb_statistic,pass\n";
        for (std::size_t k = 0; k < jb_rows.size(); ++k)
            jb << k << ',' << format_g17(jb_rows[k].first) << ',' << (jb_rows[k].second ? 1 : 0)
               << '\n';
    }

    return {Verdict{5, "clt-jump-covariance",
                    "entry fraction within band " + detail::fmt(jump_frac), ">= 0.95",
                    jump_frac >= 0.95},
            Verdict{5, "clt-ou-covariance", "entry fraction within band " + detail::fmt(ou_frac),
                    ">= 0.95", ou_frac >= 0.95},
            Verdict{6, "gaussianity-jb", std::to_string(jb_passes) + "/20 pass at 0.01",
                    ">= 18/20", jb_passes >= 18}};
}

namespace detail {

/// Limit bracket for phi_2: continuous test function integrated cellwise
/// against the step-function coefficients of the surrogate trajectory.
inline double limit_bracket_phi2(const Trajectory<SIRState>& coeffs, const ModelParams& params,
                                 double mu) {
    GridSpec g = coeffs.states.front().grid();
    const int n = g.ell;
    const double eps = g.eps();
    std::vector<double> i_phi2(static_cast<std::size_t>(n)), i_dphi2(static_cast<std::size_t>(n));
    const double fourpi = 4.0 * std::numbers::pi;
    for (int i = 0; i < n; ++i) {
        const double a = (static_cast<double>(i) - 0.5) * eps;
        const double b = (static_cast<double>(i) + 0.5) * eps;
        const double int_cos = (std::sin(fourpi * b) - std::sin(fourpi * a)) / fourpi;
        i_phi2[static_cast<std::size_t>(i)] = (b - a) + int_cos;  // int 2 cos^2(2 pi x)
        i_dphi2[static_cast<std::size_t>(i)] =
            4.0 * std::numbers::pi * std::numbers::pi * ((b - a) - int_cos);  // int (phi_2')^2
    }
    std::vector<double> integrand(coeffs.size());
    for (std::size_t k = 0; k < coeffs.size(); ++k) {
        const SIRState& st = coeffs.states[k];
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            const double a_tot = st.S[i] + st.I[i] + st.R[i];
            const double reac = (a_tot > 0.0) ? params.beta[i] * st.S[i] * st.I[i] / a_tot : 0.0;
            acc += reac * i_phi2[static_cast<std::size_t>(i)];
            acc += 2.0 * mu * st.S[i] * i_dphi2[static_cast<std::size_t>(i)];
        }
        integrand[k] = acc;
    }
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < coeffs.size(); ++k)
        total += 0.5 * (integrand[k] + integrand[k + 1]) * (coeffs.times[k + 1] - coeffs.times[k]);
    return total;
}

}  // namespace detail

/// Criterion 7: martingale covariance convergence. Discrete brackets on
/// ell in {9, 27, 81} against the limit bracket built on the surrogate
/// grid; strict decrease, the stated ratio band, and the Monte Carlo
/// bracket of the simulated martingale within 4 SE of the quadrature.
inline std::vector<Verdict> check_bracket_refinement(
    const ExperimentConfig& cfg, const std::filesystem::path* outdir = nullptr) {
    const PresetSpec& preset = cfg.preset;
    const double T = 0.5;

    // Surrogate trajectory on the pinned fine grid.
    GridSpec gs = make_grid(81);
    ModelParams ps = make_params(preset, gs);
    Trajectory<SIRState> surrogate = integrate_ode(
        make_initial_state(preset, gs), ps, make_schedule(T, max_stable_step(gs, ps), 250));
    const double blim = detail::limit_bracket_phi2(surrogate, ps, ps.mu_S);

    std::vector<double> errors, brackets;
    for (int ell : {9, 27, 81}) {
        GridSpec g = make_grid(ell);
        ModelParams params = make_params(preset, g);
        Trajectory<SIRState> det = integrate_ode(
            make_initial_state(preset, g), params, make_schedule(T, max_stable_step(g, params), 250));
        const LatticeField phi2 = basis_field({2, ModeKind::cos}, g);
        const double bd = bracket_quadrature_discrete(phi2, det, params);
        brackets.push_back(bd);
        errors.push_back(std::abs(bd - blim));
    }
    const double ratio1 = errors[0] / errors[1];
    const double ratio2 = errors[1] / errors[2];
    const bool decreasing = errors[0] > errors[1] && errors[1] > errors[2];
    const bool in_band = ratio1 >= 1.5 && ratio1 <= 3.0 && ratio2 >= 1.5 && ratio2 <= 3.0;

    // Monte Carlo bracket on the surrogate grid.
    const int paths = 2000;
    const LatticeField phi2s = basis_field({2, ModeKind::cos}, gs);
    const double quad = bracket_quadrature_discrete(phi2s, surrogate, ps);
    const std::uint64_t base = detail::criterion_seed(cfg.master_seed, 7);
    std::vector<double> ms_phi(paths);
    parallel_for_index(paths, cfg.jobs, [&](std::size_t p) {
        MartingaleFields m = simulate_martingales(surrogate, ps, derive_replica_seed(base, p));
        ms_phi[p] = inner(m.M_S.states.back(), phi2s);
    });
    double mean = 0.0;
    for (double v : ms_phi) mean += v;
    mean /= paths;
    double var = 0.0;
    for (double v : ms_phi) var += (v - mean) * (v - mean);
    var /= (paths - 1);
    const double se = var * std::sqrt(2.0 / (paths - 1));
    const bool mc_ok = std::abs(var - quad) <= 4.0 * se;

    if (outdir) {
        std::ofstream out = open_output(*outdir / "bracket_refinement.csv");
        out << "ell,discrete_bracket,limit_bracket,abs_error\n";
        const int ells[3] = {9, 27, 81};
        for (int k = 0; k < 3; ++k)
            out << ells[k] << ',' << format_g17(brackets[static_cast<std::size_t>(k)]) << ','
                << format_g17(blim) << ',' << format_g17(errors[static_cast<std::size_t>(k)])
                << '\n';
        std::ofstream mc = open_output(*outdir / "bracket_mc.csv");
        mc << "paths,mc_bracket,quadrature_bracket,se\n";
        mc << paths << ',' << format_g17(var) << ',' << format_g17(quad) << ',' << format_g17(se)
           << '\n';
    }

    return {Verdict{7, "bracket-refinement-decrease",
                    "errors " + detail::fmt(errors[0]) + " > " + detail::fmt(errors[1]) + " > " +
                        detail::fmt(errors[2]),
                    "strictly decreasing", decreasing},
            Verdict{7, "bracket-refinement-ratio-band",
                    "ratios " + detail::fmt(ratio1) + ", " + detail::fmt(ratio2),
                    "[1.5, 3] per refinement", in_band},
            Verdict{7, "bracket-mc-vs-quadrature",
                    "MC " + detail::fmt(var) + " vs quadrature " + detail::fmt(quad) + " (SE " +
                        detail::fmt(se) + ")",
                    "within 4 SE", mc_ok}};
}

/// Criterion 8: limit SPDE pipeline on ell=27 with the fine-surrogate
/// coefficients. Frozen-coefficient per-mode variances within 5% of the
/// closed-form OU values (2000 paths); the full-pipeline Var<u(T), phi_2>
/// within 4 SE of limit_cov_functional; the combined system's weak residual
/// within 10x the scheme tolerance against 5 test fields.
inline std::vector<Verdict> check_spde_limit(const ExperimentConfig& cfg,
                                             const std::filesystem::path* outdir = nullptr) {
    const PresetSpec& preset = cfg.preset;
    const double T = 0.5;
    const double dt = 1e-3;
    GridSpec g = make_grid(27);
    SpectralBasis basis(g);
    ModelParams params = make_params(preset, g);

    // Fine surrogate restricted onto the SPDE grid.
    GridSpec gs = make_grid(81);
    ModelParams ps = make_params(preset, gs);
    const long n_records = static_cast<long>(std::llround(T / dt));
    Trajectory<SIRState> fine = integrate_ode(make_initial_state(preset, gs), ps,
                                              make_schedule(T, max_stable_step(gs, ps), n_records));
    Trajectory<SIRState> coeffs = restrict_trajectory(fine, g);

    // Frozen-coefficient per-mode variance check. The exponential-Euler
    // variance exceeds the continuous OU value by a factor ~(1 + mu lambda dt),
    // so this sub-check runs at a finer step where that bias is < 1% for
    // every tested mode.
    const double dt_frozen = 2.5e-4;
    const long frozen_steps = static_cast<long>(std::llround(T / dt_frozen));
    Trajectory<SIRState> frozen;
    for (long k = 0; k <= frozen_steps; ++k)
        frozen.times.push_back(static_cast<double>(k) * dt_frozen);
    frozen.states.assign(static_cast<std::size_t>(frozen_steps) + 1, coeffs.states.front());
    const ModeIndex modes[3] = {{2, ModeKind::cos}, {2, ModeKind::sin}, {8, ModeKind::cos}};
    const std::size_t time_idx[4] = {500, 1000, 1500, 2000};
    const int paths = 2000;
    const std::uint64_t frozen_base = detail::criterion_seed(cfg.master_seed, 8);
    std::vector<std::array<std::array<double, 4>, 3>> proj(paths);
    LatticeField mode_fields[3] = {basis_field(modes[0], g), basis_field(modes[1], g),
                                   basis_field(modes[2], g)};
    parallel_for_index(paths, cfg.jobs, [&](std::size_t p) {
        MartingaleFields m = simulate_martingales(frozen, params, derive_replica_seed(frozen_base, p));
        FieldTriple lin = simulate_linear_system(m, params, basis);
        for (int mi = 0; mi < 3; ++mi)
            for (int ti = 0; ti < 4; ++ti)
                proj[p][static_cast<std::size_t>(mi)][static_cast<std::size_t>(ti)] =
                    inner(lin.u.states[time_idx[ti]], mode_fields[mi]);
    });
    // Closed-form variance: q (1 - exp(-2 mu lambda t)) / (2 mu lambda) with
    // the mode's bracket density q from the frozen state.
    double worst_mode_dev = 0.0;
    const SIRState& fz = coeffs.states.front();
    for (int mi = 0; mi < 3; ++mi) {
        const LatticeField& phi = mode_fields[mi];
        const LatticeField gm = grad_minus(phi);
        double q = 0.0;
        for (int i = 0; i < g.ell; ++i) {
            const double a = fz.S[i] + fz.I[i] + fz.R[i];
            q += params.beta[i] * fz.S[i] * fz.I[i] / a * phi[i] * phi[i];
            q += 2.0 * params.mu_S * fz.S[i] * gm[i] * gm[i];
        }
        q *= g.eps();
        const double lam = eigenvalue_discrete(modes[mi].m, g);
        double ratio_sum = 0.0;
        for (int ti = 0; ti < 4; ++ti) {
            const double t = frozen.times[time_idx[ti]];
            const double exact =
                q * (1.0 - std::exp(-2.0 * params.mu_S * lam * t)) / (2.0 * params.mu_S * lam);
            double mean = 0.0, var = 0.0;
            for (int p = 0; p < paths; ++p) mean += proj[p][mi][ti];
            mean /= paths;
            for (int p = 0; p < paths; ++p)
                var += (proj[p][mi][ti] - mean) * (proj[p][mi][ti] - mean);
            var /= (paths - 1);
            ratio_sum += var / exact;
        }
        worst_mode_dev = std::max(worst_mode_dev, std::abs(ratio_sum / 4.0 - 1.0));
    }

    // Full pipeline: time-varying coefficients, Var<u(T), phi_2> vs the
    // mild-solution functional.
    Trajectory<LatticeField> f_traj, g_traj;
    f_traj.times = g_traj.times = coeffs.times;
    for (const SIRState& s : coeffs.states) {
        auto [f, gg] = coefficient_fields(s, params);
        f_traj.states.push_back(f);
        g_traj.states.push_back(gg);
    }
    const LatticeField phi2 = mode_fields[0];
    const std::uint64_t pipe_base = detail::criterion_seed(cfg.master_seed, 8, 404);
    std::vector<double> u_phi(paths);
    parallel_for_index(paths, cfg.jobs, [&](std::size_t p) {
        MartingaleFields m = simulate_martingales(coeffs, params, derive_replica_seed(pipe_base, p));
        FieldTriple lin = simulate_linear_system(m, params, basis);
        u_phi[p] = inner(lin.u.states.back(), phi2);
    });
    double mean_u = 0.0;
    for (double v : u_phi) mean_u += v;
    mean_u /= paths;
    double var_u = 0.0;
    for (double v : u_phi) var_u += (v - mean_u) * (v - mean_u);
    var_u /= (paths - 1);
    const double oracle_var = limit_cov_functional(phi2, coeffs, params, params.mu_S, T, basis);
    const double se_u = var_u * std::sqrt(2.0 / (paths - 1));
    const bool var_ok = std::abs(var_u - oracle_var) <= 4.0 * se_u;

    // Weak residual of the combined system on 3 paths x 5 test fields.
    const LatticeField tests[5] = {LatticeField(g, 1.0), basis_field({2, ModeKind::cos}, g),
                                   basis_field({2, ModeKind::sin}, g),
                                   basis_field({4, ModeKind::cos}, g),
                                   basis_field({4, ModeKind::sin}, g)};
    double worst_residual_ratio = 0.0;
    for (int path = 0; path < 3; ++path) {
        MartingaleFields m =
            simulate_martingales(coeffs, params, derive_replica_seed(pipe_base, 9000 + path));
        FieldTriple lin = simulate_linear_system(m, params, basis);
        FieldTriple bar = simulate_bar_system(lin, f_traj, g_traj, params.alpha, params);
        Trajectory<FluctuationState> Y = combine(lin, bar);
        for (const LatticeField& phi : tests)
            for (int comp = 0; comp < 3; ++comp) {
                WeakResidual r =
                    weak_residual(Y, m, f_traj, g_traj, params.alpha, params, phi, comp);
                worst_residual_ratio =
                    std::max(worst_residual_ratio, std::abs(r.residual) / (10.0 * r.tolerance));
            }
    }

    if (outdir) {
        std::ofstream out = open_output(*outdir / "spde_var_functional.csv");
        out << "paths,mc_variance,oracle_variance,se\n";
        out << paths << ',' << format_g17(var_u) << ',' << format_g17(oracle_var) << ','
            << format_g17(se_u) << '\n';
    }

    return {Verdict{8, "spde-frozen-mode-variance",
                    "max |variance ratio - 1| " + detail::fmt(worst_mode_dev), "<= 0.05",
                    worst_mode_dev <= 0.05},
            Verdict{8, "spde-variance-functional",
                    "MC " + detail::fmt(var_u) + " vs oracle " + detail::fmt(oracle_var) +
                        " (SE " + detail::fmt(se_u) + ")",
                    "within 4 SE", var_ok},
            Verdict{8, "spde-weak-residual",
                    "max residual / (10 x tolerance) " + detail::fmt(worst_residual_ratio),
                    "<= 1", worst_residual_ratio <= 1.0}};
}

/// Runs criteria 1-8 (criterion 9, bit-identical reruns, is exercised by
/// running the CLI twice and comparing outputs).
inline std::vector<Verdict> run_all_checks(const ExperimentConfig& cfg,
                                           const std::filesystem::path* outdir = nullptr) {
    std::vector<Verdict> all;
    auto absorb = [&](std::vector<Verdict> v) {
        for (Verdict& x : v) all.push_back(std::move(x));
    };
    absorb(check_operator_identities(cfg));
    absorb(check_spectral_correctness(cfg));
    absorb(check_deterministic_integrity(cfg, outdir));
    absorb(check_lln(cfg, outdir));
    absorb(check_clt_fixed_eps(cfg, outdir));
    absorb(check_bracket_refinement(cfg, outdir));
    absorb(check_spde_limit(cfg, outdir));
    return all;
}

}  // namespace sirlab
