/// @file stats.hpp
/// @brief Estimators and oracles for the verification pipelines.
///
/// lyapunov_cov integrates P' = A(t) P + P A(t)^T + Q(t), P(0) = 0, the exact
/// covariance of the linear fluctuation SDE, and is the oracle the Monte
/// Carlo ensembles are tested against. Everything here is deterministic
/// given the master seed (the bootstrap uses its own derived stream).

#pragma once

#include <Eigen/Dense>

#include <algorithm>
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

using CovarianceMatrix = Eigen::MatrixXd;

/// RK4 for P' = A(t) P + P A(t)^T + Q(t), P(0) = 0, over coefficient series
/// sampled at half-step resolution (odd count; one RK4 step spans two
/// samples so the midpoint stage uses an exact sample).
inline CovarianceMatrix lyapunov_cov_core(const std::vector<Eigen::MatrixXd>& A,
                                          const std::vector<Eigen::MatrixXd>& Q,
                                          double sample_spacing) {
    if (A.size() != Q.size() || A.size() < 3 || A.size() % 2 == 0)
        throw std::invalid_argument("lyapunov_cov_core: need matched odd-count coefficient series");
    if (sample_spacing <= 0.0)
        throw std::invalid_argument("lyapunov_cov_core: sample spacing must be positive");
    const double dt = 2.0 * sample_spacing;
    const Eigen::Index dim = A.front().rows();

    auto rhs = [&](const Eigen::MatrixXd& P, std::size_t idx) {
        Eigen::MatrixXd AP = A[idx] * P;
        return Eigen::MatrixXd(AP + AP.transpose() + Q[idx]);
    };

    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(dim, dim);
    for (std::size_t k = 0; k + 2 < A.size(); k += 2) {
        Eigen::MatrixXd k1 = rhs(P, k);
        Eigen::MatrixXd k2 = rhs(P + 0.5 * dt * k1, k + 1);
        Eigen::MatrixXd k3 = rhs(P + 0.5 * dt * k2, k + 1);
        Eigen::MatrixXd k4 = rhs(P + dt * k3, k + 2);
        P += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!P.allFinite()) throw std::runtime_error("lyapunov_cov: matrix ODE diverged");
    }
    // Exact symmetry of the stored result.
    P = 0.5 * (P + P.transpose()).eval();
    return P;
}

/// Covariance of the linear fluctuation SDE at the trajectory horizon, with
/// drift and diffusion evaluated along the deterministic trajectory.
inline CovarianceMatrix lyapunov_cov(const Trajectory<SIRState>& det_traj,
                                     const ModelParams& params, bool paper_literal = false) {
    if (det_traj.size() < 3 || det_traj.size() % 2 == 0)
        throw std::invalid_argument(
            "lyapunov_cov: need an odd number (>= 3) of uniform samples so RK4 midpoints are exact");
    const double spacing = det_traj.times[1] - det_traj.times[0];
    std::vector<Eigen::MatrixXd> A, Q;
    A.reserve(det_traj.size());
    Q.reserve(det_traj.size());
    for (std::size_t k = 0; k < det_traj.size(); ++k) {
        if (k + 1 < det_traj.size() &&
            std::abs(det_traj.times[k + 1] - det_traj.times[k] - spacing) >
                1e-12 * std::max(1.0, spacing))
            throw std::invalid_argument("lyapunov_cov: nonuniform sampling");
        A.push_back(drift_jacobian(det_traj.states[k], params, paper_literal));
        Q.push_back(diffusion_matrix(det_traj.states[k], params));
    }
    return lyapunov_cov_core(A, Q, spacing);
}

/// Sample mean, unbiased covariance, and per-entry bootstrap standard errors
/// of the covariance (500 resamples, seeded). Replicas must arrive keyed by
/// index; the reduction is order-independent by construction.
struct Moments {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
    Eigen::MatrixXd cov_se;       // bootstrap SE per covariance entry
    Eigen::VectorXd mean_se;      // bootstrap SE per mean entry
};

inline Moments empirical_moments(const std::vector<Eigen::VectorXd>& replicas,
                                 std::uint64_t bootstrap_seed = 0xB007,
                                 int n_resamples = 500) {
    const std::size_t n = replicas.size();
    if (n < 2) throw std::invalid_argument("empirical_moments: need at least 2 replicas");
    const Eigen::Index dim = replicas.front().size();

    Moments m;
    m.mean = Eigen::VectorXd::Zero(dim);
    for (const Eigen::VectorXd& r : replicas) m.mean += r;
    m.mean /= static_cast<double>(n);

    Eigen::MatrixXd centered(dim, static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k) centered.col(static_cast<Eigen::Index>(k)) = replicas[k] - m.mean;
    m.covariance = centered * centered.transpose() / static_cast<double>(n - 1);

    // Nonparametric bootstrap over replica indices.
    Rng rng(bootstrap_seed);
    Eigen::MatrixXd cov_sum = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::MatrixXd cov_sq_sum = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd mean_sum = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd mean_sq_sum = Eigen::VectorXd::Zero(dim);
    std::vector<int> counts(n);
    for (int b = 0; b < n_resamples; ++b) {
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t k = 0; k < n; ++k)
            counts[static_cast<std::size_t>(rng.uniform() * static_cast<double>(n))] += 1;
        Eigen::VectorXd bm = Eigen::VectorXd::Zero(dim);
        for (std::size_t k = 0; k < n; ++k)
            if (counts[k]) bm += static_cast<double>(counts[k]) * replicas[k];
        bm /= static_cast<double>(n);
        Eigen::MatrixXd bc = Eigen::MatrixXd::Zero(dim, dim);
        for (std::size_t k = 0; k < n; ++k) {
            if (!counts[k]) continue;
            Eigen::VectorXd d = replicas[k] - bm;
            bc.noalias() += static_cast<double>(counts[k]) * d * d.transpose();
        }
        bc /= static_cast<double>(n - 1);
        cov_sum += bc;
        cov_sq_sum += bc.cwiseProduct(bc);
        mean_sum += bm;
        mean_sq_sum += bm.cwiseProduct(bm);
    }
    const double inv_b = 1.0 / static_cast<double>(n_resamples);
    m.cov_se = (cov_sq_sum * inv_b - (cov_sum * inv_b).cwiseProduct(cov_sum * inv_b))
                   .cwiseMax(0.0)
                   .cwiseSqrt();
    m.mean_se = (mean_sq_sum * inv_b - (mean_sum * inv_b).cwiseProduct(mean_sum * inv_b))
                    .cwiseMax(0.0)
                    .cwiseSqrt();
    return m;
}

/// Max over sample times of the vector sup norm
/// |(f,g,h)|_inf := sup|f| + sup|g| + sup|h| (sum over compartments of the
/// per-compartment site supremum).
inline double sup_norm_error(const Trajectory<SIRState>& a, const Trajectory<SIRState>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("sup_norm_error: sample count mismatch");
    double worst = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (std::abs(a.times[k] - b.times[k]) > 1e-12)
            throw std::invalid_argument("sup_norm_error: sample times differ");
        const SIRState& x = a.states[k];
        const SIRState& y = b.states[k];
        if (!(x.grid() == y.grid())) throw std::invalid_argument("sup_norm_error: grid mismatch");
        double ds = 0.0, di = 0.0, dr = 0.0;
        for (int i = 0; i < x.grid().ell; ++i) {
            ds = std::max(ds, std::abs(x.S[i] - y.S[i]));
            di = std::max(di, std::abs(x.I[i] - y.I[i]));
            dr = std::max(dr, std::abs(x.R[i] - y.R[i]));
        }
        worst = std::max(worst, ds + di + dr);
    }
    return worst;
}

/// Truncated continuous negative-Sobolev distance between two fields.
inline double neg_sobolev_distance(const LatticeField& a, const LatticeField& b, double gamma,
                                   int M) {
    if (gamma <= 0.0) throw std::invalid_argument("neg_sobolev_distance: gamma must be positive");
    return sobolev_norm_continuous(a - b, -gamma, M);
}

/// Least-squares slope of log y against log x.
inline double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 3)
        throw std::invalid_argument("loglog_slope: need >= 3 matched points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(xs.size());
    for (std::size_t k = 0; k < xs.size(); ++k) {
        if (xs[k] <= 0.0 || ys[k] <= 0.0)
            throw std::invalid_argument("loglog_slope: data must be positive");
        const double lx = std::log(xs[k]);
        const double ly = std::log(ys[k]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Jarque-Bera normality test at significance 0.01 (chi-square(2) critical
/// value 9.21). Zero-variance samples are flagged degenerate, not an error.
struct NormalityResult {
    double statistic = 0.0;
    bool pass = false;
    bool degenerate = false;
};

inline NormalityResult normality_test(const std::vector<double>& samples) {
    if (samples.size() < 500)
        throw std::invalid_argument("normality_test: need at least 500 samples");
    const double n = static_cast<double>(samples.size());
    double mean = 0.0;
    for (double v : samples) mean += v;
    mean /= n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : samples) {
        const double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    NormalityResult res;
    if (m2 <= 0.0) {
        res.degenerate = true;
        return res;
    }
    const double skew = m3 / std::pow(m2, 1.5);
    const double kurt = m4 / (m2 * m2);
    res.statistic = n * (skew * skew / 6.0 + (kurt - 3.0) * (kurt - 3.0) / 24.0);
    res.pass = res.statistic <= 9.21;
    return res;
}

}  // namespace sirlab
