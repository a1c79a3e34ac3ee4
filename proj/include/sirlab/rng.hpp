/// @file rng.hpp
/// @brief Deterministic random number generation with a fixed cross-platform contract.
///
/// All stochastic modules draw from Splitmix64 streams. The generator, the
/// uniform/normal conversions, and the replica seed derivation below are the
/// reproducibility contract of the whole tool: identical (seed, inputs) must
/// give bit-identical outputs on any conforming platform.

#pragma once

#include <cmath>
#include <cstdint>

namespace sirlab {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ull;

/// One Splitmix64 step: advances the state by the golden gamma and returns
/// the mixed output (Steele, Lea & Flood mixing constants).
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += kGoldenGamma);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Replica seed derivation: seed_k = Splitmix64(master_seed XOR k * golden_gamma).
/// This is the documented splitting rule; replicas get disjoint streams for
/// any (master_seed, index) pair used in practice.
inline std::uint64_t derive_replica_seed(std::uint64_t master_seed, std::uint64_t replica_index) {
    std::uint64_t s = master_seed ^ (replica_index * kGoldenGamma);
    return splitmix64_next(s);
}

/// Splitmix64-backed generator with fixed uniform and normal conversions.
///
/// - uniform():   next_u64 >> 11, scaled by 2^-53, in [0, 1).
/// - exponential(): -log(1 - uniform()), one uniform per draw.
/// - normal():    Box-Muller; consumes two uniforms per pair, second value
///                cached, so draw parity is part of the stream contract.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64_next(state_); }

    /// Uniform double in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Standard exponential variate (mean 1), strictly positive.
    double exponential() {
        return -std::log1p(-uniform());
    }

    /// Standard normal variate via Box-Muller.
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(theta);
        has_cached_ = true;
        return r * std::cos(theta);
    }

private:
    std::uint64_t state_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace sirlab
