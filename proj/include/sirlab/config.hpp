/// @file config.hpp
/// @brief Experiment configuration (strict JSON schema) and run manifests.
///
/// Unknown keys are rejected at every level so typos cannot silently change
/// an experiment. All downstream constraints (parity, positivity, step
/// guard, nesting) are re-validated here at parse time.

#pragma once

#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sirlab/deterministic.hpp"
#include "sirlab/grid.hpp"
#include "sirlab/io.hpp"
#include "sirlab/rng.hpp"
#include "sirlab/spectral.hpp"

namespace sirlab {

inline constexpr const char* kToolVersion = "sirlab 0.1.0";

struct ExperimentConfig {
    int ell = 11;
    std::int64_t N = 100000;
    double T = 1.0;
    double h = 1e-3;
    std::string preset_name = "standard";
    PresetSpec preset;
    int replicas = 20;
    std::uint64_t master_seed = 0;
    int truncation_M = 64;
    double gamma = 2.0;
    int jobs = 0;  // 0 = all available cores
    bool paper_literal_drift = false;
    int surrogate_ell = 81;
    std::string output_dir = "out";
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj, const std::vector<std::string>& known,
                                const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const std::string& k : known)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok)
            throw std::invalid_argument("config: unknown key \"" + it.key() + "\" in " + where);
    }
}

template <class T>
T require_key(const nlohmann::json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key))
        throw std::invalid_argument("config: missing key \"" + key + "\" in " + where);
    try {
        return obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw std::invalid_argument("config: key \"" + key + "\" in " + where + " has wrong type");
    }
}

}  // namespace detail

/// Parse and validate a config document. Throws std::invalid_argument with
/// an explanatory message on any violation.
inline ExperimentConfig parse_config(const nlohmann::json& doc) {
    detail::reject_unknown_keys(doc,
                                {"grid", "population", "horizon", "steps", "preset", "replicas",
                                 "master_seed", "truncation_M", "gamma", "jobs",
                                 "paper_literal_drift", "surrogate_ell", "output"},
                                "top level");
    ExperimentConfig cfg;

    const nlohmann::json& grid = doc.at("grid");
    detail::reject_unknown_keys(grid, {"ell"}, "grid");
    cfg.ell = detail::require_key<int>(grid, "ell", "grid");
    make_grid(cfg.ell);  // parity / minimum-size validation

    const nlohmann::json& pop = doc.at("population");
    detail::reject_unknown_keys(pop, {"N"}, "population");
    cfg.N = detail::require_key<std::int64_t>(pop, "N", "population");
    if (cfg.N < 1 || cfg.N > 1000000000)
        throw std::invalid_argument("config: population.N must be in [1, 1e9]");

    const nlohmann::json& hor = doc.at("horizon");
    detail::reject_unknown_keys(hor, {"T"}, "horizon");
    cfg.T = detail::require_key<double>(hor, "T", "horizon");
    if (!(cfg.T > 0.0)) throw std::invalid_argument("config: horizon.T must be positive");

    const nlohmann::json& steps = doc.at("steps");
    detail::reject_unknown_keys(steps, {"h"}, "steps");
    cfg.h = detail::require_key<double>(steps, "h", "steps");
    if (!(cfg.h > 0.0)) throw std::invalid_argument("config: steps.h must be positive");

    const nlohmann::json& preset = doc.at("preset");
    detail::reject_unknown_keys(preset,
                                {"name", "b0", "a0", "b_mod", "a_mod", "s0_base", "s0_amp",
                                 "i0_base", "i0_amp", "mu_S", "mu_I", "mu_R"},
                                "preset");
    cfg.preset_name = detail::require_key<std::string>(preset, "name", "preset");
    if (cfg.preset_name != "standard")
        throw std::invalid_argument("config: unknown preset \"" + cfg.preset_name + "\"");
    cfg.preset.b0 = detail::require_key<double>(preset, "b0", "preset");
    cfg.preset.a0 = detail::require_key<double>(preset, "a0", "preset");
    cfg.preset.b_mod = preset.value("b_mod", 0.5);
    cfg.preset.a_mod = preset.value("a_mod", 0.5);
    cfg.preset.s0_base = detail::require_key<double>(preset, "s0_base", "preset");
    cfg.preset.s0_amp = detail::require_key<double>(preset, "s0_amp", "preset");
    cfg.preset.i0_base = detail::require_key<double>(preset, "i0_base", "preset");
    cfg.preset.i0_amp = detail::require_key<double>(preset, "i0_amp", "preset");
    cfg.preset.mu_S = detail::require_key<double>(preset, "mu_S", "preset");
    cfg.preset.mu_I = detail::require_key<double>(preset, "mu_I", "preset");
    cfg.preset.mu_R = detail::require_key<double>(preset, "mu_R", "preset");
    if (cfg.preset.b0 < 0.0 || cfg.preset.a0 < 0.0)
        throw std::invalid_argument("config: preset rates must be nonnegative");
    if (std::abs(cfg.preset.b_mod) > 1.0 || std::abs(cfg.preset.a_mod) > 1.0)
        throw std::invalid_argument("config: preset modulations must lie in [-1, 1]");
    if (cfg.preset.mu_S <= 0.0 || cfg.preset.mu_I <= 0.0 || cfg.preset.mu_R <= 0.0)
        throw std::invalid_argument("config: diffusivities must be positive");
    if (cfg.preset.s0_base - std::abs(cfg.preset.s0_amp) <= 0.0)
        throw std::invalid_argument("config: s(0,.) must have a positive floor");
    if (cfg.preset.i0_base - std::abs(cfg.preset.i0_amp) < 0.0)
        throw std::invalid_argument("config: i(0,.) must be nonnegative");
    const double a0_floor = 1.0 - cfg.preset.s0_base - std::abs(cfg.preset.s0_amp) -
                            cfg.preset.i0_base - std::abs(cfg.preset.i0_amp);
    if (a0_floor < 0.0)
        throw std::invalid_argument("config: r(0,.) = 1 - s - i must stay nonnegative");

    cfg.replicas = detail::require_key<int>(doc, "replicas", "top level");
    if (cfg.replicas < 1) throw std::invalid_argument("config: replicas must be >= 1");
    cfg.master_seed = detail::require_key<std::uint64_t>(doc, "master_seed", "top level");
    cfg.truncation_M = detail::require_key<int>(doc, "truncation_M", "top level");
    if (cfg.truncation_M < 2 || cfg.truncation_M % 2 != 0 || cfg.truncation_M > kMaxTruncation)
        throw std::invalid_argument("config: truncation_M must be even, >= 2, <= cap");
    cfg.gamma = detail::require_key<double>(doc, "gamma", "top level");
    if (!(cfg.gamma > 0.0)) throw std::invalid_argument("config: gamma must be positive");
    cfg.jobs = doc.value("jobs", 0);
    if (cfg.jobs < 0) throw std::invalid_argument("config: jobs must be >= 0");
    cfg.paper_literal_drift = doc.value("paper_literal_drift", false);
    cfg.surrogate_ell = doc.value("surrogate_ell", 81);
    make_grid(cfg.surrogate_ell);
    if (cfg.surrogate_ell % cfg.ell != 0)
        throw std::invalid_argument("config: surrogate_ell must be an odd multiple of grid.ell");
    if (doc.contains("output")) cfg.output_dir = doc.at("output").get<std::string>();

    // Step guard for the configured grid.
    const double guard = 0.1 * (1.0 / static_cast<double>(cfg.ell)) /
                         static_cast<double>(cfg.ell) /
                         std::max({cfg.preset.mu_S, cfg.preset.mu_I, cfg.preset.mu_R});
    if (cfg.h > guard * (1.0 + 1e-12))
        throw std::invalid_argument("config: steps.h violates h <= 0.1 eps^2 / max(mu) = " +
                                    std::to_string(guard));
    return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("config: JSON parse error in " + path.string() + ": " +
                                    e.what());
    }
    return parse_config(doc);
}

/// FNV-1a 64-bit hash of the canonical (sorted-key) config rendering.
inline std::uint64_t config_hash(const nlohmann::json& doc) {
    const std::string canon = doc.dump();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : canon) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

/// Run manifest: written into the output directory before any result file.
/// Re-running with the same config and seed reproduces every listed output
/// bit-identically (the manifest itself carries the timestamp).
struct RunManifest {
    std::uint64_t config_hash = 0;
    std::string tool_version = kToolVersion;
    std::string created_at_utc;
    std::uint64_t master_seed = 0;
    std::vector<std::uint64_t> replica_seeds;
    std::vector<std::string> outputs;
};

inline RunManifest make_manifest(const nlohmann::json& config_doc, std::uint64_t master_seed,
                                 int replicas, std::vector<std::string> outputs) {
    RunManifest m;
    m.config_hash = config_hash(config_doc);
    m.master_seed = master_seed;
    for (int r = 0; r < replicas; ++r)
        m.replica_seeds.push_back(derive_replica_seed(master_seed, static_cast<std::uint64_t>(r)));
    m.outputs = std::move(outputs);
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&tt));
    m.created_at_utc = buf;
    return m;
}

inline void write_manifest(const std::filesystem::path& dir, const RunManifest& m) {
    nlohmann::json doc;
    doc["config_hash"] = m.config_hash;
    doc["tool_version"] = m.tool_version;
    doc["created_at_utc"] = m.created_at_utc;
    doc["master_seed"] = m.master_seed;
    doc["replica_seeds"] = m.replica_seeds;
    doc["outputs"] = m.outputs;
    std::ofstream out = open_output(dir / "manifest.json");
    out << doc.dump(2) << '\n';
}

}  // namespace sirlab
