#include <catch2/catch_amalgamated.hpp>

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "sirlab/rng.hpp"
#include "sirlab/spectral.hpp"

using namespace sirlab;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* kBin = SIRLAB_BIN_PATH;

int run_cli(const std::string& args) {
    const std::string cmd = std::string(kBin) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

fs::path write_small_config(const fs::path& dir, int ell = 5, int replicas = 3) {
    fs::create_directories(dir);
    json doc = {
        {"grid", {{"ell", ell}}},
        {"population", {{"N", 2000}}},
        {"horizon", {{"T", 0.2}}},
        {"steps", {{"h", 0.002}}},
        {"preset",
         {{"name", "standard"},
          {"b0", 0.8},
          {"a0", 0.4},
          {"s0_base", 0.6},
          {"s0_amp", 0.1},
          {"i0_base", 0.05},
          {"i0_amp", 0.01},
          {"mu_S", 0.12},
          {"mu_I", 0.08},
          {"mu_R", 0.1}}},
        {"replicas", replicas},
        {"master_seed", 777},
        {"truncation_M", 64},
        {"gamma", 2.0},
        {"jobs", 2},
        {"surrogate_ell", ell * 3},
        {"output", (dir / "out").string()}};
    fs::path cfg = dir / "config.json";
    std::ofstream(cfg) << doc.dump(2);
    return cfg;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("unknown subcommand and malformed config exit distinctly", "[cli]") {
    const fs::path dir = fs::temp_directory_path() / "sirlab_cli_err";
    fs::remove_all(dir);
    fs::path cfg = write_small_config(dir);

    REQUIRE(run_cli("frobnicate --config " + cfg.string()) == 3);
    REQUIRE(run_cli("") == 3);

    // Even ell: invalid config, exit 4, message mentions parity.
    json doc = json::parse(slurp(cfg));
    doc["grid"]["ell"] = 4;
    fs::path bad = dir / "bad.json";
    std::ofstream(bad) << doc.dump();
    const std::string cmd =
        std::string(kBin) + " spectra --config " + bad.string() + " 2>" + (dir / "err.txt").string();
    REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 4);
    REQUIRE(slurp(dir / "err.txt").find("odd") != std::string::npos);

    REQUIRE(run_cli("spectra --config " + (dir / "missing.json").string()) == 4);
    fs::remove_all(dir);
}

TEST_CASE("spectra emits modes matching the discrete eigenvalues", "[cli]") {
    const fs::path dir = fs::temp_directory_path() / "sirlab_cli_spectra";
    fs::remove_all(dir);
    fs::path cfg = write_small_config(dir);
    REQUIRE(run_cli("spectra --config " + cfg.string()) == 0);

    std::ifstream modes(dir / "out" / "modes.csv");
    REQUIRE(modes.good());
    std::string header;
    std::getline(modes, header);
    REQUIRE(header == "m,kind,lambda_eps,lambda_continuous");
    GridSpec g = make_grid(5);
    int rows = 0;
    std::string line;
    while (std::getline(modes, line)) {
        ++rows;
        const auto c1 = line.find(','), c2 = line.find(',', line.find(',') + 1);
        const int m = std::stoi(line.substr(0, c1));
        const double lam = std::stod(line.substr(c2 + 1, line.find(',', c2 + 1) - c2 - 1));
        REQUIRE(lam == Catch::Approx(eigenvalue_discrete(m, g)).margin(1e-12));
    }
    REQUIRE(rows == 5);
    fs::remove_all(dir);
}

TEST_CASE("every output is listed in the manifest, no orphans", "[cli]") {
    const fs::path dir = fs::temp_directory_path() / "sirlab_cli_manifest";
    fs::remove_all(dir);
    fs::path cfg = write_small_config(dir);
    REQUIRE(run_cli("simulate-jump --config " + cfg.string() + " --events") == 0);

    json manifest = json::parse(slurp(dir / "out" / "manifest.json"));
    std::set<std::string> listed;
    for (const auto& o : manifest.at("outputs")) listed.insert(o.get<std::string>());
    std::set<std::string> present;
    for (const auto& entry : fs::directory_iterator(dir / "out")) {
        const std::string name = entry.path().filename().string();
        if (name != "manifest.json") present.insert(name);
    }
    REQUIRE(listed == present);
    REQUIRE(manifest.at("replica_seeds").size() == 3);
    fs::remove_all(dir);
}

TEST_CASE("simulate-ode and fluctuations write the documented formats", "[cli]") {
    const fs::path dir = fs::temp_directory_path() / "sirlab_cli_fmt";
    fs::remove_all(dir);
    fs::path cfg = write_small_config(dir);

    REQUIRE(run_cli("simulate-ode --config " + cfg.string()) == 0);
    {
        std::ifstream t(dir / "out" / "trajectory.csv");
        std::string header;
        std::getline(t, header);
        REQUIRE(header == "t,site,S,I,R");
    }
    REQUIRE(run_cli("fluctuations --config " + cfg.string()) == 0);
    {
        std::ifstream t(dir / "out" / "psi.csv");
        std::string header;
        std::getline(t, header);
        REQUIRE(header == "replica,t,site,U,V,W");
    }
    REQUIRE(run_cli("spde --config " + cfg.string()) == 0);
    {
        std::ifstream t(dir / "out" / "spde.csv");
        std::string header;
        std::getline(t, header);
        REQUIRE(header == "replica,t,site,u,v,w,ubar,vbar,wbar");
    }
    fs::remove_all(dir);
}

TEST_CASE("reruns with the same seed are bit-identical; SIRLAB_SEED overrides", "[cli]") {
    const fs::path dir = fs::temp_directory_path() / "sirlab_cli_repro";
    fs::remove_all(dir);
    fs::path cfg = write_small_config(dir);

    REQUIRE(run_cli("simulate-jump --config " + cfg.string() + " --out " + (dir / "a").string()) ==
            0);
    REQUIRE(run_cli("simulate-jump --config " + cfg.string() + " --out " + (dir / "b").string()) ==
            0);
    REQUIRE(slurp(dir / "a" / "jump.csv") == slurp(dir / "b" / "jump.csv"));

    const std::string env_cmd = "SIRLAB_SEED=999 " + std::string(kBin) + " simulate-jump --config " +
                                cfg.string() + " --out " + (dir / "c").string() +
                                " >/dev/null 2>&1";
    REQUIRE(WEXITSTATUS(std::system(env_cmd.c_str())) == 0);
    REQUIRE(slurp(dir / "a" / "jump.csv") != slurp(dir / "c" / "jump.csv"));
    json mc = json::parse(slurp(dir / "c" / "manifest.json"));
    REQUIRE(mc.at("master_seed") == 999);
    fs::remove_all(dir);
}
