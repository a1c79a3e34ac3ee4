/// Acceptance suite driver. Runs `sirlab verify-all` twice with the same
/// seed, reports one PASS/FAIL line per criterion (1-8 from the verdicts of
/// the first run, 9 from byte-comparing the two runs' CSV outputs), and
/// exits nonzero if any criterion fails.
///
/// Usage: sirlab_acceptance <path-to-sirlab-cli> <path-to-config>

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

int run_verify_all(const std::string& bin, const std::string& config, const fs::path& outdir,
                   const fs::path& log) {
    const std::string cmd = bin + " verify-all --config " + config + " --out " + outdir.string() +
                            " >" + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 3) {
        std::fprintf(stderr, "usage: sirlab_acceptance <sirlab-cli> <config.json>\n");
        return 1;
    }
    const std::string bin = argv[1];
    const std::string config = argv[2];

    const fs::path base = fs::temp_directory_path() / "sirlab_acceptance";
    const fs::path dir_a = base / "run_a";
    const fs::path dir_b = base / "run_b";
    std::error_code ec;
    fs::remove_all(base, ec);
    fs::create_directories(dir_a);
    fs::create_directories(dir_b);

    const auto t0 = std::chrono::steady_clock::now();
    const int code_a = run_verify_all(bin, config, dir_a, base / "run_a.log");
    const auto t1 = std::chrono::steady_clock::now();
    const int code_b = run_verify_all(bin, config, dir_b, base / "run_b.log");
    const auto t2 = std::chrono::steady_clock::now();

    auto secs = [](auto from, auto to) {
        return std::chrono::duration_cast<std::chrono::seconds>(to - from).count();
    };
    std::printf("verify-all run A: exit %d in %llds; run B: exit %d in %llds\n", code_a,
                static_cast<long long>(secs(t0, t1)), code_b,
                static_cast<long long>(secs(t1, t2)));
    if ((code_a != 0 && code_a != 2) || (code_b != 0 && code_b != 2)) {
        std::fprintf(stderr, "acceptance: verify-all did not run cleanly (see %s)\n",
                     (base / "run_a.log").string().c_str());
        std::printf("%s\n", slurp(base / "run_a.log").c_str());
        return 1;
    }

    // Criteria 1-8 from the verdicts of run A.
    json verdicts;
    try {
        verdicts = json::parse(slurp(dir_a / "verdicts.json"));
    } catch (const std::exception& e) {
        std::fprintf(stderr, "acceptance: cannot parse verdicts.json: %s\n", e.what());
        return 1;
    }
    std::map<int, bool> criterion_pass;
    std::map<int, std::string> criterion_detail;
    for (const auto& v : verdicts.at("criteria")) {
        const int c = v.at("criterion").get<int>();
        const bool pass = v.at("pass").get<bool>();
        auto [it, inserted] = criterion_pass.emplace(c, pass);
        if (!inserted) it->second = it->second && pass;
        if (!pass)
            criterion_detail[c] += v.at("name").get<std::string>() + ": " +
                                   v.at("statistic").get<std::string>() + " outside " +
                                   v.at("band").get<std::string>() + "; ";
    }

    static const char* kNames[9] = {"operator identities",
                                    "spectral correctness",
                                    "deterministic integrity",
                                    "LLN slope",
                                    "fixed-grid CLT covariance",
                                    "Gaussianity (Jarque-Bera)",
                                    "martingale bracket convergence",
                                    "limit SPDE pipeline",
                                    "bit-identical reruns"};

    int passed = 0;
    for (int c = 1; c <= 8; ++c) {
        const bool ok = criterion_pass.count(c) ? criterion_pass.at(c) : false;
        std::printf("%s criterion %d (%s)%s%s\n", ok ? "PASS" : "FAIL", c, kNames[c - 1],
                    ok ? "" : " -- ", ok ? "" : criterion_detail[c].c_str());
        if (ok) ++passed;
    }

    // Criterion 9: identical exit codes and byte-identical CSV outputs.
    bool repro = (code_a == code_b);
    std::string repro_detail;
    std::set<fs::path> names;
    for (const auto& e : fs::directory_iterator(dir_a))
        if (e.path().extension() == ".csv" || e.path().filename() == "verdicts.json")
            names.insert(e.path().filename());
    if (names.empty()) {
        repro = false;
        repro_detail = "no CSV outputs found; ";
    }
    for (const fs::path& name : names) {
        if (!fs::exists(dir_b / name)) {
            repro = false;
            repro_detail += name.string() + " missing in run B; ";
            continue;
        }
        if (slurp(dir_a / name) != slurp(dir_b / name)) {
            repro = false;
            repro_detail += name.string() + " differs; ";
        }
    }
    std::printf("%s criterion 9 (%s)%s%s\n", repro ? "PASS" : "FAIL", kNames[8],
                repro ? "" : " -- ", repro_detail.c_str());
    if (repro) ++passed;

    std::printf("acceptance: %d/9 criteria pass\n", passed);
    return passed == 9 ? 0 : 2;
}
