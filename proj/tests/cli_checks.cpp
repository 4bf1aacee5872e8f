// Drives the command-line binary end to end: exit codes, file outputs,
// determinism of re-runs. The binary path arrives via VPSTAB_BIN.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code;
    std::string output;
};

RunResult run(const std::string& args) {
    const char* bin = std::getenv("VPSTAB_BIN");
    REQUIRE(bin != nullptr);
    const std::string cmd = std::string(bin) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    char buf[512];
    while (fgets(buf, sizeof buf, pipe)) out += buf;
    const int status = pclose(pipe);
    return {WEXITSTATUS(status), out};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(f), {});
}

const fs::path work = fs::temp_directory_path() / "vpstab_cli_checks";

}  // namespace

TEST_CASE("build-steady writes state files and reruns bit-identically") {
    fs::remove_all(work);
    fs::create_directories(work);
    const auto r = run("build-steady --k 1 --mass 1 --out " + (work / "s1").string());
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("h_M") != std::string::npos);
    CHECK(fs::exists(work / "s1" / "steady.json"));
    CHECK(fs::exists(work / "s1" / "steady_profile.csv"));
    CHECK(fs::exists(work / "s1" / "manifest.json"));
    // h_M < 0 in the header
    const std::string js = slurp(work / "s1" / "steady.json");
    CHECK(js.find("\"h_M\": -") != std::string::npos);

    const auto r2 = run("build-steady --k 1 --mass 1 --out " + (work / "s2").string());
    CHECK(r2.exit_code == 0);
    CHECK(slurp(work / "s1" / "steady_profile.csv") == slurp(work / "s2" / "steady_profile.csv"));
}

TEST_CASE("parameter validation exits with the usage code") {
    CHECK(run("build-steady --k 2 --mass 1 --out " + (work / "bad").string()).exit_code == 2);
    CHECK(run("definitely-not-a-command").exit_code == 2);
}

TEST_CASE("malformed stability config: exit 2, no partial outputs") {
    fs::create_directories(work);
    std::ofstream(work / "broken.json") << "{ this is not json";
    const auto r = run("stability " + (work / "broken.json").string());
    CHECK(r.exit_code == 2);

    std::ofstream(work / "invalid.json") << R"({
      "steady": {"k": 2.5, "M": 1.0},
      "perturbation": {"kind": "boost", "V": [0.1,0,0]},
      "integrator": {"dt_tdyn": 0.005},
      "N": 1000, "seed": 1, "horizon_tdyn": 1.0, "cadence_tdyn": 0.5,
      "output_dir": ")" << (work / "never_created").string() << R"("
    })";
    const auto r2 = run("stability " + (work / "invalid.json").string());
    CHECK(r2.exit_code == 2);
    CHECK(r2.output.find("steady.k") != std::string::npos);
    CHECK_FALSE(fs::exists(work / "never_created"));
}

TEST_CASE("verify --list enumerates the criteria") {
    const auto r = run("verify --list");
    CHECK(r.exit_code == 0);
    for (const char* frag : {"steady", "functionals", "conservation", "stability",
                             "concentration", "h_M"})
        CHECK(r.output.find(frag) != std::string::npos);
}

TEST_CASE("sample then concentration") {
    fs::create_directories(work);
    const auto s = run("sample --k 1 --mass 1 --n 2000 --seed 5 --antithetic --out " +
                       (work / "snap.csv").string());
    CHECK(s.exit_code == 0);
    CHECK(fs::exists(work / "snap.csv"));
    const auto c = run("concentration --snapshot " + (work / "snap.csv").string() +
                       " --radii 0.01,0.05,0.2 --out " + (work / "conc.csv").string());
    CHECK(c.exit_code == 0);
    const std::string conc = slurp(work / "conc.csv");
    CHECK(conc.rfind("radius,mass", 0) == 0);
}

TEST_CASE("short frozen-field evolve run") {
    const auto r = run("evolve --k 1 --mass 1 --n 500 --seed 9 --method frozen "
                       "--t-tdyn 0.5 --dt-tdyn 0.01 --cadence-tdyn 0.25 --out " +
                       (work / "ev").string());
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(work / "ev" / "metrics.csv"));
    CHECK(fs::exists(work / "ev" / "snapshot_final.csv"));
    const std::string metrics = slurp(work / "ev" / "metrics.csv");
    CHECK(metrics.rfind("t,a_x,a_y,a_z,e_kin,e_pot,casimir,h_c,p,d,field_dist", 0) == 0);
}

TEST_CASE("tiny stability experiment end to end") {
    fs::create_directories(work);
    std::ofstream(work / "exp.json") << R"({
      "steady": {"k": 1.0, "M": 1.0},
      "perturbation": {"kind": "boost", "V": [0.05, 0, 0]},
      "integrator": {"dt_tdyn": 0.01, "softening": "auto", "method": "direct"},
      "N": 1000, "seed": 3, "horizon_tdyn": 0.5, "cadence_tdyn": 0.25,
      "log_level": "quiet",
      "output_dir": ")" << (work / "exp_out").string() << R"("
    })";
    const auto r = run("stability " + (work / "exp.json").string());
    CHECK(r.exit_code == 0);
    for (const char* f : {"manifest.json", "metrics.csv", "concentration.csv",
                          "snapshot_initial.csv", "snapshot_final.csv"})
        CHECK(fs::exists(work / "exp_out" / f));
    const std::string manifest = slurp(work / "exp_out" / "manifest.json");
    CHECK(manifest.find("\"status\": \"completed\"") != std::string::npos);
    CHECK(manifest.find("\"outputs\"") != std::string::npos);
}
