#include "support.hpp"

#include "gridmomentum/cli.hpp"

#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using gridmomentum::run_cli;

namespace {

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("gridmomentum_cli_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

}  // namespace

TEST_CASE("validate accepts the shipped cases") {
    for (const char* name : {"two_machine.json", "two_machine_cig.json", "ieee39_classical.json"})
        CHECK(run_cli({"gridmomentum", "validate", "--case", testsupport::data_path(name)}) == 0);
}

TEST_CASE("malformed input exits with 1") {
    const auto dir = scratch("bad");
    fs::create_directories(dir);
    {
        std::ofstream f(dir / "bad.json");
        f << R"({"name":"bad","slack":"G","buses":[{"id":1,"base_kv":20}],
                "machines":[{"id":"G","bus":4,"H":3,"S_B":50}]})";
    }
    CHECK(run_cli({"gridmomentum", "validate", "--case", (dir / "bad.json").string()}) == 1);
    CHECK(run_cli({"gridmomentum", "validate"}) == 1);
    CHECK(run_cli({"gridmomentum", "frobnicate"}) == 1);
    CHECK(run_cli({"gridmomentum", "estimate", "--case", testsupport::data_path("two_machine_cig.json"), "--band",
                   "0.03:0.01"}) == 1);
}

TEST_CASE("freq-scan estimate writes its artifacts") {
    const auto dir = scratch("estimate");
    REQUIRE(run_cli({"gridmomentum", "estimate", "--mode", "freq-scan", "--case",
                     testsupport::data_path("two_machine_cig.json"), "--out", dir.string()}) == 0);
    CHECK(fs::exists(dir / "estimate.json"));
    CHECK(fs::exists(dir / "estimate_manifest.json"));
    CHECK(slurp(dir / "estimate.json").find("\"G_hat_MJ\"") != std::string::npos);
}

TEST_CASE("every subcommand runs on the small case") {
    const auto c = testsupport::data_path("two_machine_cig.json");
    const auto dir = scratch("all");
    const auto out = dir.string();
    CHECK(run_cli({"gridmomentum", "powerflow", "--case", c, "--out", out}) == 0);
    CHECK(run_cli({"gridmomentum", "linearize", "--case", c, "--out", out}) == 0);
    CHECK(run_cli({"gridmomentum", "freqscan", "--case", c, "--out", out, "--points", "20"}) == 0);
    CHECK(run_cli({"gridmomentum", "simulate", "--case", c, "--out", out, "--duration", "5", "--noise", "on"}) == 0);
    CHECK(run_cli({"gridmomentum", "vf-fit", "--samples", (dir / "freqscan.csv").string(), "--select", "CIG1",
                   "--out", out}) == 0);
    CHECK(fs::exists(dir / "model.json"));
    CHECK(run_cli({"gridmomentum", "batch", "--case", c, "--out", out, "--runs", "3"}) == 0);
    CHECK(run_cli({"gridmomentum", "two-machine", "--case", testsupport::data_path("two_machine.json"), "--out",
                   out}) == 0);
}

TEST_CASE("seeded runs are byte-identical") {
    const auto c = testsupport::data_path("two_machine_cig.json");
    const auto a = scratch("det_a"), b = scratch("det_b");
    for (const auto& d : {a, b})
        REQUIRE(run_cli({"gridmomentum", "simulate", "--case", c, "--out", d.string(), "--duration", "900", "--record-every", "50", "--noise",
                         "on", "--seed", "5", "--probe"}) == 0);
    CHECK(slurp(a / "trajectory.csv") == slurp(b / "trajectory.csv"));
}
