#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#ifndef SPEQ_CLI_PATH
#error "SPEQ_CLI_PATH must point at the speq binary"
#endif

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output;
};

RunResult run(const std::string& args) {
    std::string cmd = std::string(SPEQ_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    RunResult result;
    std::array<char, 4096> buf;
    while (std::size_t got = fread(buf.data(), 1, buf.size(), pipe)) result.output.append(buf.data(), got);
    int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("solve emits the JSON record") {
    RunResult r = run("solve --gamma 1 --sigma identity --p 10 --z -1");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("\"c_re\":-1.618033988749895") != std::string::npos);
    CHECK(r.output.find("\"branch\":\"real-negative\"") != std::string::npos);
    CHECK(r.output.find("\"kF\":0.25") != std::string::npos);
}

TEST_CASE("solve rejects z = 0 with a usage error") {
    RunResult r = run("solve --z 0");
    CHECK(r.exit_code == 1);
    CHECK(r.output.find("error: invalid spectral parameter") != std::string::npos);
}

TEST_CASE("solve upper-half branch") {
    RunResult r = run("solve --gamma 1 --p 4 --z 0 --z-im 1");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("\"branch\":\"upper-half\"") != std::string::npos);
    CHECK(r.output.find("\"kF\":0.5") != std::string::npos);
}

TEST_CASE("freeconv round trip passes the stieltjes check") {
    RunResult r = run("--output /tmp/speq_cli_fc freeconv --gamma 1 --sigma identity --p 1 "
                      "--grid-size 256 --stieltjes-check");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("stieltjes-check: ok") != std::string::npos);
    std::string density = slurp("/tmp/speq_cli_fc/density.csv");
    CHECK(density.substr(0, 10) == "x,f,atom0\n");
    std::string cdf = slurp("/tmp/speq_cli_fc/cdf.csv");
    CHECK(cdf.substr(0, 4) == "t,F\n");
}

TEST_CASE("byte-identical outputs for identical seeds") {
    RunResult a = run("--seed 7 --output /tmp/speq_cli_d1 freeconv --gamma 0.5 --p 1 --grid-size 128");
    RunResult b = run("--seed 7 --output /tmp/speq_cli_d2 freeconv --gamma 0.5 --p 1 --grid-size 128");
    CHECK(a.exit_code == 0);
    CHECK(b.exit_code == 0);
    CHECK(slurp("/tmp/speq_cli_d1/density.csv") == slurp("/tmp/speq_cli_d2/density.csv"));

    RunResult s1 = run("--seed 9 solve --gamma 0.5 --p 3 --z -0.7");
    RunResult s2 = run("--seed 9 solve --gamma 0.5 --p 3 --z -0.7");
    CHECK(s1.output == s2.output);
}

TEST_CASE("simulate writes spectra and binary dumps") {
    RunResult r = run("--seed 3 --output /tmp/speq_cli_sim simulate --p 8 --n 16 --replicas 2 "
                      "--dump-matrix");
    CHECK(r.exit_code == 0);
    std::string spectrum = slurp("/tmp/speq_cli_sim/spectrum_1.csv");
    CHECK(spectrum.substr(0, 4) == "t,w\n");
    std::string bin = slurp("/tmp/speq_cli_sim/matrix_0.bin");
    CHECK(bin.size() == 16 + 8 * 16 * 8);
    CHECK(bin.substr(0, 8) == "SPEQMAT1");
}

TEST_CASE("config file overrides flags") {
    {
        std::ofstream cfg("/tmp/speq_cli_cfg.txt");
        cfg << "gamma = 2.0\n";
    }
    RunResult r = run("--config /tmp/speq_cli_cfg.txt solve --gamma 1 --p 4 --z -1");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("\"gamma\":2.0") != std::string::npos);

    RunResult bad = run("--config /tmp/does_not_exist.txt solve --z -1");
    CHECK(bad.exit_code == 1);
}

TEST_CASE("ridge with eigenvalue input reports the effective ridge") {
    {
        std::ofstream eigs("/tmp/speq_cli_eigs.csv");
        eigs << "1.0\n1.0\n1.0\n";
        std::ofstream labels("/tmp/speq_cli_labels.csv");
        labels << "0.5\n-0.5\n1.0\n";
    }
    RunResult r = run("ridge --problem /tmp/speq_cli_eigs.csv --labels /tmp/speq_cli_labels.csv "
                      "--lambda 1 --features 3");
    CHECK(r.exit_code == 0);
    // d = 1, N = P: the golden ratio again.
    CHECK(r.output.find("\"lambda_tilde\":1.618033988749895") != std::string::npos);
    CHECK(r.output.find("\"per_x\":[]") != std::string::npos);
}

TEST_CASE("kolmogorov rate study with the universality probe") {
    RunResult r = run("--seed 2 --output /tmp/speq_cli_kol kolmogorov --gamma 0.5 --nmax 256 "
                      "--replicas 8 --compare-rademacher --gnuplot");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("[pass] Delta decays") != std::string::npos);
    CHECK(r.output.find("[pass] Rademacher Delta within 2x of Gaussian") != std::string::npos);
    std::string csv = slurp("/tmp/speq_cli_kol/kolmogorov.csv");
    CHECK(csv.find("rademacher_kolmogorov_delta,256,") != std::string::npos);
    CHECK(!slurp("/tmp/speq_cli_kol/kolmogorov.gp").empty());
}

TEST_CASE("unknown flags give a usage error") {
    RunResult r = run("solve --no-such-flag 3");
    CHECK(r.exit_code != 0);
}
